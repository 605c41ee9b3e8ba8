//! From aggregated tables to trajectory, importance and saturation artifacts.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::effort::EffortAxis;
use crate::error::{Error, IoContext, Result};
use crate::runner::table::write_csv;
use crate::runner::AggregatedRow;
use crate::trajectory::{
    detect_saturation, importance_curves, optimal_trajectory, ImportanceSeries, PerfPoint, Trajectory, Virtue,
    VirtueSnapshot,
};

/// Virtues compared along a trajectory of the given effort definition.
pub fn compared_virtues(axis: EffortAxis) -> [Virtue; 2] {
    match axis {
        EffortAxis::QualityDiversity => [Virtue::Quality, Virtue::Diversity],
        EffortAxis::DiversityCompleteness => [Virtue::Diversity, Virtue::Completeness],
    }
}

fn snapshot(r: &AggregatedRow) -> Option<VirtueSnapshot> {
    Some(VirtueSnapshot {
        diversity: r.diversity,
        completeness: r.completeness,
        quality_pct: r.quality_achieved?,
    })
}

pub fn cell_id(r: &AggregatedRow) -> String {
    match r.quality_achieved {
        Some(q) => format!("d={} c={} q={q}", r.diversity, r.completeness),
        None => format!("d={} c={}", r.diversity, r.completeness),
    }
}

/// One point per valid cell; cells without a median are skipped.
pub fn effort_points(rows: &[AggregatedRow], axis: EffortAxis) -> Vec<PerfPoint> {
    rows.iter()
        .filter_map(|r| {
            let effort = match axis {
                EffortAxis::QualityDiversity => r.effort_qd?,
                EffortAxis::DiversityCompleteness => r.effort_dc,
            };
            Some(PerfPoint {
                effort,
                perf_norm: r.perf_norm?,
                virtues: snapshot(r),
                id: cell_id(r),
            })
        })
        .collect()
}

/// Best normalized performance per distinct virtue value, sorted by value.
/// Achieved quality varies slightly between cells aiming at the same target,
/// so it is grouped by whole percent.
pub fn envelope(rows: &[AggregatedRow], virtue: Virtue) -> Vec<(f64, f64)> {
    let mut curve: Vec<(f64, f64)> = Vec::new();
    for r in rows {
        let (Some(snap), Some(perf)) = (snapshot(r), r.perf_norm) else {
            continue;
        };
        let v = match virtue {
            Virtue::Quality => snap.quality_pct.round(),
            _ => virtue.of(&snap),
        };
        match curve.iter_mut().find(|(x, _)| *x == v) {
            Some(p) => p.1 = p.1.max(perf),
            None => curve.push((v, perf)),
        }
    }
    curve.sort_by(|a, b| a.0.total_cmp(&b.0));
    curve
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationCurve {
    pub virtue: Virtue,
    pub points: Vec<(f64, f64)>,
    pub saturation: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaturationParams {
    pub epsilon: f64,
    pub window: usize,
}

impl Default for SaturationParams {
    fn default() -> Self {
        Self {
            epsilon: crate::trajectory::DEFAULT_SATURATION_EPSILON,
            window: crate::trajectory::DEFAULT_SATURATION_WINDOW,
        }
    }
}

/// Saturation of the envelope over `virtue`, or `None` when the table holds
/// too few distinct values of it.
pub fn saturation_curve(rows: &[AggregatedRow], virtue: Virtue, params: SaturationParams) -> Result<Option<SaturationCurve>> {
    let points = envelope(rows, virtue);
    if points.len() < params.window + 1 {
        return Ok(None);
    }
    let saturation = detect_saturation(&points, params.epsilon, params.window)?;
    Ok(Some(SaturationCurve {
        virtue,
        points,
        saturation,
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub axis: EffortAxis,
    pub points: Vec<PerfPoint>,
    pub trajectory: Trajectory,
    pub importance: Vec<ImportanceSeries>,
    pub saturation: Vec<SaturationCurve>,
}

pub fn analyze(rows: &[AggregatedRow], axis: EffortAxis, params: SaturationParams) -> Result<Analysis> {
    let points = effort_points(rows, axis);
    if points.is_empty() {
        return Err(Error::Empty("no cell has a valid median"));
    }
    let trajectory = optimal_trajectory(&points)?;
    let importance = importance_curves(&trajectory, &compared_virtues(axis))?;
    let mut saturation = Vec::new();
    for v in [Virtue::Diversity, Virtue::Completeness, Virtue::Quality] {
        if let Some(c) = saturation_curve(rows, v, params)? {
            saturation.push(c);
        }
    }
    Ok(Analysis {
        axis,
        points,
        trajectory,
        importance,
        saturation,
    })
}

/// Rows of the trajectory table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub vertex: usize,
    pub effort: f64,
    pub perf_norm: f64,
    pub diversity: Option<f64>,
    pub completeness: Option<f64>,
    pub quality_achieved: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceRow {
    pub virtue: Virtue,
    pub perf_norm: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationRow {
    pub virtue: Virtue,
    pub value: f64,
    pub perf_norm: f64,
    pub saturated: bool,
}

impl Analysis {
    /// Write `trajectory_<axis>.csv`, `importance_<axis>.csv` and
    /// `saturation.csv` into `dir`; returns their paths.
    pub fn write_tables(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).at(dir)?;
        let axis = self.axis.as_str();
        let paths = [
            dir.join(format!("trajectory_{axis}.csv")),
            dir.join(format!("importance_{axis}.csv")),
            dir.join("saturation.csv"),
        ];
        write_csv(&paths[0], &self.trajectory_rows())?;
        write_csv(&paths[1], &self.importance_rows())?;
        write_csv(&paths[2], &self.saturation_rows())?;
        Ok(paths.to_vec())
    }

    pub fn trajectory_rows(&self) -> Vec<TrajectoryRow> {
        self.trajectory
            .vertices
            .iter()
            .enumerate()
            .map(|(i, v)| TrajectoryRow {
                vertex: i,
                effort: v.effort,
                perf_norm: v.perf_norm,
                diversity: v.virtues.map(|s| s.diversity),
                completeness: v.virtues.map(|s| s.completeness),
                quality_achieved: v.virtues.map(|s| s.quality_pct),
            })
            .collect()
    }

    pub fn importance_rows(&self) -> Vec<ImportanceRow> {
        self.importance
            .iter()
            .flat_map(|s| {
                s.points.iter().map(|&(perf_norm, value)| ImportanceRow {
                    virtue: s.virtue,
                    perf_norm,
                    value,
                })
            })
            .collect()
    }

    pub fn saturation_rows(&self) -> Vec<SaturationRow> {
        self.saturation
            .iter()
            .flat_map(|c| {
                c.points.iter().map(|&(value, perf_norm)| SaturationRow {
                    virtue: c.virtue,
                    value,
                    perf_norm,
                    saturated: c.saturation == Some(value),
                })
            })
            .collect()
    }
}
