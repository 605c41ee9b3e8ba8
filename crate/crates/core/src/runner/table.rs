//! Results and aggregated tables, persisted as CSV.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::grid::Axis;
use crate::effort::{effort_dc, effort_qd};
use crate::error::{Error, Result};
use crate::metrics::median;
use crate::trajectory::normalize;

/// Successful runs a cell needs for its median; fewer when the grid has fewer repeats.
pub const MIN_SUCCESSFUL_SEEDS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Ok,
    Failed,
}

/// One run; column order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub dataset_id: String,
    pub axis: Axis,
    pub diversity: f64,
    pub completeness: f64,
    /// Empty when the cell fixes the slice step instead.
    pub quality_target: Option<f64>,
    /// Percent.
    pub quality_achieved: Option<f64>,
    pub slice_step: Option<usize>,
    pub seed: u64,
    pub perf_raw: Option<f64>,
    pub best_epoch: Option<usize>,
    pub status: RunStatus,
}

/// One cell, aggregated over its seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedRow {
    pub dataset_id: String,
    pub axis: Axis,
    pub diversity: f64,
    pub completeness: f64,
    pub quality_achieved: Option<f64>,
    pub effort_qd: Option<f64>,
    pub effort_dc: f64,
    /// Empty for cells with too few successful seeds.
    pub perf_raw_median: Option<f64>,
    pub perf_norm: Option<f64>,
    pub n_seeds: usize,
}

impl ResultRow {
    fn cell_key(&self) -> (u64, u64, Option<u64>, Option<usize>) {
        let step = if self.quality_target.is_none() { self.slice_step } else { None };
        (
            self.diversity.to_bits(),
            self.completeness.to_bits(),
            self.quality_target.map(f64::to_bits),
            step,
        )
    }

    pub fn is_baseline(&self) -> bool {
        self.diversity == 1.0 && self.completeness == 1.0 && self.quality_target == Some(100.0)
    }
}

/// Exact median of the per-seed values.
pub fn aggregate_median(values: &[f64]) -> Result<f64> {
    median(values)
}

/// Group runs by cell (first-appearance order), take medians over the
/// successful seeds and normalize by the baseline cell (1, 1, 100%).
///
/// Fails when the baseline cell is missing or has too few successful seeds.
pub fn aggregate(rows: &[ResultRow]) -> Result<Vec<AggregatedRow>> {
    if rows.is_empty() {
        return Err(Error::Empty("no result rows to aggregate"));
    }
    let mut groups: Vec<Vec<&ResultRow>> = Vec::new();
    for r in rows {
        match groups.iter_mut().find(|g| g[0].cell_key() == r.cell_key()) {
            Some(g) => g.push(r),
            None => groups.push(vec![r]),
        }
    }

    let mut out = Vec::with_capacity(groups.len());
    let mut baseline = None;
    for g in &groups {
        let ok: Vec<&&ResultRow> = g.iter().filter(|r| r.status == RunStatus::Ok).collect();
        let perf: Vec<f64> = ok.iter().filter_map(|r| r.perf_raw).collect();
        let quality: Vec<f64> = ok.iter().filter_map(|r| r.quality_achieved).collect();
        let valid = perf.len() >= MIN_SUCCESSFUL_SEEDS.min(g.len());
        let perf_raw_median = if valid { Some(aggregate_median(&perf)?) } else { None };
        let quality_achieved = if quality.is_empty() { None } else { Some(aggregate_median(&quality)?) };
        let first = g[0];
        if first.is_baseline() {
            baseline = perf_raw_median;
            if baseline.is_none() {
                return Err(Error::Invalid(format!(
                    "baseline cell has only {} successful runs out of {}",
                    perf.len(),
                    g.len()
                )));
            }
        }
        out.push(AggregatedRow {
            dataset_id: first.dataset_id.clone(),
            axis: first.axis,
            diversity: first.diversity,
            completeness: first.completeness,
            quality_achieved,
            effort_qd: quality_achieved.map(|q| effort_qd(first.diversity, q)).transpose()?,
            effort_dc: effort_dc(first.diversity, first.completeness)?,
            perf_raw_median,
            perf_norm: None,
            n_seeds: perf.len(),
        });
    }
    let baseline = baseline.ok_or_else(|| Error::Invalid("results hold no baseline cell (1, 1, 100%)".into()))?;
    for row in &mut out {
        row.perf_norm = row.perf_raw_median.map(|p| normalize(p, baseline)).transpose()?;
    }
    Ok(out)
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub const RESULTS_HEADER: &str =
    "dataset_id,axis,diversity,completeness,quality_target,quality_achieved,slice_step,seed,perf_raw,best_epoch,status";
pub const AGGREGATED_HEADER: &str =
    "dataset_id,axis,diversity,completeness,quality_achieved,effort_qd,effort_dc,perf_raw_median,perf_norm,n_seeds";

/// Read either table kind: aggregated rows directly, or raw results aggregated on the fly.
pub fn load_aggregated(path: &Path) -> Result<Vec<AggregatedRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let header = text.lines().next().unwrap_or("").trim_end();
    match header {
        AGGREGATED_HEADER => read_csv(path),
        RESULTS_HEADER => aggregate(&read_csv::<ResultRow>(path)?),
        _ => Err(Error::Invalid(format!(
            "{} is neither a results nor an aggregated table",
            path.display()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(d: f64, q: f64, seed: u64, perf: Option<f64>) -> ResultRow {
        ResultRow {
            dataset_id: "ds".into(),
            axis: Axis::QualityDiversity,
            diversity: d,
            completeness: 1.0,
            quality_target: Some(q),
            quality_achieved: Some(q),
            slice_step: Some(1),
            seed,
            perf_raw: perf,
            best_epoch: perf.map(|_| 3),
            status: if perf.is_some() { RunStatus::Ok } else { RunStatus::Failed },
        }
    }

    #[test]
    fn median_examples() {
        assert_eq!(aggregate_median(&[0.1, 0.5, 0.2, 0.9, 0.3]).unwrap(), 0.3);
        assert_eq!(aggregate_median(&[0.4]).unwrap(), 0.4);
        assert!((aggregate_median(&[0.2, 0.4]).unwrap() - 0.3).abs() < 1e-15);
        assert!(aggregate_median(&[]).is_err());
    }

    #[test]
    fn baseline_normalizes_to_one() {
        let mut rows: Vec<ResultRow> = [0.7, 0.9, 0.8, 0.6, 0.95]
            .iter()
            .enumerate()
            .map(|(i, &p)| row(1.0, 100.0, i as u64, Some(p)))
            .collect();
        rows.extend([0.4, 0.5, 0.45].iter().enumerate().map(|(i, &p)| row(0.5, 90.0, i as u64, Some(p))));
        let agg = aggregate(&rows).unwrap();
        assert_eq!(agg[0].perf_norm, Some(1.0));
        assert_eq!(agg[0].n_seeds, 5);
        assert_eq!(agg[1].perf_raw_median, Some(0.45));
        assert_eq!(agg[1].perf_norm, Some(0.45 / 0.8));
        assert_eq!(agg[1].effort_qd, Some(0.45));
        assert_eq!(agg[1].effort_dc, 0.5);
    }

    #[test]
    fn failed_seed_policy() {
        let mut rows: Vec<ResultRow> = (0..5).map(|i| row(1.0, 100.0, i, Some(0.8))).collect();
        // 3 of 5 succeed: kept
        rows.extend([Some(0.1), None, Some(0.3), None, Some(0.2)].iter().enumerate().map(|(i, &p)| row(0.5, 90.0, i as u64, p)));
        // 2 of 5 succeed: invalid
        rows.extend([None, Some(0.1), None, Some(0.3), None].iter().enumerate().map(|(i, &p)| row(0.25, 90.0, i as u64, p)));
        let agg = aggregate(&rows).unwrap();
        assert_eq!((agg[1].perf_raw_median, agg[1].n_seeds), (Some(0.2), 3));
        assert_eq!((agg[2].perf_raw_median, agg[2].perf_norm, agg[2].n_seeds), (None, None, 2));

        let broken: Vec<ResultRow> = (0..5).map(|i| row(1.0, 100.0, i, if i < 2 { Some(0.8) } else { None })).collect();
        assert!(aggregate(&broken).is_err());
        assert!(aggregate(&[row(0.5, 90.0, 0, Some(0.5))]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![row(1.0, 100.0, 0, Some(0.8)), row(0.25, 75.0, 1, None)];
        let p = dir.path().join("results.csv");
        write_csv(&p, &rows).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().next().unwrap(), RESULTS_HEADER);
        assert_eq!(read_csv::<ResultRow>(&p).unwrap(), rows);

        let agg = aggregate(&rows[..1]).unwrap();
        let a = dir.path().join("aggregated.csv");
        write_csv(&a, &agg).unwrap();
        assert_eq!(std::fs::read_to_string(&a).unwrap().lines().next().unwrap(), AGGREGATED_HEADER);
        assert_eq!(load_aggregated(&a).unwrap(), agg);
        assert_eq!(load_aggregated(&p).unwrap(), aggregate(&rows).unwrap());
    }
}
