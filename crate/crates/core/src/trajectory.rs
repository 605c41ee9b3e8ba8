//! Optimal labeling trajectory over (effort, normalized performance) points.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SATURATION_EPSILON: f64 = 0.01;
pub const DEFAULT_SATURATION_WINDOW: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VirtueSnapshot {
    pub diversity: f64,
    pub completeness: f64,
    pub quality_pct: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Virtue {
    Diversity,
    Completeness,
    Quality,
}

impl Virtue {
    pub fn name(self) -> &'static str {
        match self {
            Virtue::Diversity => "diversity",
            Virtue::Completeness => "completeness",
            Virtue::Quality => "quality",
        }
    }

    pub fn of(self, v: &VirtueSnapshot) -> f64 {
        match self {
            Virtue::Diversity => v.diversity,
            Virtue::Completeness => v.completeness,
            Virtue::Quality => v.quality_pct,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerfPoint {
    pub effort: f64,
    pub perf_norm: f64,
    pub virtues: Option<VirtueSnapshot>,
    pub id: String,
}

impl PerfPoint {
    pub fn new(effort: f64, perf_norm: f64) -> Self {
        Self {
            effort,
            perf_norm,
            virtues: None,
            id: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub vertices: Vec<PerfPoint>,
}

/// `perf_raw / baseline_perf`. Values above 1 are kept as they are.
pub fn normalize(perf_raw: f64, baseline_perf: f64) -> Result<f64> {
    if !(baseline_perf > 0.0) {
        return Err(Error::Invalid(format!(
            "baseline performance must be positive to normalize, got {baseline_perf}"
        )));
    }
    Ok(perf_raw / baseline_perf)
}

/// Cross product of (b - a) × (c - a).
fn cross(a: &PerfPoint, b: &PerfPoint, c: &PerfPoint) -> f64 {
    (b.effort - a.effort) * (c.perf_norm - a.perf_norm) - (b.perf_norm - a.perf_norm) * (c.effort - a.effort)
}

/// Sort by effort and keep the best point per effort value.
fn collapse_ties(points: &[PerfPoint]) -> Vec<PerfPoint> {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.effort.total_cmp(&b.effort).then(a.perf_norm.total_cmp(&b.perf_norm)));
    let mut out: Vec<PerfPoint> = Vec::with_capacity(sorted.len());
    for p in sorted {
        match out.last_mut() {
            Some(last) if last.effort == p.effort => *last = p,
            _ => out.push(p),
        }
    }
    out
}

fn check_points(points: &[PerfPoint]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::Empty("no points for the hull"));
    }
    if let Some(p) = points.iter().find(|p| !p.effort.is_finite() || !p.perf_norm.is_finite()) {
        return Err(Error::Invalid(format!(
            "non-finite point ({}, {})",
            p.effort, p.perf_norm
        )));
    }
    Ok(())
}

/// Upper convex hull (monotone chain), left to right. Collinear interior
/// points are dropped; both effort extremes are kept.
pub fn upper_hull(points: &[PerfPoint]) -> Result<Vec<PerfPoint>> {
    check_points(points)?;
    let mut hull: Vec<PerfPoint> = Vec::new();
    for p in collapse_ties(points) {
        while hull.len() >= 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], &p) >= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    Ok(hull)
}

/// Upper hull cut at its highest vertex, so performance never drops along it.
pub fn optimal_trajectory(points: &[PerfPoint]) -> Result<Trajectory> {
    let mut vertices = upper_hull(points)?;
    let top = vertices
        .iter()
        .enumerate()
        .fold(0, |best, (i, v)| if v.perf_norm > vertices[best].perf_norm { i } else { best });
    vertices.truncate(top + 1);
    Ok(Trajectory { vertices })
}

/// Height of the trajectory polyline at `effort`, or `None` outside its span.
pub fn trajectory_height(t: &Trajectory, effort: f64) -> Option<f64> {
    let v = &t.vertices;
    let first = v.first()?;
    if effort < first.effort || effort > v.last()?.effort {
        return None;
    }
    if v.len() == 1 {
        return Some(first.perf_norm);
    }
    let i = v.windows(2).position(|w| effort <= w[1].effort)?;
    let (a, b) = (&v[i], &v[i + 1]);
    let s = (effort - a.effort) / (b.effort - a.effort);
    Some(a.perf_norm + s * (b.perf_norm - a.perf_norm))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceSeries {
    pub virtue: Virtue,
    /// `(perf_norm, virtue value)` per trajectory vertex, sorted by perf_norm.
    pub points: Vec<(f64, f64)>,
}

/// One point per compared virtue per trajectory vertex.
pub fn importance_curves(t: &Trajectory, virtues: &[Virtue]) -> Result<Vec<ImportanceSeries>> {
    if t.vertices.is_empty() {
        return Err(Error::Empty("trajectory has no vertices"));
    }
    let snaps = t
        .vertices
        .iter()
        .map(|v| {
            v.virtues
                .map(|s| (v.perf_norm, s))
                .ok_or_else(|| Error::Invalid(format!("vertex `{}` has no virtue snapshot", v.id)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(virtues
        .iter()
        .map(|&virtue| {
            let mut points: Vec<(f64, f64)> = snaps.iter().map(|(p, s)| (*p, virtue.of(s))).collect();
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            ImportanceSeries { virtue, points }
        })
        .collect())
}

/// Smallest virtue value after which each of the next `window` forward gains
/// in performance stays below `epsilon · max(perf_norm)`.
///
/// `curve` holds `(virtue value, perf_norm)` sorted by virtue value.
pub fn detect_saturation(curve: &[(f64, f64)], epsilon: f64, window: usize) -> Result<Option<f64>> {
    if window == 0 {
        return Err(Error::Invalid("saturation window must be >= 1".into()));
    }
    if curve.len() < window + 1 {
        return Err(Error::Invalid(format!(
            "saturation needs at least {} points, got {}",
            window + 1,
            curve.len()
        )));
    }
    if curve.windows(2).any(|w| w[0].0 > w[1].0) {
        return Err(Error::Invalid("saturation curve must be sorted by virtue value".into()));
    }
    let max = curve.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let tol = epsilon * max;
    Ok((0..curve.len() - window)
        .find(|&i| (i..i + window).all(|k| curve[k + 1].1 - curve[k].1 < tol))
        .map(|i| curve[i].0))
}
