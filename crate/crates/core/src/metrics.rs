//! Overlap metrics and aggregation.

use crate::error::{Error, Result};
use crate::store::LabelMask;

/// Foreground IoU `|a ∩ b| / |a ∪ b|`; 1.0 when both masks are empty.
pub fn iou(a: &LabelMask, b: &LabelMask) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::DimMismatch(a.dims(), b.dims()));
    }
    let mut acc = Overlap::default();
    acc.add(a.voxels(), b.voxels());
    Ok(acc.iou())
}

/// Running voxel counts for pooled (micro-averaged) IoU and Dice.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Overlap {
    pub intersection: u64,
    pub union: u64,
    pub pred: u64,
    pub truth: u64,
}

impl Overlap {
    pub fn add(&mut self, pred: &[u8], truth: &[u8]) {
        debug_assert_eq!(pred.len(), truth.len());
        for (&p, &t) in pred.iter().zip(truth) {
            let (p, t) = (p == 1, t == 1);
            self.intersection += u64::from(p && t);
            self.union += u64::from(p || t);
            self.pred += u64::from(p);
            self.truth += u64::from(t);
        }
    }

    pub fn merge(&mut self, other: &Overlap) {
        self.intersection += other.intersection;
        self.union += other.union;
        self.pred += other.pred;
        self.truth += other.truth;
    }

    pub fn iou(&self) -> f64 {
        if self.union == 0 {
            1.0
        } else {
            self.intersection as f64 / self.union as f64
        }
    }

    pub fn dice(&self) -> f64 {
        let denom = self.pred + self.truth;
        if denom == 0 {
            1.0
        } else {
            2.0 * self.intersection as f64 / denom as f64
        }
    }
}

/// Exact median; the mean of the two central values for even counts.
pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("median of no values"));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Ok(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}
