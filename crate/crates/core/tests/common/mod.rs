//! Brute-force oracles shared by the integration tests. They are written
//! from the definitions, without reusing library internals.
#![allow(dead_code)]

use std::collections::HashSet;

use slicewise::store::LabelMask;

pub type Voxel = (usize, usize, usize);

pub fn voxel_set(m: &LabelMask) -> HashSet<Voxel> {
    let [nx, ny, nz] = m.dims();
    let mut s = HashSet::new();
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                if m.voxels()[(z * ny + y) * nx + x] == 1 {
                    s.insert((x, y, z));
                }
            }
        }
    }
    s
}

/// `(|a ∩ b|, |a ∪ b|)` by set operations.
pub fn set_counts(a: &HashSet<Voxel>, b: &HashSet<Voxel>) -> (usize, usize) {
    (a.intersection(b).count(), a.union(b).count())
}

pub fn set_iou(a: &HashSet<Voxel>, b: &HashSet<Voxel>) -> f64 {
    let (i, u) = set_counts(a, b);
    if u == 0 {
        1.0
    } else {
        i as f64 / u as f64
    }
}

/// Nearest-neighbor interpolation written from the rule: the annotator draws
/// slices `first, first+step, …` and `last`; every other slice between them
/// copies the closest drawn slice, the lower one on a tie.
pub fn interpolate(mask: &LabelMask, step: usize) -> HashSet<Voxel> {
    let truth = voxel_set(mask);
    let zs: Vec<usize> = {
        let mut z: Vec<usize> = truth.iter().map(|v| v.2).collect();
        z.sort_unstable();
        z.dedup();
        z
    };
    let (first, last) = (zs[0], *zs.last().unwrap());
    let mut drawn: Vec<usize> = Vec::new();
    let mut z = first;
    while z <= last {
        drawn.push(z);
        z += step;
    }
    if !drawn.contains(&last) {
        drawn.push(last);
    }
    let source = |z: usize| -> usize {
        let mut best = drawn[0];
        for &d in &drawn {
            if d.abs_diff(z) < best.abs_diff(z) {
                best = d;
            }
        }
        best
    };
    let mut out: HashSet<Voxel> = truth.iter().copied().filter(|v| v.2 < first || v.2 > last).collect();
    for z in first..=last {
        let s = source(z);
        out.extend(truth.iter().filter(|v| v.2 == s).map(|&(x, y, _)| (x, y, z)));
    }
    out
}

/// Upper-hull vertices by testing every point against every spanning pair.
/// Ties in x keep the highest point; collinear interior points are dropped.
pub fn brute_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut best: Vec<(f64, f64)> = Vec::new();
    for &(x, y) in points {
        match best.iter_mut().find(|p| p.0 == x) {
            Some(p) => p.1 = p.1.max(y),
            None => best.push((x, y)),
        }
    }
    let mut out: Vec<(f64, f64)> = best
        .iter()
        .copied()
        .filter(|&p| {
            !best.iter().any(|&a| {
                best.iter().any(|&b| {
                    a.0 < p.0 && p.0 < b.0 && (p.1 - a.1) * (b.0 - a.0) <= (b.1 - a.1) * (p.0 - a.0)
                })
            })
        })
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}
