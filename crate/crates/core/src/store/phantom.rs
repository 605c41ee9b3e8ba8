//! Synthetic ellipsoid phantoms.
//!
//! Each volume holds one axis-aligned ellipsoid. Radii are drawn uniformly in
//! `[0.15, 0.35] * min(dims)`, the center uniformly among positions that keep
//! the ellipsoid inside the grid. Per volume a foreground level ~ N(0.8, 0.1²)
//! and a background level ~ N(0.2, 0.1²) are drawn; every voxel then gets
//! i.i.d. N(0, 0.05²) noise on top of its level.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::manifest::{DatasetManifest, ManifestEntry, Split};
use super::volume::{Dims, LabelMask, VolumeGrid};
use crate::error::{Error, Result};
use crate::rng::derive_seed;

pub const MIN_DIM: usize = 8;
pub const RADIUS_RANGE: (f64, f64) = (0.15, 0.35);
pub const FOREGROUND_LEVEL: (f64, f64) = (0.8, 0.1);
pub const BACKGROUND_LEVEL: (f64, f64) = (0.2, 0.1);
pub const NOISE_SD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipsoid {
    pub center: [f64; 3],
    pub radii: [f64; 3],
}

impl Ellipsoid {
    pub fn contains(&self, x: usize, y: usize, z: usize) -> bool {
        let p = [x as f64, y as f64, z as f64];
        (0..3)
            .map(|i| ((p[i] - self.center[i]) / self.radii[i]).powi(2))
            .sum::<f64>()
            <= 1.0
    }
}

/// Draw one phantom volume. Deterministic in `seed`.
pub fn phantom_volume(dims: Dims, seed: u64) -> Result<(VolumeGrid, LabelMask, Ellipsoid)> {
    if dims.iter().any(|&d| d < MIN_DIM) {
        return Err(Error::Invalid(format!(
            "phantom dims must each be >= {MIN_DIM} to fit the minimum radius, got {dims:?}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let min_dim = *dims.iter().min().expect("3 dims") as f64;
    let mut radii = [0.0; 3];
    for r in &mut radii {
        *r = rng.random_range(RADIUS_RANGE.0..RADIUS_RANGE.1) * min_dim;
    }
    let mut center = [0.0; 3];
    for i in 0..3 {
        let hi = dims[i] as f64 - 1.0 - radii[i];
        center[i] = rng.random_range(radii[i]..hi);
    }
    let shape = Ellipsoid { center, radii };

    let fg = Normal::new(FOREGROUND_LEVEL.0, FOREGROUND_LEVEL.1).expect("valid normal");
    let bg = Normal::new(BACKGROUND_LEVEL.0, BACKGROUND_LEVEL.1).expect("valid normal");
    let noise = Normal::new(0.0, NOISE_SD).expect("valid normal");
    let fg_level = fg.sample(&mut rng);
    let bg_level = bg.sample(&mut rng);

    let [nx, ny, nz] = dims;
    let mut voxels = Vec::with_capacity(nx * ny * nz);
    let mut labels = Vec::with_capacity(nx * ny * nz);
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let inside = shape.contains(x, y, z);
                let level = if inside { fg_level } else { bg_level };
                voxels.push((level + noise.sample(&mut rng)) as f32);
                labels.push(u8::from(inside));
            }
        }
    }
    Ok((
        VolumeGrid::new(dims, [1.0; 3], voxels)?,
        LabelMask::new(dims, labels)?,
        shape,
    ))
}

pub fn phantom_id(i: usize) -> String {
    format!("phantom_{i:04}")
}

/// Generate `n_volumes` phantoms under `out_dir` and write its manifest.
pub fn generate_phantoms(
    n_volumes: usize,
    dims: Dims,
    seed: u64,
    dataset_id: &str,
    out_dir: &Path,
) -> Result<DatasetManifest> {
    if n_volumes == 0 {
        return Err(Error::Invalid("n_volumes must be >= 1".into()));
    }
    let mut manifest = DatasetManifest::new(dataset_id, out_dir);
    for i in 0..n_volumes {
        let (vol, mask, _) = phantom_volume(dims, derive_seed(&[seed, i as u64]))?;
        let volume_id = phantom_id(i);
        let volume_path = format!("images/{volume_id}.vol");
        let mask_path = format!("masks/{volume_id}.vol");
        vol.write(&out_dir.join(&volume_path))?;
        mask.write(&out_dir.join(&mask_path))?;
        manifest.entries.push(ManifestEntry {
            labeled_slices: mask.labeled_slices(),
            volume_id,
            volume_path,
            mask_path,
            split: Split::Trainval,
        });
    }
    manifest.save(&out_dir.join("manifest.json"))?;
    Ok(manifest)
}
