//! Slice-stack ingestion.
//!
//! Source layout: `<src>/<volume_id>/img_<z>.pgm` and `<src>/<volume_id>/msk_<z>.pgm`
//! with `z` zero-padded to four digits and contiguous from 0.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use image::DynamicImage;

use super::manifest::{DatasetManifest, ManifestEntry, Split};
use super::volume::{LabelMask, VolumeGrid};
use crate::error::{Error, IoContext, Result};

/// Mask pixels strictly above this gray level become foreground.
pub const MASK_THRESHOLD: u8 = 127;

pub fn ingest_slice_stack(src: &Path, dataset_id: &str, out_dir: &Path) -> Result<DatasetManifest> {
    let mut volume_dirs: Vec<PathBuf> = fs::read_dir(src)
        .at(src)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    volume_dirs.sort();
    if volume_dirs.is_empty() {
        return Err(Error::Empty("no volume directories in source"));
    }

    let mut manifest = DatasetManifest::new(dataset_id, out_dir);
    for dir in volume_dirs {
        let volume_id = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let (vol, mask) = read_stack(&dir)?;
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

fn slice_index(name: &str, prefix: &str) -> Option<usize> {
    let digits = name.strip_prefix(prefix)?.strip_suffix(".pgm")?;
    if digits.len() != 4 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

fn read_stack(dir: &Path) -> Result<(VolumeGrid, LabelMask)> {
    let mut images = BTreeMap::new();
    for entry in fs::read_dir(dir).at(dir)? {
        let path = entry.at(dir)?.path();
        let name = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
        if let Some(z) = slice_index(&name, "img_") {
            images.insert(z, path);
        }
    }
    let nz = images.len();
    if nz == 0 {
        return Err(Error::Image {
            path: dir.to_owned(),
            reason: "no img_<zzzz>.pgm slices".into(),
        });
    }
    if let Some(missing) = images.keys().enumerate().find(|(i, z)| i != *z).map(|(i, _)| i) {
        return Err(Error::Image {
            path: dir.join(format!("img_{missing:04}.pgm")),
            reason: "slice indices must be contiguous from 0".into(),
        });
    }

    let mut slice_dims: Option<(usize, usize)> = None;
    let mut check = |path: &Path, dims: (usize, usize)| -> Result<()> {
        match slice_dims {
            None => {
                slice_dims = Some(dims);
                Ok(())
            }
            Some(expected) if expected != dims => Err(Error::SliceDims {
                path: path.to_owned(),
                expected,
                found: dims,
            }),
            Some(_) => Ok(()),
        }
    };

    let mut voxels = Vec::new();
    let mut labels = Vec::new();
    for (z, img_path) in &images {
        let img = open(img_path)?;
        check(img_path, (img.width() as usize, img.height() as usize))?;
        match &img {
            DynamicImage::ImageLuma8(g) => voxels.extend(g.pixels().map(|p| f32::from(p.0[0]) / 255.0)),
            DynamicImage::ImageLuma16(g) => {
                voxels.extend(g.pixels().map(|p| f32::from(p.0[0]) / 65535.0))
            }
            other => {
                return Err(Error::Image {
                    path: img_path.clone(),
                    reason: format!("expected grayscale, got {:?}", other.color()),
                })
            }
        }

        let msk_path = dir.join(format!("msk_{z:04}.pgm"));
        if !msk_path.exists() {
            return Err(Error::Image {
                path: msk_path,
                reason: "missing mask for slice".into(),
            });
        }
        let msk = open(&msk_path)?;
        check(&msk_path, (msk.width() as usize, msk.height() as usize))?;
        match &msk {
            DynamicImage::ImageLuma8(g) => {
                labels.extend(g.pixels().map(|p| u8::from(p.0[0] > MASK_THRESHOLD)))
            }
            other => {
                return Err(Error::Image {
                    path: msk_path.clone(),
                    reason: format!(
                        "mask must be 8-bit grayscale to binarize at >{MASK_THRESHOLD}, got {:?}",
                        other.color()
                    ),
                })
            }
        }
    }
    let (nx, ny) = slice_dims.expect("at least one slice");
    let dims = [nx, ny, nz];
    Ok((VolumeGrid::new(dims, [1.0; 3], voxels)?, LabelMask::new(dims, labels)?))
}

fn open(path: &Path) -> Result<DynamicImage> {
    image::ImageReader::open(path)
        .at(path)?
        .with_guessed_format()
        .at(path)?
        .decode()
        .map_err(|e| Error::Image {
            path: path.to_owned(),
            reason: e.to_string(),
        })
}
