//! Volumes, masks, manifests and dataset generation.

mod ingest;
mod manifest;
mod phantom;
mod volume;

pub use ingest::{ingest_slice_stack, MASK_THRESHOLD};
pub use manifest::{DatasetManifest, ManifestEntry, Split, TransformRecord};
pub use phantom::{generate_phantoms, phantom_id, phantom_volume, Ellipsoid};
pub use volume::{Dims, LabelMask, VolumeGrid, MAGIC};

use crate::error::Result;

/// Read the volume and mask of `volume_id` referenced by `manifest`.
pub fn load_volume(manifest: &DatasetManifest, volume_id: &str) -> Result<(VolumeGrid, LabelMask)> {
    manifest.load_volume(volume_id)
}
