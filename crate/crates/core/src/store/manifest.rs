use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::volume::{LabelMask, VolumeGrid};
use crate::error::{Error, IoContext, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Trainval,
    Test,
    Train,
    Val,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Trainval => "trainval",
            Split::Test => "test",
            Split::Train => "train",
            Split::Val => "val",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub volume_id: String,
    pub volume_path: String,
    pub mask_path: String,
    pub split: Split,
    /// Sorted z-indices considered labeled.
    pub labeled_slices: Vec<usize>,
}

/// One applied transform: `{op, params, seed}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformRecord {
    pub op: String,
    pub params: BTreeMap<String, serde_json::Value>,
    pub seed: u64,
}

impl TransformRecord {
    pub fn new(op: &str, seed: u64) -> Self {
        Self {
            op: op.to_owned(),
            params: BTreeMap::new(),
            seed,
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.params.insert(key.to_owned(), value.into());
        self
    }

    pub(crate) fn get_f64(&self, key: &str) -> Result<f64> {
        self.params
            .get(key)
            .and_then(|v| v.as_f64())
            .ok_or_else(|| Error::Invalid(format!("`{}` record lacks numeric `{key}`", self.op)))
    }

    pub(crate) fn get_u64(&self, key: &str) -> Result<u64> {
        self.params
            .get(key)
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::Invalid(format!("`{}` record lacks integer `{key}`", self.op)))
    }

    pub(crate) fn get_str(&self, key: &str) -> Result<&str> {
        self.params
            .get(key)
            .and_then(|v| v.as_str())
            .ok_or_else(|| Error::Invalid(format!("`{}` record lacks string `{key}`", self.op)))
    }
}

/// Catalog of volume/mask pairs plus the transforms that produced it.
///
/// Relative paths resolve against `base_dir`, which is the directory the
/// manifest was loaded from (it is not serialized).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub dataset_id: String,
    pub entries: Vec<ManifestEntry>,
    pub provenance: Vec<TransformRecord>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl DatasetManifest {
    pub fn new(dataset_id: impl Into<String>, base_dir: impl Into<PathBuf>) -> Self {
        Self {
            dataset_id: dataset_id.into(),
            entries: Vec::new(),
            provenance: Vec::new(),
            base_dir: base_dir.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, volume_id: &str) -> Result<&ManifestEntry> {
        self.entries
            .iter()
            .find(|e| e.volume_id == volume_id)
            .ok_or_else(|| Error::NotFound(volume_id.to_owned()))
    }

    pub fn labeled_count(&self) -> usize {
        self.entries.iter().map(|e| e.labeled_slices.len()).sum()
    }

    /// Every `(volume_id, z)` labeled pair, in manifest order.
    pub fn labeled_pairs(&self) -> Vec<(String, usize)> {
        self.entries
            .iter()
            .flat_map(|e| e.labeled_slices.iter().map(|&z| (e.volume_id.clone(), z)))
            .collect()
    }

    pub fn resolve(&self, path: &str) -> PathBuf {
        let p = Path::new(path);
        if p.is_absolute() {
            p.to_owned()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Canonical text form: stable key order, two-space indent, trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut m: Self = serde_json::from_str(text)?;
        m.base_dir = base_dir.into();
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.volume_id.as_str()) {
                return Err(Error::Invalid(format!("duplicate volume_id `{}`", e.volume_id)));
            }
            if e.labeled_slices.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Invalid(format!(
                    "labeled_slices of `{}` are not strictly sorted",
                    e.volume_id
                )));
            }
        }
        Ok(())
    }

    /// Load from a `manifest.json` path or a directory holding one.
    pub fn load(path: &Path) -> Result<Self> {
        let file = if path.is_dir() {
            path.join("manifest.json")
        } else {
            path.to_owned()
        };
        let text = fs::read_to_string(&file).at(&file)?;
        let base = file.parent().map(Path::to_owned).unwrap_or_default();
        Self::from_json(&text, base)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).at(parent)?;
        }
        fs::write(path, self.to_json()).at(path)
    }

    /// Copy with every path made absolute, for handing to another process.
    pub fn resolved(&self) -> Result<Self> {
        let mut m = self.clone();
        for e in &mut m.entries {
            e.volume_path = absolute(&self.resolve(&e.volume_path))?;
            e.mask_path = absolute(&self.resolve(&e.mask_path))?;
        }
        Ok(m)
    }

    /// Read the volume and mask of `volume_id`.
    pub fn load_volume(&self, volume_id: &str) -> Result<(VolumeGrid, LabelMask)> {
        let e = self.entry(volume_id)?;
        let vol = VolumeGrid::read(&self.resolve(&e.volume_path))?;
        let mask = LabelMask::read(&self.resolve(&e.mask_path))?;
        if vol.dims() != mask.dims() {
            return Err(Error::DimMismatch(vol.dims(), mask.dims()));
        }
        if let Some(&z) = e.labeled_slices.iter().find(|&&z| z >= vol.dims()[2]) {
            return Err(Error::Invalid(format!(
                "`{volume_id}` lists labeled slice {z} beyond depth {}",
                vol.dims()[2]
            )));
        }
        Ok((vol, mask))
    }
}

fn absolute(p: &Path) -> Result<String> {
    let abs = std::path::absolute(p).at(p)?;
    Ok(abs.to_string_lossy().into_owned())
}
