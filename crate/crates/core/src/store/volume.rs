//! `VolumeGrid` / `LabelMask` and the `.vol` container.
//!
//! A `.vol` file is one UTF-8 header line
//!
//! ```text
//! LBVOL1 nx ny nz sx sy sz dtype\n
//! ```
//!
//! followed by `nx*ny*nz` little-endian voxels, x fastest, then y, then z.
//! `dtype` is `f32` for intensities and `u8` for masks.

use std::fs;
use std::path::Path;

use crate::error::{Error, IoContext, Result};

pub const MAGIC: &str = "LBVOL1";
const MAX_HEADER: usize = 512;

pub type Dims = [usize; 3];

fn check_dims(dims: Dims) -> Result<usize> {
    if dims.iter().any(|&d| d == 0) {
        return Err(Error::Invalid(format!("all dims must be >= 1, got {dims:?}")));
    }
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::Invalid(format!("dims {dims:?} overflow")))
}

/// 3D intensity grid. Slices are indexed along z.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeGrid {
    dims: Dims,
    spacing: [f32; 3],
    voxels: Vec<f32>,
}

impl VolumeGrid {
    pub fn new(dims: Dims, spacing: [f32; 3], voxels: Vec<f32>) -> Result<Self> {
        let n = check_dims(dims)?;
        if voxels.len() != n {
            return Err(Error::Invalid(format!(
                "volume of dims {dims:?} needs {n} voxels, got {}",
                voxels.len()
            )));
        }
        Ok(Self {
            dims,
            spacing,
            voxels,
        })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn spacing(&self) -> [f32; 3] {
        self.spacing
    }

    pub fn voxels(&self) -> &[f32] {
        &self.voxels
    }

    pub fn slice_len(&self) -> usize {
        self.dims[0] * self.dims[1]
    }

    pub fn slice(&self, z: usize) -> &[f32] {
        let n = self.slice_len();
        &self.voxels[z * n..(z + 1) * n]
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_container(path, self.dims, self.spacing, &self.voxels)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let (dims, spacing, voxels) = read_container(path)?;
        Self::new(dims, spacing, voxels)
    }
}

/// Binary mask aligned to a `VolumeGrid`; every voxel is 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMask {
    dims: Dims,
    voxels: Vec<u8>,
}

impl LabelMask {
    pub fn new(dims: Dims, voxels: Vec<u8>) -> Result<Self> {
        let n = check_dims(dims)?;
        if voxels.len() != n {
            return Err(Error::Invalid(format!(
                "mask of dims {dims:?} needs {n} voxels, got {}",
                voxels.len()
            )));
        }
        if let Some(v) = voxels.iter().find(|&&v| v > 1) {
            return Err(Error::Invalid(format!("mask value {v} outside {{0,1}}")));
        }
        Ok(Self { dims, voxels })
    }

    pub fn empty(dims: Dims) -> Result<Self> {
        let n = check_dims(dims)?;
        Ok(Self {
            dims,
            voxels: vec![0; n],
        })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn voxels(&self) -> &[u8] {
        &self.voxels
    }

    pub fn slice_len(&self) -> usize {
        self.dims[0] * self.dims[1]
    }

    pub fn slice(&self, z: usize) -> &[u8] {
        let n = self.slice_len();
        &self.voxels[z * n..(z + 1) * n]
    }

    /// Overwrite slice `dst` with the contents of slice `src` of `from`.
    pub(crate) fn copy_slice_from(&mut self, dst: usize, from: &LabelMask, src: usize) {
        let n = self.slice_len();
        self.voxels[dst * n..(dst + 1) * n].copy_from_slice(from.slice(src));
    }

    pub fn foreground_count(&self) -> usize {
        self.voxels.iter().filter(|&&v| v == 1).count()
    }

    /// z-indices of slices holding at least one foreground voxel.
    pub fn labeled_slices(&self) -> Vec<usize> {
        (0..self.dims[2])
            .filter(|&z| self.slice(z).contains(&1))
            .collect()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_container(path, self.dims, [1.0; 3], &self.voxels)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let (dims, _, voxels): (_, _, Vec<u8>) = read_container(path)?;
        Self::new(dims, voxels).map_err(|e| Error::BadHeader {
            path: path.to_owned(),
            reason: e.to_string(),
        })
    }
}

trait Voxel: Sized + Copy {
    const DTYPE: &'static str;
    const SIZE: usize;
    fn put(self, out: &mut Vec<u8>);
    fn take(bytes: &[u8]) -> Self;
}

impl Voxel for f32 {
    const DTYPE: &'static str = "f32";
    const SIZE: usize = 4;
    fn put(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn take(bytes: &[u8]) -> Self {
        f32::from_le_bytes(bytes.try_into().expect("4-byte chunk"))
    }
}

impl Voxel for u8 {
    const DTYPE: &'static str = "u8";
    const SIZE: usize = 1;
    fn put(self, out: &mut Vec<u8>) {
        out.push(self);
    }
    fn take(bytes: &[u8]) -> Self {
        bytes[0]
    }
}

fn write_container<T: Voxel>(path: &Path, dims: Dims, spacing: [f32; 3], voxels: &[T]) -> Result<()> {
    let header = format!(
        "{MAGIC} {} {} {} {} {} {} {}\n",
        dims[0], dims[1], dims[2], spacing[0], spacing[1], spacing[2], T::DTYPE
    );
    let mut buf = Vec::with_capacity(header.len() + voxels.len() * T::SIZE);
    buf.extend_from_slice(header.as_bytes());
    for &v in voxels {
        v.put(&mut buf);
    }
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).at(parent)?;
    }
    fs::write(path, buf).at(path)
}

fn read_container<T: Voxel>(path: &Path) -> Result<(Dims, [f32; 3], Vec<T>)> {
    let bytes = fs::read(path).at(path)?;
    let bad = |reason: String| Error::BadHeader {
        path: path.to_owned(),
        reason,
    };
    let nl = bytes
        .iter()
        .take(MAX_HEADER)
        .position(|&b| b == b'\n')
        .ok_or_else(|| bad("no header line".into()))?;
    let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| bad("header is not UTF-8".into()))?;
    let fields: Vec<&str> = header.split(' ').collect();
    if fields.len() != 8 || fields[0] != MAGIC {
        return Err(bad(format!("expected `{MAGIC} nx ny nz sx sy sz dtype`, got `{header}`")));
    }
    let mut dims = [0usize; 3];
    for (d, f) in dims.iter_mut().zip(&fields[1..4]) {
        *d = f.parse().map_err(|_| bad(format!("bad dimension `{f}`")))?;
    }
    let mut spacing = [0f32; 3];
    for (s, f) in spacing.iter_mut().zip(&fields[4..7]) {
        *s = f.parse().map_err(|_| bad(format!("bad spacing `{f}`")))?;
    }
    if fields[7] != T::DTYPE {
        return Err(bad(format!("expected dtype {}, found {}", T::DTYPE, fields[7])));
    }
    let n = check_dims(dims).map_err(|e| bad(e.to_string()))?;
    let payload = &bytes[nl + 1..];
    let expected = n * T::SIZE;
    if payload.len() != expected {
        return Err(Error::Corrupted {
            path: path.to_owned(),
            expected,
            actual: payload.len(),
        });
    }
    let voxels = payload.chunks_exact(T::SIZE).map(T::take).collect();
    Ok((dims, spacing, voxels))
}
