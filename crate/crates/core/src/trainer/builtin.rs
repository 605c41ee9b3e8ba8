//! Built-in desk-scale learner: per-voxel logistic regression on four slice
//! features, trained by SGD with one slice per batch.

use std::collections::HashMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{slice_features, Features, N_FEATURES};
use super::{EarlyStopping, Segmenter, TrainConfig};
use crate::error::{Error, Result};
use crate::metrics::Overlap;
use crate::store::{DatasetManifest, LabelMask, VolumeGrid};
use crate::virtue::training_slices;

pub const N_PARAMS: usize = N_FEATURES + 1;

/// Weights then bias.
pub type Params = [f64; N_PARAMS];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Features,
    pub std: Features,
}

impl Standardizer {
    pub fn fit<'a>(rows: impl Iterator<Item = &'a Features>) -> Self {
        let mut n = 0usize;
        let mut sum = [0.0; N_FEATURES];
        let mut sq = [0.0; N_FEATURES];
        for r in rows {
            n += 1;
            for k in 0..N_FEATURES {
                sum[k] += r[k];
                sq[k] += r[k] * r[k];
            }
        }
        let mut mean = [0.0; N_FEATURES];
        let mut std = [1.0; N_FEATURES];
        if n > 0 {
            for k in 0..N_FEATURES {
                mean[k] = sum[k] / n as f64;
                let var = sq[k] / n as f64 - mean[k] * mean[k];
                if var > 1e-12 {
                    std[k] = var.sqrt();
                }
            }
        }
        Self { mean, std }
    }

    pub fn apply(&self, f: &Features) -> Features {
        let mut out = [0.0; N_FEATURES];
        for k in 0..N_FEATURES {
            out[k] = (f[k] - self.mean[k]) / self.std[k];
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub params: Params,
    pub scaler: Standardizer,
}

fn logit(params: &Params, x: &Features) -> f64 {
    params[N_FEATURES] + (0..N_FEATURES).map(|k| params[k] * x[k]).sum::<f64>()
}

impl LogisticModel {
    pub fn predict_slice(&self, slice: &[f32], nx: usize, ny: usize) -> Vec<u8> {
        slice_features(slice, nx, ny)
            .iter()
            .map(|f| u8::from(logit(&self.params, &self.scaler.apply(f)) > 0.0))
            .collect()
    }
}

impl Segmenter for LogisticModel {
    fn predict(&self, _volume_id: &str, volume: &VolumeGrid) -> Result<LabelMask> {
        let [nx, ny, nz] = volume.dims();
        let mut out = Vec::with_capacity(nx * ny * nz);
        for z in 0..nz {
            out.extend(self.predict_slice(volume.slice(z), nx, ny));
        }
        LabelMask::new(volume.dims(), out)
    }
}

/// Inverse-class-frequency weights of one batch: `n / (classes_present · n_c)`.
fn class_weights(y: &[u8]) -> [f64; 2] {
    let pos = y.iter().filter(|&&v| v == 1).count();
    let neg = y.len() - pos;
    let present = usize::from(pos > 0) + usize::from(neg > 0);
    let n = y.len() as f64;
    let w = |c: usize| if c == 0 { 0.0 } else { n / (present as f64 * c as f64) };
    [w(neg), w(pos)]
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Class-weighted binary cross-entropy of one batch, summed over its voxels,
/// and its gradient with respect to `[weights.., bias]`. Summing keeps the
/// learning rate a per-voxel step size whatever the slice area. `x` must
/// already be standardized.
pub fn batch_loss_grad(params: &Params, x: &[Features], y: &[u8]) -> (f64, Params) {
    let cw = class_weights(y);
    let mut loss = 0.0;
    let mut grad = [0.0; N_PARAMS];
    for (xi, &yi) in x.iter().zip(y) {
        let z = logit(params, xi);
        let w = cw[usize::from(yi)];
        let t = f64::from(yi);
        loss += w * (softplus(z) - t * z);
        let r = w * (sigmoid(z) - t);
        for k in 0..N_FEATURES {
            grad[k] += r * xi[k];
        }
        grad[N_FEATURES] += r;
    }
    (loss, grad)
}

struct SliceSample {
    x: Vec<Features>,
    y: Vec<u8>,
}

/// Loads `(volume_id, z)` slices of a manifest, computing features once per slice.
struct SliceLoader<'a> {
    manifest: &'a DatasetManifest,
    volumes: HashMap<String, (VolumeGrid, LabelMask)>,
    slices: HashMap<(String, usize), Arc<SliceSample>>,
}

impl<'a> SliceLoader<'a> {
    fn new(manifest: &'a DatasetManifest) -> Self {
        Self {
            manifest,
            volumes: HashMap::new(),
            slices: HashMap::new(),
        }
    }

    fn get(&mut self, id: &str, z: usize) -> Result<Arc<SliceSample>> {
        if let Some(s) = self.slices.get(&(id.to_owned(), z)) {
            return Ok(s.clone());
        }
        if !self.volumes.contains_key(id) {
            let pair = self.manifest.load_volume(id)?;
            self.volumes.insert(id.to_owned(), pair);
        }
        let (vol, mask) = &self.volumes[id];
        let [nx, ny, nz] = vol.dims();
        if z >= nz {
            return Err(Error::Invalid(format!("slice {z} beyond depth {nz} of `{id}`")));
        }
        let s = Arc::new(SliceSample {
            x: slice_features(vol.slice(z), nx, ny),
            y: mask.slice(z).to_vec(),
        });
        self.slices.insert((id.to_owned(), z), s.clone());
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Snapshot with the best validation IoU.
    pub model: LogisticModel,
    pub val_history: Vec<f64>,
    /// 1-based epoch of the best snapshot.
    pub best_epoch: usize,
}

/// Train on the manifest's training slice list (see [`training_slices`]).
pub fn train_builtin(train: &DatasetManifest, val: &DatasetManifest, config: &TrainConfig) -> Result<TrainOutcome> {
    let slices = training_slices(train)?;
    train_on_slices(train, &slices, val, config, |_, _| {})
}

/// Train on an explicit ordered slice list; `on_epoch(epoch, val_iou)` fires
/// after every epoch.
pub fn train_on_slices(
    train: &DatasetManifest,
    slices: &[(String, usize)],
    val: &DatasetManifest,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<TrainOutcome> {
    config.validate()?;
    if slices.is_empty() {
        return Err(Error::Empty("no training slices"));
    }
    let val_pairs = val.labeled_pairs();
    if val_pairs.is_empty() {
        return Err(Error::Empty("no validation slices"));
    }

    let mut loader = SliceLoader::new(train);
    let batches = slices
        .iter()
        .map(|(id, z)| loader.get(id, *z))
        .collect::<Result<Vec<_>>>()?;

    // fitted on the distinct train slices, in first-seen order
    let mut seen = std::collections::HashSet::new();
    let distinct: Vec<&SliceSample> = slices
        .iter()
        .zip(&batches)
        .filter(|(key, _)| seen.insert(*key))
        .map(|(_, s)| s.as_ref())
        .collect();
    let scaler = Standardizer::fit(distinct.iter().flat_map(|s| s.x.iter()));
    let batches: Vec<SliceSample> = batches
        .iter()
        .map(|s| SliceSample {
            x: s.x.iter().map(|f| scaler.apply(f)).collect(),
            y: s.y.clone(),
        })
        .collect();

    let mut val_loader = SliceLoader::new(val);
    let val_set: Vec<SliceSample> = val_pairs
        .iter()
        .map(|(id, z)| {
            val_loader.get(id, *z).map(|s| SliceSample {
                x: s.x.iter().map(|f| scaler.apply(f)).collect(),
                y: s.y.clone(),
            })
        })
        .collect::<Result<_>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = [0.0; N_PARAMS];
    for p in params.iter_mut().take(N_FEATURES) {
        *p = rng.random_range(-0.01..0.01);
    }

    let mut order: Vec<usize> = (0..batches.len()).collect();
    let mut stopper = EarlyStopping::new(config.patience);
    let mut history = Vec::new();
    let mut best = params;
    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        for &b in &order {
            let (_, g) = batch_loss_grad(&params, &batches[b].x, &batches[b].y);
            for k in 0..N_PARAMS {
                params[k] -= config.learning_rate * g[k];
            }
        }
        let val_iou = pooled_iou(&params, &val_set);
        history.push(val_iou);
        on_epoch(epoch, val_iou);
        let (improved, stop) = stopper.update(val_iou);
        if improved {
            best = params;
        }
        if stop {
            break;
        }
    }
    Ok(TrainOutcome {
        model: LogisticModel { params: best, scaler },
        best_epoch: stopper.best_epoch(),
        val_history: history,
    })
}

fn pooled_iou(params: &Params, set: &[SliceSample]) -> f64 {
    let mut o = Overlap::default();
    for s in set {
        let pred: Vec<u8> = s.x.iter().map(|x| u8::from(logit(params, x) > 0.0)).collect();
        o.add(&pred, &s.y);
    }
    o.iou()
}
