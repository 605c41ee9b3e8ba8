//! Training and evaluation harness.
//!
//! Two trainers are available behind the same contract: the in-process
//! [`builtin`] learner, and any external program that speaks the
//! newline-delimited JSON protocol in [`protocol`].

pub mod builtin;
pub mod external;
pub mod features;
pub mod protocol;

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::Overlap;
use crate::store::{DatasetManifest, LabelMask, VolumeGrid};

pub use builtin::{train_builtin, train_on_slices, LogisticModel, TrainOutcome};
pub use external::run_external;

pub const DEFAULT_MAX_EPOCHS: usize = 100;
pub const DEFAULT_PATIENCE: usize = 10;
pub const DEFAULT_LEARNING_RATE: f64 = 3e-4;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(3600);

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TrainerKind {
    Builtin,
    /// Command line of a program speaking the trainer protocol.
    External(String),
}

impl TrainerKind {
    /// `builtin`, or anything else taken as an external command line.
    pub fn parse(s: &str) -> Self {
        match s.trim() {
            "" | "builtin" => TrainerKind::Builtin,
            cmd => TrainerKind::External(cmd.to_owned()),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            TrainerKind::Builtin => "builtin".into(),
            TrainerKind::External(cmd) => cmd.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub patience: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub trainer: TrainerKind,
    pub timeout: Duration,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_epochs: DEFAULT_MAX_EPOCHS,
            patience: DEFAULT_PATIENCE,
            learning_rate: DEFAULT_LEARNING_RATE,
            seed: 0,
            trainer: TrainerKind::Builtin,
            timeout: DEFAULT_TIMEOUT,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_epochs == 0 {
            return Err(Error::Invalid("max_epochs must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Invalid(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    /// Pooled foreground IoU on the test set.
    pub test_perf: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub val_history: Vec<f64>,
}

/// Keras-style early stopping on a metric to maximize: after each
/// non-improving epoch the wait counter grows, and training stops once it
/// reaches `patience`. Improvement is strict.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: usize,
    epoch: usize,
    wait: usize,
    stopped: bool,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: f64::NEG_INFINITY,
            best_epoch: 0,
            epoch: 0,
            wait: 0,
            stopped: false,
        }
    }

    /// Feed the next epoch's metric; returns `(improved, stop)`.
    pub fn update(&mut self, metric: f64) -> (bool, bool) {
        self.epoch += 1;
        if metric > self.best {
            self.best = metric;
            self.best_epoch = self.epoch;
            self.wait = 0;
            return (true, false);
        }
        self.wait += 1;
        if self.wait >= self.patience {
            self.stopped = true;
        }
        (false, self.stopped)
    }

    pub fn stopped(&self) -> bool {
        self.stopped
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }
}

/// Anything that turns a volume into a predicted mask.
pub trait Segmenter {
    fn predict(&self, volume_id: &str, volume: &VolumeGrid) -> Result<LabelMask>;
}

/// Pooled overlap of predictions against ground truth over every slice of
/// every test volume.
pub fn evaluate_overlap(model: &dyn Segmenter, test: &DatasetManifest) -> Result<Overlap> {
    if test.is_empty() {
        return Err(Error::Empty("test set has no volumes"));
    }
    let mut total = Overlap::default();
    for e in &test.entries {
        let (vol, truth) = test.load_volume(&e.volume_id)?;
        let pred = model.predict(&e.volume_id, &vol)?;
        if pred.dims() != truth.dims() {
            return Err(Error::DimMismatch(pred.dims(), truth.dims()));
        }
        total.add(pred.voxels(), truth.voxels());
    }
    Ok(total)
}

/// Pooled foreground IoU on the test set.
pub fn evaluate(model: &dyn Segmenter, test: &DatasetManifest) -> Result<f64> {
    Ok(evaluate_overlap(model, test)?.iou())
}

/// Train the built-in learner and score its best snapshot on `test`.
pub fn run_builtin(
    train: &DatasetManifest,
    val: &DatasetManifest,
    test: &DatasetManifest,
    config: &TrainConfig,
) -> Result<RunResult> {
    let outcome = train_builtin(train, val, config)?;
    Ok(RunResult {
        test_perf: evaluate(&outcome.model, test)?,
        best_epoch: outcome.best_epoch,
        epochs_run: outcome.val_history.len(),
        val_history: outcome.val_history,
    })
}
