//! Declarative experiment grids.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::trainer::{TrainConfig, TrainerKind};
use crate::virtue::{check_fraction, check_percent, QualitySpec};

pub const DEFAULT_REPEATS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    #[serde(alias = "qd")]
    QualityDiversity,
    #[serde(alias = "dc")]
    DiversityCompleteness,
    QualitySweep,
    DiversitySweep,
}

impl Axis {
    pub fn as_str(self) -> &'static str {
        match self {
            Axis::QualityDiversity => "quality-diversity",
            Axis::DiversityCompleteness => "diversity-completeness",
            Axis::QualitySweep => "quality-sweep",
            Axis::DiversitySweep => "diversity-sweep",
        }
    }

    /// Which virtue lists may hold more than one value: (diversity, completeness, quality).
    fn varies(self) -> (bool, bool, bool) {
        match self {
            Axis::QualityDiversity => (true, false, true),
            Axis::DiversityCompleteness => (true, true, false),
            Axis::QualitySweep => (false, false, true),
            Axis::DiversitySweep => (true, false, false),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quality-diversity" | "qd" => Ok(Axis::QualityDiversity),
            "diversity-completeness" | "dc" => Ok(Axis::DiversityCompleteness),
            "quality-sweep" => Ok(Axis::QualitySweep),
            "diversity-sweep" => Ok(Axis::DiversitySweep),
            other => Err(Error::Invalid(format!("unknown axis `{other}`"))),
        }
    }
}

/// One point of the virtue grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub diversity: f64,
    pub completeness: f64,
    pub quality: QualitySpec,
}

impl Cell {
    pub const BASELINE: Cell = Cell {
        diversity: 1.0,
        completeness: 1.0,
        quality: QualitySpec::Target(100.0),
    };

    pub fn is_baseline(&self) -> bool {
        *self == Cell::BASELINE
    }

    fn seed_parts(&self) -> [u64; 4] {
        let (tag, q) = match self.quality {
            QualitySpec::Target(q) => (0, q.to_bits()),
            QualitySpec::Step(s) => (1, s as u64),
        };
        [self.diversity.to_bits(), self.completeness.to_bits(), tag, q]
    }
}

/// One training run: a cell and a repeat index with its derived seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSpec {
    pub cell: Cell,
    pub repeat: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    /// Dataset directory or manifest file.
    pub dataset: PathBuf,
    pub axis: Axis,
    pub diversity: Vec<f64>,
    pub completeness: Vec<f64>,
    pub quality: Vec<QualitySpec>,
    pub repeats: usize,
    pub base_seed: u64,
    /// Trainer settings; the seed is replaced per run.
    pub train: TrainConfig,
    pub parallelism: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFile {
    dataset: PathBuf,
    axis: Axis,
    diversity: Option<Vec<f64>>,
    completeness: Option<Vec<f64>>,
    quality: Option<Vec<f64>>,
    slice_step: Option<Vec<usize>>,
    repeats: Option<usize>,
    seed: Option<u64>,
    trainer: Option<String>,
    max_epochs: Option<usize>,
    patience: Option<usize>,
    lr: Option<f64>,
    parallelism: Option<usize>,
    timeout_secs: Option<u64>,
}

fn default_parallelism() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl GridSpec {
    pub fn new(dataset: impl Into<PathBuf>, axis: Axis) -> Self {
        Self {
            dataset: dataset.into(),
            axis,
            diversity: vec![1.0],
            completeness: vec![1.0],
            quality: vec![QualitySpec::Target(100.0)],
            repeats: DEFAULT_REPEATS,
            base_seed: 0,
            train: TrainConfig::default(),
            parallelism: default_parallelism(),
        }
    }

    /// Parse a TOML grid file. A relative `dataset` is taken relative to `base_dir`.
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let f: GridFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut spec = GridSpec::new(base_dir.join(&f.dataset), f.axis);
        if let Some(d) = f.diversity {
            spec.diversity = d;
        }
        if let Some(c) = f.completeness {
            spec.completeness = c;
        }
        spec.quality = match (f.quality, f.slice_step) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("give either `quality` or `slice_step`, not both".into()))
            }
            (Some(q), None) => q.into_iter().map(QualitySpec::Target).collect(),
            (None, Some(s)) => s.into_iter().map(QualitySpec::Step).collect(),
            (None, None) => spec.quality,
        };
        spec.repeats = f.repeats.unwrap_or(DEFAULT_REPEATS);
        spec.base_seed = f.seed.unwrap_or(0);
        if let Some(t) = f.trainer {
            spec.train.trainer = TrainerKind::parse(&t);
        }
        if let Some(n) = f.max_epochs {
            spec.train.max_epochs = n;
        }
        if let Some(p) = f.patience {
            spec.train.patience = p;
        }
        if let Some(lr) = f.lr {
            spec.train.learning_rate = lr;
        }
        if let Some(s) = f.timeout_secs {
            spec.train.timeout = Duration::from_secs(s);
        }
        if let Some(p) = f.parallelism {
            spec.parallelism = p;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base)
    }

    pub fn validate(&self) -> Result<()> {
        if self.diversity.is_empty() || self.completeness.is_empty() || self.quality.is_empty() {
            return Err(Error::Config("virtue value lists must not be empty".into()));
        }
        for &d in &self.diversity {
            check_fraction("diversity", d)?;
        }
        for &c in &self.completeness {
            check_fraction("completeness", c)?;
        }
        for q in &self.quality {
            match *q {
                QualitySpec::Target(p) => check_percent(p)?,
                QualitySpec::Step(0) => return Err(Error::Config("slice_step must be >= 1".into())),
                QualitySpec::Step(_) => {}
            }
        }
        let (vd, vc, vq) = self.axis.varies();
        for (name, varies, n) in [
            ("diversity", vd, self.diversity.len()),
            ("completeness", vc, self.completeness.len()),
            ("quality", vq, self.quality.len()),
        ] {
            if !varies && n > 1 {
                return Err(Error::Config(format!(
                    "axis {} keeps {name} fixed but {n} values were given",
                    self.axis
                )));
            }
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be >= 1".into()));
        }
        if self.parallelism == 0 {
            return Err(Error::Config("parallelism must be >= 1".into()));
        }
        self.train.validate()
    }

    /// Cartesian product of the value lists (diversity outermost), plus the
    /// baseline cell when it is not already part of it.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for &diversity in &self.diversity {
            for &completeness in &self.completeness {
                for &quality in &self.quality {
                    let cell = Cell {
                        diversity,
                        completeness,
                        quality,
                    };
                    if !cells.contains(&cell) {
                        cells.push(cell);
                    }
                }
            }
        }
        if !cells.iter().any(Cell::is_baseline) {
            cells.push(Cell::BASELINE);
        }
        cells
    }
}

/// Seed of one run, derived from the cell's virtue values rather than its
/// position so that editing the grid never reshuffles existing runs.
pub fn run_seed(base_seed: u64, cell: &Cell, repeat: usize) -> u64 {
    let [d, c, tag, q] = cell.seed_parts();
    derive_seed(&[base_seed, d, c, tag, q, repeat as u64])
}

/// Every run of the grid: cells in [`GridSpec::cells`] order, repeats inner.
pub fn expand_grid(spec: &GridSpec) -> Result<Vec<RunSpec>> {
    spec.validate()?;
    Ok(spec
        .cells()
        .into_iter()
        .flat_map(|cell| {
            (0..spec.repeats).map(move |repeat| RunSpec {
                cell,
                repeat,
                seed: run_seed(spec.base_seed, &cell, repeat),
            })
        })
        .collect())
}
