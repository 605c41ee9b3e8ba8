//! Grid execution: expand, run each (cell, repeat) once, cache, aggregate.

pub mod cache;
pub mod grid;
pub mod table;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::json;

use crate::error::{Error, IoContext, Result};
use crate::rng::derive_seed;
use crate::store::DatasetManifest;
use crate::trainer::{run_builtin, run_external, TrainConfig, TrainerKind};
use crate::virtue::{
    apply_quality, record_upsample, sample_completeness, sample_diversity, split_test, split_train_val,
    step_for_target_quality, QualitySpec, TEST_FRACTION, UPSAMPLE_FRACTION,
};

pub use cache::{sha256_hex, RunCache, RunRecord};
pub use grid::{expand_grid, run_seed, Axis, Cell, GridSpec, RunSpec};
pub use table::{aggregate, aggregate_median, load_aggregated, AggregatedRow, ResultRow, RunStatus};

/// Bumped whenever the pipeline changes what a run hash stands for.
const PIPELINE_VERSION: u64 = 1;

pub const RESULTS_FILE: &str = "results.csv";
pub const AGGREGATED_FILE: &str = "aggregated.csv";

/// Sub-seed slots derived from a run seed.
const SEED_DIVERSITY: u64 = 1;
const SEED_COMPLETENESS: u64 = 2;
const SEED_SPLIT: u64 = 3;
const SEED_TRAIN: u64 = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct GridReport {
    pub results: Vec<ResultRow>,
    pub aggregated: Vec<AggregatedRow>,
    pub executed: usize,
    pub cache_hits: usize,
    /// `(run index, error)` for every failed run.
    pub failures: Vec<(usize, String)>,
    pub results_path: PathBuf,
    pub aggregated_path: PathBuf,
}

/// Everything shared by the runs of one grid.
struct GridContext<'a> {
    spec: &'a GridSpec,
    trainval: DatasetManifest,
    test: DatasetManifest,
    original_labeled_count: usize,
    manifest_hash: String,
    work_dir: PathBuf,
}

impl GridContext<'_> {
    fn run_hash(&self, run: &RunSpec) -> String {
        let quality = match run.cell.quality {
            QualitySpec::Target(q) => json!({ "target": q }),
            QualitySpec::Step(s) => json!({ "step": s }),
        };
        let t = &self.spec.train;
        let key = json!({
            "pipeline": PIPELINE_VERSION,
            "dataset_id": self.trainval.dataset_id,
            "manifest": self.manifest_hash,
            "test_fraction": TEST_FRACTION,
            "test_split_seed": self.spec.base_seed,
            "upsample_fraction": UPSAMPLE_FRACTION,
            "diversity": run.cell.diversity,
            "completeness": run.cell.completeness,
            "quality": quality,
            "seed": run.seed,
            "trainer": t.trainer.describe(),
            "max_epochs": t.max_epochs,
            "patience": t.patience,
            "lr": t.learning_rate,
        });
        sha256_hex(key.to_string().as_bytes())
    }

    /// diversity → completeness → quality, then train/val split, upsampling,
    /// training and evaluation.
    fn execute(&self, run: &RunSpec, hash: &str) -> Result<RunRecord> {
        let cell = &run.cell;
        let sub = |slot| derive_seed(&[run.seed, slot]);
        let m = sample_diversity(&self.trainval, cell.diversity, sub(SEED_DIVERSITY))?;
        let m = sample_completeness(&m, cell.completeness, sub(SEED_COMPLETENESS))?;
        let step = match cell.quality {
            QualitySpec::Target(q) => step_for_target_quality(&m, q)?.0,
            QualitySpec::Step(s) => s,
        };
        let run_dir = self.work_dir.join(hash);
        let (m, report) = apply_quality(&m, step, &run_dir.join("masks"))?;
        let (train, val) = split_train_val(&m, sub(SEED_SPLIT))?;
        let train = record_upsample(&train, self.original_labeled_count);
        let config = TrainConfig {
            seed: sub(SEED_TRAIN),
            ..self.spec.train.clone()
        };

        let result = match &config.trainer {
            TrainerKind::Builtin => run_builtin(&train, &val, &self.test, &config)?,
            TrainerKind::External(cmd) => {
                let paths = [("train", &train), ("val", &val), ("test", &self.test)]
                    .into_iter()
                    .map(|(name, m)| {
                        let p = run_dir.join(format!("{name}.json"));
                        m.resolved()?.save(&p)?;
                        Ok(p)
                    })
                    .collect::<Result<Vec<_>>>()?;
                run_external(cmd, &paths[0], &paths[1], &paths[2], &config)?
            }
        };
        if run_dir.exists() {
            std::fs::remove_dir_all(&run_dir).at(&run_dir)?;
        }
        Ok(RunRecord {
            run_hash: hash.to_owned(),
            seed: run.seed,
            slice_step: step,
            quality_achieved: report.achieved_iou * 100.0,
            perf_raw: result.test_perf,
            best_epoch: result.best_epoch,
            epochs_run: result.epochs_run,
            val_history: result.val_history,
        })
    }
}

enum Outcome {
    Cached(RunRecord),
    Fresh(RunRecord),
    Failed(String),
}

/// Execute every run of `spec` under `out_dir`, skipping runs already in
/// `out_dir/cache`, and write `results.csv` and `aggregated.csv` there.
///
/// Failed runs are recorded, never cached. Returns an error only when the
/// grid itself cannot be set up or the baseline cell cannot be aggregated;
/// the results table is written in either case.
pub fn run_grid(spec: &GridSpec, out_dir: &Path) -> Result<GridReport> {
    let runs = expand_grid(spec)?;
    let dataset = DatasetManifest::load(&spec.dataset)?;
    let (trainval, test) = split_test(&dataset, TEST_FRACTION, spec.base_seed)?;
    std::fs::create_dir_all(out_dir).at(out_dir)?;
    let ctx = GridContext {
        spec,
        original_labeled_count: trainval.labeled_count(),
        manifest_hash: sha256_hex(dataset.to_json().as_bytes()),
        trainval,
        test,
        work_dir: out_dir.join("work"),
    };
    let cache = RunCache::open(&out_dir.join("cache"))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.parallelism)
        .build()
        .map_err(|e| Error::Invalid(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<Outcome> = pool.install(|| {
        runs.par_iter()
            .map(|run| {
                let hash = ctx.run_hash(run);
                match cache.get(&hash) {
                    Ok(Some(rec)) => return Outcome::Cached(rec),
                    Ok(None) => {}
                    Err(e) => return Outcome::Failed(e.to_string()),
                }
                match ctx.execute(run, &hash).and_then(|rec| cache.put(&rec).map(|()| rec)) {
                    Ok(rec) => Outcome::Fresh(rec),
                    Err(e) => Outcome::Failed(e.to_string()),
                }
            })
            .collect()
    });

    let mut results = Vec::with_capacity(runs.len());
    let (mut executed, mut cache_hits, mut failures) = (0, 0, Vec::new());
    for (i, (run, outcome)) in runs.iter().zip(outcomes).enumerate() {
        let rec = match outcome {
            Outcome::Cached(r) => {
                cache_hits += 1;
                Some(r)
            }
            Outcome::Fresh(r) => {
                executed += 1;
                Some(r)
            }
            Outcome::Failed(e) => {
                executed += 1;
                failures.push((i, e));
                None
            }
        };
        results.push(result_row(&ctx.test.dataset_id, spec.axis, run, rec.as_ref()));
    }

    let results_path = out_dir.join(RESULTS_FILE);
    table::write_csv(&results_path, &results)?;
    let aggregated = aggregate(&results)?;
    let aggregated_path = out_dir.join(AGGREGATED_FILE);
    table::write_csv(&aggregated_path, &aggregated)?;
    Ok(GridReport {
        results,
        aggregated,
        executed,
        cache_hits,
        failures,
        results_path,
        aggregated_path,
    })
}

fn result_row(dataset_id: &str, axis: Axis, run: &RunSpec, rec: Option<&RunRecord>) -> ResultRow {
    let (quality_target, fixed_step) = match run.cell.quality {
        QualitySpec::Target(q) => (Some(q), None),
        QualitySpec::Step(s) => (None, Some(s)),
    };
    ResultRow {
        dataset_id: dataset_id.to_owned(),
        axis,
        diversity: run.cell.diversity,
        completeness: run.cell.completeness,
        quality_target,
        quality_achieved: rec.map(|r| r.quality_achieved),
        slice_step: rec.map(|r| r.slice_step).or(fixed_step),
        seed: run.seed,
        perf_raw: rec.map(|r| r.perf_raw),
        best_epoch: rec.map(|r| r.best_epoch),
        status: if rec.is_some() { RunStatus::Ok } else { RunStatus::Failed },
    }
}
