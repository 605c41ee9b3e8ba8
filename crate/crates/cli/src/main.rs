//! `slicewise`: ingest datasets, simulate labeling strategies, analyze and plot.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use slicewise::analysis::{analyze, SaturationParams};
use slicewise::effort::EffortAxis;
use slicewise::plan::{recommend_next, state_from_table, PlanParams, DEFAULT_QUALITY_THRESHOLD};
use slicewise::plot::render_plots;
use slicewise::runner::{self, load_aggregated, GridSpec};
use slicewise::store::{generate_phantoms, ingest_slice_stack};
use slicewise::trainer::TrainerKind;
use slicewise::trajectory::{DEFAULT_SATURATION_EPSILON, DEFAULT_SATURATION_WINDOW};

#[derive(Parser, Debug)]
#[command(name = "slicewise", version)]
#[command(about = "Simulate segmentation labeling strategies and find the optimal labeling trajectory")]
#[command(after_help = "Examples:
  slicewise synth --n 20 --dims 32 --seed 1 --out ds/
  slicewise run --grid qd.toml
  slicewise analyze --axis qd qd/aggregated.csv
  slicewise plot --axis qd qd/aggregated.csv --out figures/
  slicewise plan sweep/aggregated.csv")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Convert per-volume PGM slice stacks into a dataset
    Ingest {
        /// Directory with one subdirectory per volume holding img_NNNN.pgm and msk_NNNN.pgm
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Dataset id; defaults to the name of the output directory
        #[arg(long)]
        id: Option<String>,
    },
    /// Generate a synthetic ellipsoid phantom dataset
    Synth {
        #[arg(long)]
        n: usize,
        /// Volume size: one number for a cube, or NXxNYxNZ
        #[arg(long, default_value = "32")]
        dims: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "phantoms")]
        id: String,
    },
    /// Execute a grid file; completed runs are reused from the cache
    Run {
        #[arg(long)]
        grid: PathBuf,
        /// Output directory; defaults to the grid file path without extension
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        parallelism: Option<usize>,
        /// `builtin` or an external trainer command line
        #[arg(long)]
        trainer: Option<String>,
    },
    /// Write trajectory, importance and saturation tables
    Analyze {
        #[command(flatten)]
        input: TableArgs,
        /// Output directory; defaults to the table's directory
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write scatter, importance and saturation SVG figures
    Plot {
        #[command(flatten)]
        input: TableArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recommend the next labeling action from an aggregated table
    Plan {
        /// Aggregated (or raw results) CSV of a diversity sweep on the current labels
        table: PathBuf,
        /// Current label quality in percent; defaults to the table's median
        #[arg(long)]
        quality: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_QUALITY_THRESHOLD)]
        quality_threshold: f64,
        #[command(flatten)]
        saturation: SaturationArgs,
    },
}

#[derive(Args, Debug)]
struct TableArgs {
    /// Aggregated or raw results CSV
    table: PathBuf,
    /// Effort definition: qd (quality × diversity) or dc (diversity × completeness)
    #[arg(long, default_value = "qd")]
    axis: EffortAxis,
    #[command(flatten)]
    saturation: SaturationArgs,
}

#[derive(Args, Debug)]
struct SaturationArgs {
    /// Saturation threshold as a fraction of the best normalized performance
    #[arg(long, default_value_t = DEFAULT_SATURATION_EPSILON)]
    epsilon: f64,
    /// Consecutive small gains required for saturation
    #[arg(long, default_value_t = DEFAULT_SATURATION_WINDOW)]
    window: usize,
}

impl SaturationArgs {
    fn params(&self) -> SaturationParams {
        SaturationParams {
            epsilon: self.epsilon,
            window: self.window,
        }
    }
}

fn parse_dims(s: &str) -> Result<[usize; 3]> {
    let parts: Vec<usize> = s
        .split(['x', ','])
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("bad --dims `{s}`"))?;
    match parts[..] {
        [n] => Ok([n, n, n]),
        [x, y, z] => Ok([x, y, z]),
        _ => bail!("--dims takes one number or three (NXxNYxNZ), got `{s}`"),
    }
}

fn dataset_id_of(out: &Path) -> String {
    out.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .filter(|n| !n.is_empty())
        .unwrap_or_else(|| "dataset".into())
}

fn table_dir(table: &Path) -> PathBuf {
    table.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest { src, out, id } => {
            let id = id.unwrap_or_else(|| dataset_id_of(&out));
            let m = ingest_slice_stack(&src, &id, &out)?;
            println!("ingested {} volumes ({} labeled slices) into {}", m.len(), m.labeled_count(), out.display());
        }
        Command::Synth { n, dims, seed, out, id } => {
            let m = generate_phantoms(n, parse_dims(&dims)?, seed, &id, &out)?;
            println!("wrote {} phantoms ({} labeled slices) to {}", m.len(), m.labeled_count(), out.display());
        }
        Command::Run {
            grid,
            out,
            parallelism,
            trainer,
        } => {
            let mut spec = GridSpec::load(&grid).with_context(|| format!("loading {}", grid.display()))?;
            if let Some(p) = parallelism {
                spec.parallelism = p;
            }
            if let Some(t) = trainer {
                spec.train.trainer = TrainerKind::parse(&t);
            }
            spec.validate()?;
            let out = out.unwrap_or_else(|| grid.with_extension(""));
            let report = runner::run_grid(&spec, &out)?;
            for (i, e) in &report.failures {
                eprintln!("run {i} failed: {e}");
            }
            println!(
                "{} runs: {} executed, {} from cache, {} failed",
                report.results.len(),
                report.executed,
                report.cache_hits,
                report.failures.len()
            );
            println!("results: {}", report.results_path.display());
            println!("aggregated: {}", report.aggregated_path.display());
        }
        Command::Analyze { input, out } => {
            let rows = load_aggregated(&input.table)?;
            let a = analyze(&rows, input.axis, input.saturation.params())?;
            let dir = out.unwrap_or_else(|| table_dir(&input.table));
            let files = a.write_tables(&dir)?;
            for v in &a.trajectory.vertices {
                println!("vertex effort={} perf_norm={} {}", v.effort, v.perf_norm, v.id);
            }
            for c in &a.saturation {
                match c.saturation {
                    Some(s) => println!("{} saturates at {s}", c.virtue.name()),
                    None => println!("{} does not saturate", c.virtue.name()),
                }
            }
            for f in files {
                println!("wrote {}", f.display());
            }
        }
        Command::Plot { input, out } => {
            let rows = load_aggregated(&input.table)?;
            let a = analyze(&rows, input.axis, input.saturation.params())?;
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            for (name, svg) in render_plots(&rows, &a)? {
                let path = out.join(name);
                std::fs::write(&path, svg).with_context(|| format!("writing {}", path.display()))?;
                println!("wrote {}", path.display());
            }
        }
        Command::Plan {
            table,
            quality,
            quality_threshold,
            saturation,
        } => {
            let rows = load_aggregated(&table)?;
            let mut state = state_from_table(&rows)?;
            if let Some(q) = quality {
                state.achieved_quality = q;
            }
            let params = PlanParams {
                quality_threshold,
                saturation: saturation.params(),
            };
            let rec = recommend_next(&state, &params)?;
            println!("{}", serde_json::to_string_pretty(&rec)?);
        }
    }
    Ok(())
}

/// The error chain on one line, skipping causes already quoted by their parent.
fn describe(e: &anyhow::Error) -> String {
    let mut msg = String::new();
    for cause in e.chain() {
        let s = cause.to_string();
        if msg.contains(&s) {
            continue;
        }
        if !msg.is_empty() {
            msg.push_str(": ");
        }
        msg.push_str(&s);
    }
    msg
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // usage errors exit 2, --help and --version exit 0
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(1)
        }
    }
}
