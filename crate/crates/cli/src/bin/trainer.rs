//! The built-in learner behind the external trainer protocol: reads one
//! request line on stdin, streams epoch events and a final done event.

use std::io::{self, BufRead, Write};
use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};

use slicewise::store::DatasetManifest;
use slicewise::trainer::protocol::{Event, Request};
use slicewise::trainer::{evaluate, train_on_slices, TrainConfig};
use slicewise::virtue::training_slices;

fn load(path: &str) -> Result<DatasetManifest> {
    DatasetManifest::load(Path::new(path)).with_context(|| format!("loading manifest {path}"))
}

fn emit(out: &mut impl Write, event: &Event) -> io::Result<()> {
    writeln!(out, "{}", event.to_line())?;
    out.flush()
}

fn serve() -> Result<()> {
    let mut line = String::new();
    if io::stdin().lock().read_line(&mut line)? == 0 {
        bail!("no request on stdin");
    }
    let request: Request = serde_json::from_str(line.trim()).context("malformed request")?;
    let Request::Train {
        train,
        val,
        test,
        seed,
        max_epochs,
        patience,
        lr,
    } = request;
    let (train, val, test) = (load(&train)?, load(&val)?, load(&test)?);
    let config = TrainConfig {
        max_epochs,
        patience,
        learning_rate: lr,
        seed,
        ..TrainConfig::default()
    };

    let mut out = io::stdout().lock();
    let mut write_err = None;
    let slices = training_slices(&train)?;
    let outcome = train_on_slices(&train, &slices, &val, &config, |epoch, val_iou| {
        if write_err.is_none() {
            write_err = emit(&mut out, &Event::Epoch { epoch, val_iou }).err();
        }
    })?;
    if let Some(e) = write_err {
        return Err(e).context("writing epoch event");
    }
    let test_iou = evaluate(&outcome.model, &test)?;
    emit(
        &mut out,
        &Event::Done {
            test_iou,
            best_epoch: outcome.best_epoch,
        },
    )?;
    Ok(())
}

fn main() -> ExitCode {
    match serve() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("slicewise-trainer: {e:#}");
            ExitCode::from(1)
        }
    }
}
