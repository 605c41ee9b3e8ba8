//! Supervisor for external trainer processes.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use super::protocol::{Event, Request};
use super::{EarlyStopping, RunResult, TrainConfig};
use crate::error::{Error, Result};

const STDERR_TAIL: usize = 2048;

fn protocol(line: usize, reason: impl Into<String>) -> Error {
    Error::Protocol {
        line,
        reason: reason.into(),
    }
}

fn unit_interval(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

/// Launch `command`, send one train request and supervise the event stream.
///
/// Epoch events beyond `max_epochs` are violations. Once the harness-side
/// early stopping trips, further epoch events are dropped from the history
/// and the reported best epoch must lie within what was kept. The process is
/// killed on any violation or when `config.timeout` elapses.
pub fn run_external(
    command: &str,
    train: &Path,
    val: &Path,
    test: &Path,
    config: &TrainConfig,
) -> Result<RunResult> {
    config.validate()?;
    let argv = shlex::split(command)
        .filter(|a| !a.is_empty())
        .ok_or_else(|| Error::Invalid(format!("cannot parse trainer command `{command}`")))?;
    let mut child = Command::new(&argv[0])
        .args(&argv[1..])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| Error::Trainer(format!("cannot launch `{command}`: {e}")))?;

    let request = Request::Train {
        train: train.to_string_lossy().into_owned(),
        val: val.to_string_lossy().into_owned(),
        test: test.to_string_lossy().into_owned(),
        seed: config.seed,
        max_epochs: config.max_epochs,
        patience: config.patience,
        lr: config.learning_rate,
    };
    {
        let mut stdin = child.stdin.take().expect("piped stdin");
        // A trainer that exits without reading is reported below via its exit status.
        let _ = writeln!(stdin, "{}", request.to_line());
    }

    let stdout = child.stdout.take().expect("piped stdout");
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for line in BufReader::new(stdout).lines() {
            if tx.send(line).is_err() {
                break;
            }
        }
    });
    let mut stderr = child.stderr.take().expect("piped stderr");
    let stderr_thread = thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = stderr.read_to_end(&mut buf);
        let text = String::from_utf8_lossy(&buf).into_owned();
        let cut = text.len().saturating_sub(STDERR_TAIL);
        let cut = (cut..text.len()).find(|&i| text.is_char_boundary(i)).unwrap_or(text.len());
        text[cut..].to_owned()
    });

    let deadline = Instant::now() + config.timeout;
    let mut session = Session::new(config);
    let outcome = loop {
        let remaining = deadline.saturating_duration_since(Instant::now());
        match rx.recv_timeout(remaining) {
            Ok(Ok(line)) => match session.feed(&line) {
                Ok(()) => {}
                Err(e) => break Err(e),
            },
            Ok(Err(e)) => break Err(Error::Trainer(format!("reading trainer output: {e}"))),
            Err(RecvTimeoutError::Timeout) => break Err(Error::Timeout(config.timeout)),
            Err(RecvTimeoutError::Disconnected) => break Ok(()),
        }
    };

    if let Err(e) = outcome {
        kill(&mut child);
        return Err(e);
    }
    let status = loop {
        match child.try_wait() {
            Ok(Some(status)) => break status,
            Ok(None) if Instant::now() >= deadline => {
                kill(&mut child);
                return Err(Error::Timeout(config.timeout));
            }
            Ok(None) => thread::sleep(Duration::from_millis(5)),
            Err(e) => return Err(Error::Trainer(format!("waiting for trainer: {e}"))),
        }
    };
    let stderr_tail = stderr_thread.join().unwrap_or_default();
    let result = session.finish().map_err(|e| match e {
        Error::Trainer(msg) => Error::Trainer(format!("{msg} (exit {status}); stderr: {stderr_tail}")),
        other => other,
    })?;
    if !status.success() {
        return Err(Error::Trainer(format!(
            "trainer exited with {status}; stderr: {stderr_tail}"
        )));
    }
    Ok(result)
}

fn kill(child: &mut Child) {
    let _ = child.kill();
    let _ = child.wait();
}

/// Protocol state machine, independent of the process plumbing.
struct Session {
    max_epochs: usize,
    stopper: EarlyStopping,
    history: Vec<f64>,
    line: usize,
    last_epoch: usize,
    done: Option<(f64, usize)>,
}

impl Session {
    fn new(config: &TrainConfig) -> Self {
        Self {
            max_epochs: config.max_epochs,
            stopper: EarlyStopping::new(config.patience),
            history: Vec::new(),
            line: 0,
            last_epoch: 0,
            done: None,
        }
    }

    fn feed(&mut self, line: &str) -> Result<()> {
        self.line += 1;
        let n = self.line;
        if self.done.is_some() {
            return Err(protocol(n, "output after the done event"));
        }
        let event = Event::parse(line.trim_end_matches('\r'))
            .map_err(|e| protocol(n, format!("malformed event `{line}`: {e}")))?;
        match event {
            Event::Epoch { epoch, val_iou } => {
                if epoch != self.last_epoch + 1 {
                    return Err(protocol(n, format!("expected epoch {}, got {epoch}", self.last_epoch + 1)));
                }
                if epoch > self.max_epochs {
                    return Err(protocol(n, format!("epoch {epoch} exceeds max_epochs {}", self.max_epochs)));
                }
                if !unit_interval(val_iou) {
                    return Err(protocol(n, format!("val_iou {val_iou} outside [0, 1]")));
                }
                self.last_epoch = epoch;
                if !self.stopper.stopped() {
                    self.history.push(val_iou);
                    self.stopper.update(val_iou);
                }
            }
            Event::Done { test_iou, best_epoch } => {
                if !unit_interval(test_iou) {
                    return Err(protocol(n, format!("test_iou {test_iou} outside [0, 1]")));
                }
                if self.history.is_empty() {
                    if best_epoch != 0 {
                        return Err(protocol(n, format!("best_epoch {best_epoch} without epoch events")));
                    }
                } else if best_epoch == 0 || best_epoch > self.history.len() {
                    return Err(protocol(n, format!(
                        "best_epoch {best_epoch} outside the {} epochs kept by early stopping",
                        self.history.len()
                    )));
                } else if self.history[best_epoch - 1] != self.stopper.best() {
                    return Err(protocol(n, format!(
                        "best_epoch {best_epoch} has val_iou {} but the best is {}",
                        self.history[best_epoch - 1],
                        self.stopper.best()
                    )));
                }
                self.done = Some((test_iou, best_epoch));
            }
        }
        Ok(())
    }

    fn finish(self) -> Result<RunResult> {
        let (test_perf, best_epoch) = self
            .done
            .ok_or_else(|| Error::Trainer("trainer exited before the done event".into()))?;
        Ok(RunResult {
            test_perf,
            best_epoch,
            epochs_run: self.history.len(),
            val_history: self.history,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn session(max_epochs: usize, patience: usize) -> Session {
        Session::new(&TrainConfig {
            max_epochs,
            patience,
            ..TrainConfig::default()
        })
    }

    #[test]
    fn echo_three_epochs() {
        let mut s = session(100, 10);
        for (i, v) in [0.2, 0.4, 0.3].iter().enumerate() {
            s.feed(&Event::Epoch { epoch: i + 1, val_iou: *v }.to_line()).unwrap();
        }
        s.feed(r#"{"event":"done","test_iou":0.5,"best_epoch":2}"#).unwrap();
        let r = s.finish().unwrap();
        assert_eq!((r.test_perf, r.epochs_run, r.best_epoch), (0.5, 3, 2));
    }

    #[test]
    fn malformed_line_reports_its_number() {
        let mut s = session(100, 10);
        s.feed(r#"{"event":"epoch","epoch":1,"val_iou":0.1}"#).unwrap();
        match s.feed("garbage") {
            Err(Error::Protocol { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn violations() {
        let mut s = session(2, 10);
        s.feed(r#"{"event":"epoch","epoch":1,"val_iou":0.1}"#).unwrap();
        assert!(s.feed(r#"{"event":"epoch","epoch":3,"val_iou":0.1}"#).is_err());

        let mut s = session(1, 10);
        s.feed(r#"{"event":"epoch","epoch":1,"val_iou":0.1}"#).unwrap();
        assert!(s.feed(r#"{"event":"epoch","epoch":2,"val_iou":0.1}"#).is_err());

        let mut s = session(5, 10);
        assert!(s.feed(r#"{"event":"epoch","epoch":1,"val_iou":1.5}"#).is_err());

        let mut s = session(5, 10);
        s.feed(r#"{"event":"epoch","epoch":1,"val_iou":0.3}"#).unwrap();
        s.feed(r#"{"event":"epoch","epoch":2,"val_iou":0.2}"#).unwrap();
        assert!(s.feed(r#"{"event":"done","test_iou":0.5,"best_epoch":2}"#).is_err());

        let mut s = session(5, 10);
        s.feed(r#"{"event":"done","test_iou":0.5,"best_epoch":0}"#).unwrap();
        assert!(s.feed(r#"{"event":"done","test_iou":0.5,"best_epoch":0}"#).is_err());

        assert!(session(5, 10).finish().is_err());
    }

    #[test]
    fn harness_enforces_patience() {
        let mut s = session(100, 1);
        for (i, v) in [0.5, 0.4, 0.9, 0.95].iter().enumerate() {
            s.feed(&Event::Epoch { epoch: i + 1, val_iou: *v }.to_line()).unwrap();
        }
        // stopped after epoch 2; the late improvement is outside the kept history
        assert!(s.feed(r#"{"event":"done","test_iou":0.9,"best_epoch":4}"#).is_err());

        let mut s = session(100, 1);
        for (i, v) in [0.5, 0.4, 0.9].iter().enumerate() {
            s.feed(&Event::Epoch { epoch: i + 1, val_iou: *v }.to_line()).unwrap();
        }
        s.feed(r#"{"event":"done","test_iou":0.7,"best_epoch":1}"#).unwrap();
        let r = s.finish().unwrap();
        assert_eq!(r.val_history, vec![0.5, 0.4]);
    }
}
