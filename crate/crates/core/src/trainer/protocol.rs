//! Trainer wire protocol: newline-delimited UTF-8 JSON over stdio.
//!
//! ```text
//! harness -> trainer  {"cmd":"train","train":"<path>","val":"<path>","test":"<path>","seed":N,"max_epochs":100,"patience":10,"lr":0.0003}
//! trainer -> harness  {"event":"epoch","epoch":N,"val_iou":X}     (zero or more)
//! trainer -> harness  {"event":"done","test_iou":X,"best_epoch":N} (exactly one, last)
//! ```
//!
//! Exit code 0 marks success; anything else is a failed run.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "cmd", rename_all = "lowercase")]
pub enum Request {
    Train {
        train: String,
        val: String,
        test: String,
        seed: u64,
        max_epochs: usize,
        patience: usize,
        lr: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "lowercase", deny_unknown_fields)]
pub enum Event {
    Epoch { epoch: usize, val_iou: f64 },
    Done { test_iou: f64, best_epoch: usize },
}

impl Request {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("request serializes")
    }
}

impl Event {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("event serializes")
    }

    pub fn parse(line: &str) -> Result<Self, String> {
        serde_json::from_str(line).map_err(|e| e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_wire_shape() {
        let r = Request::Train {
            train: "t.json".into(),
            val: "v.json".into(),
            test: "x.json".into(),
            seed: 3,
            max_epochs: 100,
            patience: 10,
            lr: 3e-4,
        };
        assert_eq!(
            r.to_line(),
            r#"{"cmd":"train","train":"t.json","val":"v.json","test":"x.json","seed":3,"max_epochs":100,"patience":10,"lr":0.0003}"#
        );
        let back: Request = serde_json::from_str(&r.to_line()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn event_wire_shape() {
        assert_eq!(
            Event::Epoch { epoch: 2, val_iou: 0.5 }.to_line(),
            r#"{"event":"epoch","epoch":2,"val_iou":0.5}"#
        );
        assert_eq!(
            Event::parse(r#"{"event":"done","test_iou":0.25,"best_epoch":1}"#).unwrap(),
            Event::Done { test_iou: 0.25, best_epoch: 1 }
        );
        assert!(Event::parse(r#"{"event":"epoch","epoch":1}"#).is_err());
        assert!(Event::parse(r#"{"event":"progress"}"#).is_err());
        assert!(Event::parse("not json").is_err());
    }
}
