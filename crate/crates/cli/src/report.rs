use std::fmt::Write as _;

use clap::ValueEnum;
use serde_json::{Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Plain,
    Records,
    Tex,
}

#[derive(Clone, Debug, PartialEq)]
struct Line {
    text: String,
    status: Option<bool>,
}

/// Output of one command, kept in all three renderings.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    records: Vec<Value>,
    plain: Vec<Line>,
    tex: Vec<String>,
    failed: bool,
}

impl Report {
    pub fn new() -> Report {
        Report::default()
    }

    /// Add a structured record. `fields` must be a JSON object.
    pub fn record(&mut self, kind: &str, fields: Value) {
        let mut obj = Map::new();
        obj.insert("kind".into(), Value::String(kind.into()));
        if let Value::Object(m) = fields {
            obj.extend(m);
        }
        self.records.push(Value::Object(obj));
    }

    pub fn line(&mut self, text: impl Into<String>) {
        self.plain.push(Line {
            text: text.into(),
            status: None,
        });
    }

    /// A plain line ending in an ok/FAILED tag.
    pub fn check(&mut self, text: impl Into<String>, ok: bool) {
        self.plain.push(Line {
            text: text.into(),
            status: Some(ok),
        });
    }

    pub fn tex(&mut self, text: impl Into<String>) {
        self.tex.push(text.into());
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        let message = message.into();
        self.plain.push(Line {
            text: format!("warning: {message}"),
            status: None,
        });
        self.tex.push(format!("% warning: {message}"));
        self.record("warning", serde_json::json!({ "message": message }));
    }

    /// Mark the run as a verification failure.
    pub fn fail(&mut self) {
        self.failed = true;
    }

    pub fn failed(&self) -> bool {
        self.failed
    }

    pub fn records(&self) -> &[Value] {
        &self.records
    }

    pub fn render(&self, format: Format, color: bool) -> String {
        let mut out = String::new();
        match format {
            Format::Plain => {
                for l in &self.plain {
                    out.push_str(&l.text);
                    match (l.status, color) {
                        (Some(true), true) => out.push_str("  \x1b[32mok\x1b[0m"),
                        (Some(false), true) => out.push_str("  \x1b[31mFAILED\x1b[0m"),
                        (Some(true), false) => out.push_str("  ok"),
                        (Some(false), false) => out.push_str("  FAILED"),
                        (None, _) => {}
                    }
                    out.push('\n');
                }
            }
            Format::Records => {
                for r in &self.records {
                    let _ = writeln!(out, "{r}");
                }
            }
            Format::Tex => {
                for t in &self.tex {
                    let _ = writeln!(out, "{t}");
                }
            }
        }
        out
    }
}
