//! Run report: a diffable plain-text key-value log of one workflow run.
//! Timing keys are prefixed `time_` so byte comparisons can skip them.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct RunReport {
    lines: Vec<(String, String)>,
}

impl RunReport {
    pub fn new() -> Self {
        RunReport::default()
    }

    pub fn put(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.lines.push((key.into(), value.into()));
    }

    pub fn put_timing(&mut self, stage: &str, seconds: f64) {
        self.put(format!("time_{stage}"), format!("{seconds:.3}"));
    }

    pub fn put_hash(&mut self, name: &str, bytes: &[u8]) {
        use sha2::{Digest, Sha256};
        self.put(format!("hash_{name}"), format!("{:x}", Sha256::digest(bytes)));
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.lines {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.render())
            .map_err(|e| Error::io(path.display().to_string(), e))
    }

    /// Report text with `time_` lines removed, for determinism comparisons.
    pub fn without_timings(text: &str) -> String {
        text.lines()
            .filter(|l| !l.starts_with("time_"))
            .collect::<Vec<_>>()
            .join("\n")
    }
}
