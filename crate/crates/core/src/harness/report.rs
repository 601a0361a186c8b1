use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gsa::AttackResult;

/// One condition of an experiment grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub condition: String,
    /// Numeric value of the swept parameter, when there is one.
    pub value: Option<f64>,
    /// Attempts aggregated in this row.
    pub scenes: usize,
    pub successes: usize,
    pub asr: f64,
    pub mean_calls: f64,
    pub mean_ms: f64,
    /// Attempts that failed because the oracle errored; counted as failures.
    #[serde(default)]
    pub errors: usize,
}

impl ReportRow {
    pub fn new(condition: impl Into<String>, value: Option<f64>) -> Self {
        Self {
            condition: condition.into(),
            value,
            scenes: 0,
            successes: 0,
            asr: 0.0,
            mean_calls: 0.0,
            mean_ms: 0.0,
            errors: 0,
        }
    }

    /// Adds one attempt; `outcome` is `None` when the oracle failed.
    pub fn record(&mut self, outcome: Option<bool>, calls: u64, ms: f64) {
        let n = self.scenes as f64;
        self.scenes += 1;
        match outcome {
            Some(true) => self.successes += 1,
            Some(false) => {}
            None => self.errors += 1,
        }
        self.asr = self.successes as f64 / self.scenes as f64;
        self.mean_calls = (self.mean_calls * n + calls as f64) / (n + 1.0);
        self.mean_ms = (self.mean_ms * n + ms) / (n + 1.0);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub kind: String,
    pub seed: u64,
    pub rows: Vec<ReportRow>,
}

/// x/y series for external plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotSeries {
    pub kind: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub labels: Vec<String>,
}

pub const CSV_HEADER: &str = "condition,scenes,successes,asr,mean_calls,mean_ms";

impl Report {
    pub fn new(kind: impl Into<String>, seed: u64) -> Self {
        Self {
            kind: kind.into(),
            seed,
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("# kind={} seed={}\n{CSV_HEADER}\n", self.kind, self.seed);
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{:.4},{:.2},{:.3}",
                r.condition, r.scenes, r.successes, r.asr, r.mean_calls, r.mean_ms
            );
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn plot_data(&self) -> PlotSeries {
        PlotSeries {
            kind: self.kind.clone(),
            x: self
                .rows
                .iter()
                .enumerate()
                .map(|(i, r)| r.value.unwrap_or(i as f64))
                .collect(),
            y: self.rows.iter().map(|r| r.asr).collect(),
            labels: self.rows.iter().map(|r| r.condition.clone()).collect(),
        }
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>, stem: &str) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (ext, body) in [("csv", self.to_csv()), ("json", self.to_json())] {
            let path = dir.join(format!("{stem}.{ext}"));
            fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

/// Fraction of successful attacks.
pub fn compute_asr(results: &[AttackResult]) -> Result<f64> {
    if results.is_empty() {
        return Err(Error::arg("attack success rate of an empty result set"));
    }
    Ok(results.iter().filter(|r| r.success).count() as f64 / results.len() as f64)
}
