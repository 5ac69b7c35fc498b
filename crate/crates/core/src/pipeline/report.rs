use super::config::Architecture;
use crate::error::Result;
use crate::net::TAPS;
use crate::readout::{Metrics, SweepResult};
use crate::{CLASSES, FEATURES};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const FLOPS_FORMULA: &str = "2*taps*outputs*conv_layers + 2*readout_dim*classes";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlopEstimate {
    pub count: u64,
    pub conv_layers: usize,
    pub readout_dim: usize,
    pub formula: String,
}

/// Multiply-adds counted as two operations: each conv block costs
/// `2 · 25 · 1024`, the linear readout `2 · D · 10`. Fixed transforms are free.
pub fn estimate_flops(conv_layers: usize, readout_dim: usize) -> FlopEstimate {
    let conv = 2 * TAPS as u64 * FEATURES as u64 * conv_layers as u64;
    let readout = 2 * readout_dim as u64 * CLASSES as u64;
    FlopEstimate {
        count: conv + readout,
        conv_layers,
        readout_dim,
        formula: FLOPS_FORMULA.into(),
    }
}

/// Reference accuracy, parameter count and FLOPs for an architecture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub test_accuracy: f64,
    pub parameters: u64,
    pub flops: String,
    pub note: String,
}

pub fn reference_row(arch: Architecture) -> ReferenceRow {
    let (acc, params, flops) = match arch {
        Architecture::Ebp2 => (0.918, 14_398, "143 K"),
        Architecture::Ffa3 => (0.908, 26_712, "204 K"),
        Architecture::Ffa2Optics => (0.944, 24_638, "150 K"),
    };
    let note = match arch {
        Architecture::Ffa2Optics => "reference measured with a physical fiber; this run uses a simulated one",
        _ => "reference value, shown for comparison only",
    };
    ReferenceRow {
        test_accuracy: acc,
        parameters: params,
        flops: flops.into(),
        note: note.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub train: Metrics,
    pub val: Metrics,
    pub test: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub arch: Architecture,
    pub config_hash: String,
    pub config: String,
    pub metrics: SplitMetrics,
    pub parameter_count: u64,
    pub flops: FlopEstimate,
    pub readout_taps: Vec<usize>,
    pub sweep: Option<SweepResult>,
    pub best_alpha: Option<f64>,
    /// Fixed-transform invocations made by this run (zero on a full cache hit).
    pub transform_calls: u64,
    pub optical_stages: usize,
    pub fiber_fingerprint: Option<String>,
    pub layer_losses: Vec<Vec<f64>>,
    pub reference: ReferenceRow,
    pub wall_clock_seconds: f64,
}

impl Report {
    pub fn test_accuracy(&self) -> f64 {
        self.metrics.test.accuracy
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// JSON with the wall clock zeroed, for run-to-run comparison.
    pub fn deterministic_json(&self) -> Result<String> {
        Self {
            wall_clock_seconds: 0.0,
            ..self.clone()
        }
        .to_json()
    }
}

pub fn confusion_csv(m: &Metrics) -> String {
    let mut s = String::from("true\\pred");
    for c in 0..CLASSES {
        s.push_str(&format!(",{c}"));
    }
    s.push('\n');
    for (t, row) in m.confusion.iter().enumerate() {
        s.push_str(&t.to_string());
        for v in row {
            s.push_str(&format!(",{v}"));
        }
        s.push('\n');
    }
    s
}

/// Writes `<stem>.json`, `<stem>.confusion.csv` and, when a sweep ran,
/// `<stem>.sweep.csv`. Returns the paths written.
pub fn emit_report(report: &Report, stem: &Path) -> Result<Vec<PathBuf>> {
    if let Some(dir) = stem.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let with = |ext: &str| {
        let mut s = stem.as_os_str().to_owned();
        s.push(ext);
        PathBuf::from(s)
    };
    let mut written = vec![with(".json"), with(".confusion.csv")];
    std::fs::write(&written[0], report.to_json()?)?;
    std::fs::write(&written[1], confusion_csv(&report.metrics.test))?;
    if let Some(sweep) = &report.sweep {
        let p = with(".sweep.csv");
        std::fs::write(&p, sweep.to_csv())?;
        written.push(p);
    }
    Ok(written)
}
