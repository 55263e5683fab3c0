//! Batch experiment runner and verification driver.
//!
//! Every experiment is described by an [`ExperimentSpec`]; a spec is fully
//! reproducible (everything derives from its master seed) and serializes to
//! a JSON manifest that is embedded in every output file header.

pub mod experiments;
pub mod output;
pub mod stats;

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Scaling,
    Drift,
    Plateau,
    StrategyT,
    Modified,
    Verify,
    Bounds,
    Enumerate,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Scaling => "scaling",
            Mode::Drift => "drift",
            Mode::Plateau => "plateau",
            Mode::StrategyT => "strategy-t",
            Mode::Modified => "modified",
            Mode::Verify => "verify",
            Mode::Bounds => "bounds",
            Mode::Enumerate => "enumerate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    #[default]
    Greedy,
    T,
    Never,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RemovalKind {
    #[default]
    None,
    Barrier,
}

fn default_k() -> u32 {
    9
}

fn default_ell() -> u32 {
    5
}

/// A self-describing experiment: mode, density, horizon list, replica count,
/// master seed, strategy/removal selections, and barrier parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub mode: Mode,
    pub p: f64,
    pub horizons: Vec<u32>,
    pub replicas: u32,
    pub seed: u64,
    #[serde(default)]
    pub strategy: StrategyKind,
    #[serde(default)]
    pub removal: RemovalKind,
    #[serde(default = "default_k")]
    pub k: u32,
    #[serde(default = "default_ell")]
    pub ell: u32,
    /// Output directory; not part of the reproducibility contract and
    /// therefore excluded from embedded headers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn new(mode: Mode, p: f64, horizons: Vec<u32>, replicas: u32, seed: u64) -> Self {
        ExperimentSpec {
            mode,
            p,
            horizons,
            replicas,
            seed,
            strategy: StrategyKind::default(),
            removal: RemovalKind::default(),
            k: default_k(),
            ell: default_ell(),
            out_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) || self.p.is_nan() {
            return Err(Error::InvalidProbability(self.p));
        }
        if self.replicas < 1 {
            return Err(Error::Domain("replicas must be >= 1".into()));
        }
        if self.horizons.is_empty() {
            return Err(Error::Domain("at least one horizon is required".into()));
        }
        if self.horizons.iter().any(|&t| t == 0) {
            return Err(Error::Domain("horizons must be positive".into()));
        }
        if self.horizons.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("horizons must be strictly ascending".into()));
        }
        if self.k <= 8 || self.ell <= 4 {
            return Err(Error::BadBarrierParams { k: self.k, l: self.ell });
        }
        Ok(())
    }

    /// The spec as embedded in output headers: identical content across
    /// reruns regardless of where the outputs land.
    pub fn canonical(&self) -> ExperimentSpec {
        let mut c = self.clone();
        c.out_dir = None;
        c
    }

    /// Compact JSON for header lines.
    pub fn header_json(&self) -> String {
        serde_json::to_string(&self.canonical()).expect("spec serializes")
    }

    pub fn from_manifest_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Domain(format!("bad manifest: {e}")))
    }
}

/// One pass/fail (or informational) line of a report.
#[derive(Debug, Clone)]
pub struct Check {
    pub label: String,
    pub detail: String,
    pub pass: Option<bool>,
}

impl Check {
    pub fn pass(label: impl Into<String>, detail: impl Into<String>, ok: bool) -> Self {
        Check {
            label: label.into(),
            detail: detail.into(),
            pass: Some(ok),
        }
    }

    pub fn info(label: impl Into<String>, detail: impl Into<String>) -> Self {
        Check {
            label: label.into(),
            detail: detail.into(),
            pass: None,
        }
    }
}

/// A CSV table emitted by an experiment.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub header: String,
    pub rows: Vec<String>,
}

/// The outcome of one experiment run.
#[derive(Debug, Clone)]
pub struct Report {
    pub title: String,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
}

impl Report {
    pub fn new(title: impl Into<String>) -> Self {
        Report {
            title: title.into(),
            checks: Vec::new(),
            tables: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass != Some(false))
    }

    pub fn render(&self) -> String {
        let mut out = format!("== {} ==\n", self.title);
        for c in &self.checks {
            let tag = match c.pass {
                Some(true) => "PASS",
                Some(false) => "FAIL",
                None => "info",
            };
            out.push_str(&format!("[{tag}] {}: {}\n", c.label, c.detail));
        }
        out
    }
}

/// A per-horizon estimate with its Monte Carlo error.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EstimateRow {
    pub t: u32,
    pub mean: f64,
    pub std_error: f64,
    pub replicas: u32,
    pub cone_exact: bool,
}

impl EstimateRow {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.t, self.mean, self.std_error, self.replicas, self.cone_exact
        )
    }
}

/// Run the experiment a spec describes.
pub fn run(spec: &ExperimentSpec) -> Result<Report> {
    spec.validate()?;
    match spec.mode {
        Mode::Scaling => experiments::run_scaling(spec),
        Mode::Drift => experiments::run_drift(spec),
        Mode::Plateau => experiments::run_plateau(spec),
        Mode::StrategyT => experiments::run_strategy_t(spec),
        Mode::Modified => experiments::run_modified_mode(spec),
        Mode::Verify => experiments::run_verify(spec),
        Mode::Bounds => experiments::run_bounds(spec),
        Mode::Enumerate => experiments::run_enumerate(spec),
    }
}
