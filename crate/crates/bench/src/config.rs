//! TOML suite files.
//!
//! ```toml
//! output_dir = "out"          # optional, default "out"
//!
//! [defaults]                  # optional, merged into every run
//! dataset_path = "data/a9a"
//! lambda = 1e-5
//!
//! [[run]]
//! algorithm = "psga"
//!
//! [[run]]
//! algorithm = "saga"
//! memory_budget = 1073741824
//! ```
//!
//! Relative paths resolve against the directory holding the suite file.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    Logistic,
    Lasso,
}

impl Problem {
    pub fn as_str(self) -> &'static str {
        match self {
            Problem::Logistic => "logistic",
            Problem::Lasso => "lasso",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Psga,
    Pstorm,
    Spstorm,
    Proxsvrg,
    Saga,
    Rda,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Psga,
        Algorithm::Pstorm,
        Algorithm::Spstorm,
        Algorithm::Proxsvrg,
        Algorithm::Saga,
        Algorithm::Rda,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Psga => "psga",
            Algorithm::Pstorm => "pstorm",
            Algorithm::Spstorm => "spstorm",
            Algorithm::Proxsvrg => "proxsvrg",
            Algorithm::Saga => "saga",
            Algorithm::Rda => "rda",
        }
    }

    /// Name used in summaries.
    pub fn display_name(self) -> &'static str {
        match self {
            Algorithm::Psga => "PSGA",
            Algorithm::Pstorm => "PStorm",
            Algorithm::Spstorm => "SPStorm",
            Algorithm::Proxsvrg => "ProxSVRG",
            Algorithm::Saga => "SAGA",
            Algorithm::Rda => "RDA",
        }
    }

    /// Per-method keys this algorithm accepts.
    pub fn accepted_keys(self) -> &'static [&'static str] {
        match self {
            Algorithm::Psga => &["batch_size", "m", "eta0", "clamp_to_theory"],
            Algorithm::Pstorm => &["batch_size"],
            Algorithm::Spstorm => &["batch_size", "alpha", "zeta"],
            Algorithm::Proxsvrg => &["alpha", "epoch_length"],
            Algorithm::Saga => &["alpha", "steps_per_iter", "memory_budget"],
            Algorithm::Rda => &["batch_size", "gamma"],
        }
    }
}

/// Every per-method key, across all algorithms.
pub const METHOD_KEYS: [&str; 10] = [
    "batch_size",
    "m",
    "eta0",
    "clamp_to_theory",
    "alpha",
    "zeta",
    "gamma",
    "epoch_length",
    "steps_per_iter",
    "memory_budget",
];

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| BenchError::Config(format!("unknown algorithm {s:?}")))
    }
}

pub const DEFAULT_MAX_ITERS: u64 = 1000;
pub const DEFAULT_MAX_SECONDS: f64 = 600.0;
pub const DEFAULT_LAMBDA: f64 = psga::regularizers::DEFAULT_LAMBDA;
/// Iterations-to-best counts the first logged iterate within this of `f_best`.
pub const DEFAULT_BEST_TOL: f64 = 5e-5;

/// One optimizer run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// File stem of the trace; derived from the other fields when absent.
    #[serde(default)]
    pub name: Option<String>,
    pub dataset_path: PathBuf,
    pub problem: Problem,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    pub algorithm: Algorithm,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_iters")]
    pub max_iters: u64,
    #[serde(default = "default_max_seconds")]
    pub max_seconds: f64,
    #[serde(default = "default_log_every")]
    pub log_every: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Write `elapsed_s = 0` so traces are reproducible byte for byte.
    #[serde(default = "default_true")]
    pub record_time: bool,
    /// Pad the feature dimension (LIBSVM files only record used indices).
    #[serde(default)]
    pub n_features: Option<usize>,
    /// Override the computed smoothness constant.
    #[serde(default)]
    pub lipschitz: Option<f64>,

    #[serde(default)]
    pub batch_size: Option<usize>,
    #[serde(default)]
    pub m: Option<u64>,
    #[serde(default)]
    pub eta0: Option<f64>,
    #[serde(default)]
    pub clamp_to_theory: Option<bool>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub zeta: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub epoch_length: Option<usize>,
    #[serde(default)]
    pub steps_per_iter: Option<usize>,
    #[serde(default)]
    pub memory_budget: Option<u64>,
}

fn default_lambda() -> f64 {
    DEFAULT_LAMBDA
}
fn default_max_iters() -> u64 {
    DEFAULT_MAX_ITERS
}
fn default_max_seconds() -> f64 {
    DEFAULT_MAX_SECONDS
}
fn default_log_every() -> u64 {
    1
}
fn default_true() -> bool {
    true
}

impl RunConfig {
    pub fn new(dataset_path: impl Into<PathBuf>, problem: Problem, algorithm: Algorithm) -> Self {
        Self {
            name: None,
            dataset_path: dataset_path.into(),
            problem,
            lambda: DEFAULT_LAMBDA,
            algorithm,
            seed: 0,
            max_iters: DEFAULT_MAX_ITERS,
            max_seconds: DEFAULT_MAX_SECONDS,
            log_every: 1,
            output_dir: None,
            record_time: true,
            n_features: None,
            lipschitz: None,
            batch_size: None,
            m: None,
            eta0: None,
            clamp_to_theory: None,
            alpha: None,
            zeta: None,
            gamma: None,
            epoch_length: None,
            steps_per_iter: None,
            memory_budget: None,
        }
    }

    fn set_keys(&self) -> Vec<&'static str> {
        let mut keys = Vec::new();
        let mut mark = |set: bool, key| {
            if set {
                keys.push(key)
            }
        };
        mark(self.batch_size.is_some(), "batch_size");
        mark(self.m.is_some(), "m");
        mark(self.eta0.is_some(), "eta0");
        mark(self.clamp_to_theory.is_some(), "clamp_to_theory");
        mark(self.alpha.is_some(), "alpha");
        mark(self.zeta.is_some(), "zeta");
        mark(self.gamma.is_some(), "gamma");
        mark(self.epoch_length.is_some(), "epoch_length");
        mark(self.steps_per_iter.is_some(), "steps_per_iter");
        mark(self.memory_budget.is_some(), "memory_budget");
        keys
    }

    /// Trace file stem.
    pub fn run_name(&self) -> String {
        if let Some(name) = &self.name {
            return name.clone();
        }
        format!(
            "{}_{}_{}_seed{}",
            self.dataset_label(),
            self.problem.as_str(),
            self.algorithm.as_str(),
            self.seed
        )
    }

    /// Dataset file name without `.gz`.
    pub fn dataset_label(&self) -> String {
        let file = self
            .dataset_path
            .file_name()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_else(|| self.dataset_path.display().to_string());
        file.strip_suffix(".gz").map(str::to_owned).unwrap_or(file)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| {
            Err(BenchError::Config(format!(
                "run {:?}: {msg}",
                self.run_name()
            )))
        };
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        if self.log_every == 0 {
            return bad("log_every must be at least 1".into());
        }
        if !(self.max_seconds > 0.0) {
            return bad(format!(
                "max_seconds must be positive, got {}",
                self.max_seconds
            ));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!(
                "lambda must be finite and >= 0, got {}",
                self.lambda
            ));
        }
        let name = self.run_name();
        if name.is_empty() || name.contains(['/', '\\']) {
            return bad("name must be a plain file stem".into());
        }
        let accepted = self.algorithm.accepted_keys();
        for key in self.set_keys() {
            if !accepted.contains(&key) {
                return bad(format!("{key} does not apply to {}", self.algorithm));
            }
        }
        Ok(())
    }
}

/// Options that override every run of a suite.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub max_iters: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Suite {
    pub runs: Vec<RunConfig>,
    pub best_tol: f64,
}

impl Suite {
    pub fn new(runs: Vec<RunConfig>) -> Self {
        Self {
            runs,
            best_tol: DEFAULT_BEST_TOL,
        }
    }

    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| BenchError::Config(e.to_string()))?;
        let output_dir = match table.remove("output_dir") {
            None => PathBuf::from("out"),
            Some(toml::Value::String(s)) => PathBuf::from(s),
            Some(_) => return Err(BenchError::Config("output_dir must be a string".into())),
        };
        let best_tol = match table.remove("best_tol") {
            None => DEFAULT_BEST_TOL,
            Some(v) => v
                .as_float()
                .filter(|t| *t >= 0.0)
                .ok_or_else(|| BenchError::Config("best_tol must be a float >= 0".into()))?,
        };
        let defaults = match table.remove("defaults") {
            None => toml::Table::new(),
            Some(toml::Value::Table(t)) => t,
            Some(_) => return Err(BenchError::Config("[defaults] must be a table".into())),
        };
        let runs = match table.remove("run") {
            Some(toml::Value::Array(runs)) => runs,
            Some(_) => return Err(BenchError::Config("use [[run]] tables to list runs".into())),
            None => return Err(BenchError::Config("no [[run]] tables".into())),
        };
        if let Some(key) = table.keys().next() {
            return Err(BenchError::Config(format!("unknown top-level key {key:?}")));
        }

        let mut configs = Vec::with_capacity(runs.len());
        for (i, run) in runs.into_iter().enumerate() {
            let toml::Value::Table(run) = run else {
                return Err(BenchError::Config(format!("run #{} is not a table", i + 1)));
            };
            let mut merged = defaults.clone();
            // Method keys from [defaults] only reach the methods that use them.
            if let Some(alg) = run
                .get("algorithm")
                .or_else(|| defaults.get("algorithm"))
                .and_then(|v| v.as_str())
                .and_then(|s| s.parse::<Algorithm>().ok())
            {
                merged.retain(|k, _| {
                    !METHOD_KEYS.contains(&k) || alg.accepted_keys().contains(&k)
                });
            }
            merged.extend(run);
            let mut cfg: RunConfig = toml::Value::Table(merged)
                .try_into()
                .map_err(|e: toml::de::Error| BenchError::Config(format!("run #{}: {e}", i + 1)))?;
            cfg.dataset_path = base_dir.join(&cfg.dataset_path);
            cfg.output_dir = Some(base_dir.join(cfg.output_dir.as_ref().unwrap_or(&output_dir)));
            configs.push(cfg);
        }
        let suite = Suite {
            runs: configs,
            best_tol,
        };
        suite.validate()?;
        Ok(suite)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, base)
    }

    pub fn apply(&mut self, overrides: &Overrides) {
        for run in &mut self.runs {
            if let Some(seed) = overrides.seed {
                run.seed = seed;
            }
            if let Some(k) = overrides.max_iters {
                run.max_iters = k;
            }
            if let Some(dir) = &overrides.output_dir {
                run.output_dir = Some(dir.clone());
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs.is_empty() {
            return Err(BenchError::Config("suite has no runs".into()));
        }
        let mut seen = BTreeSet::new();
        for run in &self.runs {
            run.validate()?;
            let key = (run.output_dir.clone(), run.run_name());
            if !seen.insert(key) {
                return Err(BenchError::Config(format!(
                    "two runs write {:?}; give one a distinct name",
                    run.run_name()
                )));
            }
        }
        Ok(())
    }
}
