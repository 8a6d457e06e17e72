//! Executes suites: loads data once, runs each configuration to its stopping
//! rule, writes traces and then the summary.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use psga::baselines::{
    PStorm, PStormParams, ProxSvrg, ProxSvrgParams, Rda, RdaParams, SPstorm, SPstormParams, Saga,
    SagaParams, DEFAULT_SAGA_MEMORY_BUDGET,
};
use psga::metrics::{grad_estimation_error, objective, stationarity, TraceRecord};
use psga::{
    load_libsvm, Dataset, LossKind, Optimizer, Psga, PsgaParams, RngStream, SmoothLoss, L1,
};
use rayon::prelude::*;

use crate::config::{Algorithm, Problem, RunConfig, Suite};
use crate::error::{BenchError, Result};
use crate::report::{summarize, write_trace, Manifest, ManifestEntry, Outcome, SummaryRow};

type DataKey = (PathBuf, Option<usize>);

/// Datasets shared read-only between runs.
#[derive(Debug, Default, Clone)]
pub struct DataCache {
    sets: BTreeMap<DataKey, Arc<Dataset>>,
}

impl DataCache {
    /// Loads every dataset the suite names; any failure is a config error.
    pub fn load(suite: &Suite) -> Result<Self> {
        let mut cache = DataCache::default();
        for run in &suite.runs {
            let key = (run.dataset_path.clone(), run.n_features);
            if cache.sets.contains_key(&key) {
                continue;
            }
            let path = &run.dataset_path;
            let mut data = load_libsvm(path).map_err(|e| {
                BenchError::Config(format!("cannot load dataset {}: {e}", path.display()))
            })?;
            if let Some(n) = run.n_features {
                data = data
                    .with_n_features(n)
                    .map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
            }
            cache.sets.insert(key, Arc::new(data));
        }
        Ok(cache)
    }

    pub fn insert(&mut self, path: impl Into<PathBuf>, n_features: Option<usize>, data: Dataset) {
        self.sets.insert((path.into(), n_features), Arc::new(data));
    }

    pub fn get(&self, run: &RunConfig) -> Result<Arc<Dataset>> {
        self.sets
            .get(&(run.dataset_path.clone(), run.n_features))
            .cloned()
            .ok_or_else(|| {
                BenchError::Config(format!("dataset {} not loaded", run.dataset_path.display()))
            })
    }
}

pub fn build_loss(run: &RunConfig, data: Arc<Dataset>) -> Result<SmoothLoss> {
    let kind = match run.problem {
        Problem::Logistic => {
            if let Some(y) = data.labels().iter().find(|y| y.abs() != 1.0) {
                return Err(BenchError::Config(format!(
                    "{}: logistic regression needs labels in {{-1, +1}} or {{0, 1}}, found {y}",
                    run.dataset_path.display()
                )));
            }
            LossKind::Logistic
        }
        Problem::Lasso => LossKind::LeastSquares,
    };
    let config = |e: psga::Error| BenchError::Config(format!("run {:?}: {e}", run.run_name()));
    let loss = SmoothLoss::new(kind, data).map_err(config)?;
    match run.lipschitz {
        Some(l) => loss.with_lipschitz(l).map_err(config),
        None => Ok(loss),
    }
}

pub fn build_optimizer(run: &RunConfig, loss: &SmoothLoss) -> psga::Result<Box<dyn Optimizer>> {
    let x0 = vec![0.0; loss.dim()];
    let rng = RngStream::new(run.seed);
    Ok(match run.algorithm {
        Algorithm::Psga => {
            let d = PsgaParams::default();
            let params = PsgaParams {
                batch_size: run.batch_size.unwrap_or(d.batch_size),
                m: run.m.unwrap_or(d.m),
                eta0: run.eta0,
                clamp_to_theory: run.clamp_to_theory.unwrap_or(d.clamp_to_theory),
                ..d
            };
            Box::new(Psga::new(params, x0, loss, rng)?)
        }
        Algorithm::Pstorm => {
            let d = PStormParams::default();
            let params = PStormParams {
                batch_size: run.batch_size.unwrap_or(d.batch_size),
            };
            Box::new(PStorm::new(params, x0, loss, rng)?)
        }
        Algorithm::Spstorm => {
            let d = SPstormParams::default();
            let params = SPstormParams {
                batch_size: run.batch_size.unwrap_or(d.batch_size),
                alpha: run.alpha.or(d.alpha),
                zeta: run.zeta.unwrap_or(d.zeta),
            };
            Box::new(SPstorm::new(params, x0, loss, rng)?)
        }
        Algorithm::Proxsvrg => {
            let params = ProxSvrgParams {
                alpha: run.alpha,
                epoch_length: run.epoch_length,
            };
            Box::new(ProxSvrg::new(params, x0, loss, rng)?)
        }
        Algorithm::Saga => {
            let params = SagaParams {
                alpha: run.alpha,
                steps_per_iter: run.steps_per_iter,
                memory_budget: run.memory_budget.unwrap_or(DEFAULT_SAGA_MEMORY_BUDGET),
            };
            Box::new(Saga::new(params, x0, loss, rng)?)
        }
        Algorithm::Rda => {
            let d = RdaParams::default();
            let params = RdaParams {
                batch_size: run.batch_size.unwrap_or(d.batch_size),
                gamma: run.gamma.unwrap_or(d.gamma),
            };
            Box::new(Rda::new(params, x0, loss, rng)?)
        }
    })
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub config: RunConfig,
    pub outcome: Outcome,
    pub message: Option<String>,
    pub trace: Vec<TraceRecord>,
}

fn record(
    opt: &dyn Optimizer,
    loss: &SmoothLoss,
    reg: &L1,
    iter: u64,
    elapsed: f64,
) -> psga::Result<TraceRecord> {
    let x = opt.iterate();
    let grad_err = match opt.estimate() {
        Some(est) => grad_estimation_error(est.value, loss, est.point)?,
        None => 0.0,
    };
    Ok(TraceRecord {
        iter,
        elapsed_s: elapsed,
        f_val: objective(loss, reg, x)?,
        rel_subopt: None,
        grad_err,
        stationarity: stationarity(loss, reg, x)?,
        eta: Some(opt.step_size()),
        branch: opt.branch(),
    })
}

/// Runs one configuration until `max_iters` or `max_seconds` of optimizer time.
///
/// Errors are configuration problems; failures during the run end up in the
/// outcome.
pub fn execute(run: &RunConfig, data: Arc<Dataset>) -> Result<RunResult> {
    let loss = build_loss(run, data)?;
    let reg = L1::new(run.lambda).map_err(|e| BenchError::Config(e.to_string()))?;
    let finish = |outcome, message: Option<String>, trace| RunResult {
        config: run.clone(),
        outcome,
        message,
        trace,
    };

    let mut opt = match build_optimizer(run, &loss) {
        Ok(opt) => opt,
        Err(e @ psga::Error::MemoryBudget { .. }) => {
            return Ok(finish(
                Outcome::MemoryRefused,
                Some(e.to_string()),
                Vec::new(),
            ))
        }
        Err(e) => return Err(BenchError::Config(format!("run {:?}: {e}", run.run_name()))),
    };

    let mut trace = Vec::new();
    let mut elapsed = Duration::ZERO;
    for k in 1..=run.max_iters {
        let start = Instant::now();
        let stepped = opt.step(&loss, &reg);
        elapsed += start.elapsed();
        if let Err(e) = stepped {
            return Ok(finish(Outcome::NumericFailure, Some(e.to_string()), trace));
        }
        let out_of_time = elapsed.as_secs_f64() >= run.max_seconds;
        if k % run.log_every == 0 || k == run.max_iters || out_of_time {
            let secs = if run.record_time {
                elapsed.as_secs_f64()
            } else {
                0.0
            };
            match record(opt.as_ref(), &loss, &reg, k, secs) {
                Ok(r) if r.f_val.is_finite() => trace.push(r),
                Ok(r) => {
                    let msg = format!("objective is {} at iteration {k}", r.f_val);
                    return Ok(finish(Outcome::NumericFailure, Some(msg), trace));
                }
                Err(e) => return Ok(finish(Outcome::NumericFailure, Some(e.to_string()), trace)),
            }
        }
        if out_of_time {
            break;
        }
    }
    Ok(finish(Outcome::Completed, None, trace))
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    /// Per output directory, its summary rows.
    pub summaries: BTreeMap<PathBuf, Vec<SummaryRow>>,
    pub results: Vec<RunResult>,
}

impl SuiteReport {
    pub fn any_numeric_failure(&self) -> bool {
        self.results
            .iter()
            .any(|r| r.outcome == Outcome::NumericFailure)
    }

    pub fn rows(&self) -> impl Iterator<Item = &SummaryRow> {
        self.summaries.values().flatten()
    }
}

fn output_dir(run: &RunConfig) -> PathBuf {
    run.output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// Runs the whole suite on up to `jobs` threads.
///
/// Every dataset is loaded and every configuration checked before the first
/// run starts.
pub fn run_suite(suite: &Suite, jobs: usize, progress: bool) -> Result<SuiteReport> {
    suite.validate()?;
    let cache = DataCache::load(suite)?;
    run_suite_with(suite, &cache, jobs, progress)
}

pub fn run_suite_with(
    suite: &Suite,
    cache: &DataCache,
    jobs: usize,
    progress: bool,
) -> Result<SuiteReport> {
    suite.validate()?;
    for run in &suite.runs {
        let loss = build_loss(run, cache.get(run)?)?;
        L1::new(run.lambda).map_err(|e| BenchError::Config(e.to_string()))?;
        match build_optimizer(run, &loss) {
            Ok(_) | Err(psga::Error::MemoryBudget { .. }) => {}
            Err(e) => return Err(BenchError::Config(format!("run {:?}: {e}", run.run_name()))),
        }
    }
    let dirs: BTreeSet<PathBuf> = suite.runs.iter().map(output_dir).collect();
    for dir in &dirs {
        fs::create_dir_all(dir).map_err(|e| {
            BenchError::Config(format!(
                "cannot create output directory {}: {e}",
                dir.display()
            ))
        })?;
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| BenchError::Config(format!("cannot start worker pool: {e}")))?;
    let total = suite.runs.len();
    let done = AtomicUsize::new(0);
    let results: Vec<Result<RunResult>> = pool.install(|| {
        suite
            .runs
            .par_iter()
            .map(|run| {
                let result = execute(run, cache.get(run)?)?;
                let path = output_dir(run).join(format!("{}.csv", run.run_name()));
                write_trace(&path, &result.trace)?;
                if progress {
                    let status = match &result.message {
                        Some(m) => format!("{} ({m})", result.outcome.as_str()),
                        None => result.outcome.as_str().to_string(),
                    };
                    let n = done.fetch_add(1, Ordering::Relaxed) + 1;
                    eprintln!("[{n}/{total}] {}: {status}", run.run_name());
                }
                Ok(result)
            })
            .collect()
    });
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;

    let mut summaries = BTreeMap::new();
    for dir in dirs {
        let runs = results
            .iter()
            .filter(|r| output_dir(&r.config) == dir)
            .map(|r| ManifestEntry {
                name: r.config.run_name(),
                trace: format!("{}.csv", r.config.run_name()),
                dataset: r.config.dataset_label(),
                dataset_path: r.config.dataset_path.clone(),
                problem: r.config.problem,
                lambda: r.config.lambda,
                algorithm: r.config.algorithm,
                seed: r.config.seed,
                max_iters: r.config.max_iters,
                outcome: r.outcome,
                message: r.message.clone(),
            })
            .collect();
        Manifest {
            best_tol: suite.best_tol,
            runs,
        }
        .merge_into(&dir)?;
        let rows = summarize(&dir)?;
        summaries.insert(dir, rows);
    }
    Ok(SuiteReport { summaries, results })
}
