//! Quick invariant checks on small synthetic problems, run by `selftest`.

use std::sync::Arc;

use psga::metrics::{grad_estimation_error, objective};
use psga::psga::{EstimateKind, Tau};
use psga::synthetic::{sparse_logistic, sparse_regression};
use psga::{LossKind, Optimizer, Psga, PsgaParams, RngStream, SmoothLoss, L1};

use crate::config::{Algorithm, Problem, RunConfig};
use crate::report::Outcome;
use crate::runner::execute;

pub struct Check {
    pub name: &'static str,
    pub result: Result<(), String>,
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn logistic_loss(seed: u64) -> Result<SmoothLoss, String> {
    let data = sparse_logistic(500, 20, 0.3, seed).map_err(|e| e.to_string())?;
    SmoothLoss::new(LossKind::Logistic, Arc::new(data)).map_err(|e| e.to_string())
}

fn step_size_floor() -> Result<(), String> {
    let loss = logistic_loss(1)?;
    let reg = L1::new(1e-5).map_err(|e| e.to_string())?;
    let l = loss.lipschitz();
    for seed in 0..5 {
        let mut opt = Psga::new(
            PsgaParams::default(),
            vec![0.0; loss.dim()],
            &loss,
            RngStream::new(seed),
        )
        .map_err(|e| e.to_string())?;
        for _ in 0..300 {
            opt.step(&loss, &reg).map_err(|e| e.to_string())?;
            let st = opt.state();
            ensure(st.eta >= 0.5 / l - 1e-12, || {
                format!("seed {seed}: eta {} below 1/(2L)", st.eta)
            })?;
            if let Some(Tau::Finite(t)) = st.last_tau {
                ensure(t >= 1.0 / l - 1e-9, || {
                    format!("seed {seed}: tau {t} below 1/L")
                })?;
            }
        }
    }
    Ok(())
}

fn refresh_is_exact() -> Result<(), String> {
    let loss = logistic_loss(2)?;
    let reg = L1::new(1e-5).map_err(|e| e.to_string())?;
    let mut opt = Psga::new(
        PsgaParams::default(),
        vec![0.0; loss.dim()],
        &loss,
        RngStream::new(3),
    )
    .map_err(|e| e.to_string())?;
    let mut seen = 0;
    for _ in 0..200 {
        opt.step(&loss, &reg).map_err(|e| e.to_string())?;
        let st = opt.state();
        if st.last_estimate == Some(EstimateKind::Refresh) {
            seen += 1;
            let err = grad_estimation_error(&st.d, &loss, &st.x_prev).map_err(|e| e.to_string())?;
            ensure(err == 0.0, || {
                format!("grad_err {err} at a refresh iteration")
            })?;
        }
    }
    ensure(seen > 0, || "no refresh in 200 iterations".into())
}

fn all_methods_descend() -> Result<(), String> {
    let (data, _) = sparse_regression(200, 30, 4, 0.05, 7).map_err(|e| e.to_string())?;
    let data = Arc::new(data);
    let loss = SmoothLoss::new(LossKind::LeastSquares, data.clone()).map_err(|e| e.to_string())?;
    let reg = L1::new(1e-3).map_err(|e| e.to_string())?;
    let f0 = objective(&loss, &reg, &vec![0.0; loss.dim()]).map_err(|e| e.to_string())?;
    for alg in Algorithm::ALL {
        let mut run = RunConfig::new("selftest", Problem::Lasso, alg);
        run.lambda = 1e-3;
        run.max_iters = 50;
        run.record_time = false;
        let res = execute(&run, data.clone()).map_err(|e| e.to_string())?;
        ensure(res.outcome == Outcome::Completed, || {
            format!("{alg}: {:?}", res.message)
        })?;
        let last = res
            .trace
            .last()
            .ok_or_else(|| format!("{alg}: empty trace"))?;
        ensure(last.f_val < f0, || {
            format!("{alg}: F went from {f0} to {}", last.f_val)
        })?;
        let again = execute(&run, data.clone()).map_err(|e| e.to_string())?;
        ensure(again.trace == res.trace, || {
            format!("{alg}: repeated run differs")
        })?;
    }
    Ok(())
}

fn prox_matches_grid() -> Result<(), String> {
    let reg = L1::new(0.3).map_err(|e| e.to_string())?;
    for (v, t) in [(2.0, 1.0), (-0.1, 0.5), (0.7, 2.0), (-3.0, 0.25)] {
        let p = reg.prox(&[v], t).map_err(|e| e.to_string())?[0];
        let obj = |u: f64| 0.5 * (u - v) * (u - v) + t * 0.3 * u.abs();
        let grid = (0..=80_000)
            .map(|i| -4.0 + i as f64 * 1e-4)
            .min_by(|a, b| obj(*a).total_cmp(&obj(*b)))
            .unwrap_or(0.0);
        ensure((p - grid).abs() <= 1e-4, || {
            format!("prox({v}, {t}) = {p}, grid {grid}")
        })?;
    }
    Ok(())
}

fn gradients_match_differences() -> Result<(), String> {
    let loss = logistic_loss(4)?;
    let x: Vec<f64> = (0..loss.dim()).map(|i| 0.1 * (i as f64 - 10.0)).collect();
    let g = loss.full_grad(&x).map_err(|e| e.to_string())?;
    let h = 1e-6;
    for i in [0, 7, 19] {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        let fd = (loss.loss_value(&xp).map_err(|e| e.to_string())?
            - loss.loss_value(&xm).map_err(|e| e.to_string())?)
            / (2.0 * h);
        let rel = (fd - g[i]).abs() / g[i].abs().max(1e-8);
        ensure(rel <= 1e-5, || {
            format!("coordinate {i}: analytic {} vs {fd}", g[i])
        })?;
    }
    Ok(())
}

pub fn run_all() -> Vec<Check> {
    vec![
        Check {
            name: "step size stays above 1/(2L)",
            result: step_size_floor(),
        },
        Check {
            name: "refresh gives exact gradient",
            result: refresh_is_exact(),
        },
        Check {
            name: "every method descends deterministically",
            result: all_methods_descend(),
        },
        Check {
            name: "prox matches grid minimizer",
            result: prox_matches_grid(),
        },
        Check {
            name: "gradients match finite differences",
            result: gradients_match_differences(),
        },
    ]
}
