//! Proximal stochastic gradient with an adaptive step size and a momentum
//! variance-reduced gradient estimator.
//!
//! Iteration `k` (starting at 1, with `x_0 = x_1`):
//!
//! 1. draw a mini-batch and evaluate its mean gradient at `x_k` (`μ_k`) and at
//!    `x_{k-1}` (`ν_k`);
//! 2. form the estimate `d_k`: `μ_1` at `k = 1`; afterwards the exact gradient
//!    with probability `1/m`, else `μ_k + (1 - θ_k)(d_{k-1} - ν_k)` with
//!    `θ_k = 1/(k+1)`;
//! 3. compute the curvature ratio `τ_k = ⟨μ_k - ν_k, x_k - x_{k-1}⟩ / ‖μ_k - ν_k‖²`
//!    and adapt the step size (see [`update_step_size`]);
//! 4. take the proximal trial point `y_k = prox_{η_k r}(x_k - η_k d_k)` and move
//!    `x_{k+1} = x_k + (k/(k+1))(y_k - x_k)`.
//!
//! With `η_0 >= 1/L` the step size never drops below `1/(2L)`; [`Psga`] checks
//! this after every step.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::linalg::{all_finite, dense_dot, same_len};
use crate::optimizer::{GradientEstimate, Optimizer};
use crate::problems::SmoothLoss;
use crate::regularizers::{Surrogate, L1};
use crate::rng::{coin, sample_batch, streams, RngStream};

/// Which step-size rule fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepBranch {
    /// `τ >= η_prev`: `η = (1 + 1/τ) η_prev`
    Expand,
    /// `η_prev/2 < τ < η_prev`: `η = τ`
    Adopt,
    /// `τ <= η_prev/2`: `η = η_prev/√2`
    Shrink,
    /// `τ` undefined (no gradient change on the batch): `η = η_prev`
    Hold,
}

impl StepBranch {
    pub fn as_str(self) -> &'static str {
        match self {
            StepBranch::Expand => "expand",
            StepBranch::Adopt => "adopt",
            StepBranch::Shrink => "shrink",
            StepBranch::Hold => "hold",
        }
    }
}

impl fmt::Display for StepBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StepBranch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "expand" => Ok(StepBranch::Expand),
            "adopt" => Ok(StepBranch::Adopt),
            "shrink" => Ok(StepBranch::Shrink),
            "hold" => Ok(StepBranch::Hold),
            other => Err(invalid(format!("unknown step branch {other:?}"))),
        }
    }
}

/// Curvature ratio of a mini-batch secant pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tau {
    Finite(f64),
    /// `‖μ - ν‖²` at or below the guard threshold.
    Degenerate,
}

impl Tau {
    pub fn value(self) -> Option<f64> {
        match self {
            Tau::Finite(t) => Some(t),
            Tau::Degenerate => None,
        }
    }
}

pub fn compute_tau(mu: &[f64], nu: &[f64], x: &[f64], x_prev: &[f64], eps: f64) -> Result<Tau> {
    same_len(mu, nu)?;
    same_len(x, x_prev)?;
    same_len(mu, x)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..mu.len() {
        let dg = mu[i] - nu[i];
        num += dg * (x[i] - x_prev[i]);
        den += dg * dg;
    }
    if den > eps {
        Ok(Tau::Finite(num / den))
    } else {
        Ok(Tau::Degenerate)
    }
}

pub fn update_step_size(eta_prev: f64, tau: Tau) -> (f64, StepBranch) {
    match tau {
        Tau::Degenerate => (eta_prev, StepBranch::Hold),
        Tau::Finite(t) if t >= eta_prev => ((1.0 + 1.0 / t) * eta_prev, StepBranch::Expand),
        Tau::Finite(t) if t > eta_prev / 2.0 => (t, StepBranch::Adopt),
        Tau::Finite(_) => (eta_prev / std::f64::consts::SQRT_2, StepBranch::Shrink),
    }
}

/// Upper bound `(k+1) / (4(√m+1) δ_k L)` with `δ_k = k`.
pub fn theory_step_cap(k: u64, m: u64, lipschitz: f64) -> f64 {
    let k = k as f64;
    (k + 1.0) / (4.0 * ((m as f64).sqrt() + 1.0) * k * lipschitz)
}

/// Classical Barzilai–Borwein steps `‖s‖²/sᵀy` and `sᵀy/‖y‖²`; `None` where
/// the denominator vanishes.
pub fn bb_reference_steps(s: &[f64], y: &[f64]) -> Result<(Option<f64>, Option<f64>)> {
    let sy = dense_dot(s, y)?;
    let ss = dense_dot(s, s)?;
    let yy = dense_dot(y, y)?;
    let bb1 = (sy != 0.0).then(|| ss / sy);
    let bb2 = (yy != 0.0).then(|| sy / yy);
    Ok((bb1, bb2))
}

/// `μ + (1 - θ)(d_prev - ν)`
pub fn momentum_estimate(mu: &[f64], nu: &[f64], d_prev: &[f64], theta: f64) -> Result<Vec<f64>> {
    same_len(mu, nu)?;
    same_len(mu, d_prev)?;
    Ok(mu
        .iter()
        .zip(nu)
        .zip(d_prev)
        .map(|((m, n), d)| m + (1.0 - theta) * (d - n))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsgaParams {
    pub batch_size: usize,
    /// Full-gradient refresh happens with probability `1/m`.
    pub m: u64,
    /// Initial step size; `None` means `1/L`.
    pub eta0: Option<f64>,
    /// Cap every step at [`theory_step_cap`].
    pub clamp_to_theory: bool,
    pub eps_curvature: f64,
}

impl Default for PsgaParams {
    fn default() -> Self {
        Self {
            batch_size: 256,
            m: 10,
            eta0: None,
            clamp_to_theory: false,
            eps_curvature: 1e-12,
        }
    }
}

impl PsgaParams {
    fn validate(&self, lipschitz: f64) -> Result<f64> {
        if self.batch_size == 0 {
            return Err(invalid("batch_size must be at least 1"));
        }
        if self.m < 2 {
            return Err(invalid(format!("m must be at least 2, got {}", self.m)));
        }
        if !(self.eps_curvature >= 0.0) {
            return Err(invalid("eps_curvature must be >= 0"));
        }
        let eta0 = self.eta0.unwrap_or(1.0 / lipschitz);
        if !(eta0.is_finite() && eta0 * lipschitz >= 1.0 - 1e-12) {
            return Err(invalid(format!(
                "eta0 = {eta0} is below 1/L = {}",
                1.0 / lipschitz
            )));
        }
        Ok(eta0)
    }
}

/// How the gradient estimate of the last step was formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateKind {
    /// `k = 1`: plain mini-batch mean.
    Initial,
    /// Exact full gradient.
    Refresh,
    Momentum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsgaState {
    /// Index of the next iteration to run; starts at 1.
    pub k: u64,
    pub x_prev: Vec<f64>,
    pub x: Vec<f64>,
    /// Estimate formed at `x_prev` during the last step (at `x` before any step).
    pub d: Vec<f64>,
    /// Step size of the last step (`η_0` before any step).
    pub eta: f64,
    pub last_branch: Option<StepBranch>,
    pub last_tau: Option<Tau>,
    pub last_estimate: Option<EstimateKind>,
}

impl PsgaState {
    pub fn new(x0: Vec<f64>, eta0: f64) -> Self {
        Self {
            k: 1,
            x_prev: x0.clone(),
            d: vec![0.0; x0.len()],
            x: x0,
            eta: eta0,
            last_branch: None,
            last_tau: None,
            last_estimate: None,
        }
    }

    pub fn theta(&self) -> f64 {
        1.0 / (self.k as f64 + 1.0)
    }
}

/// Gradient estimate for iteration `state.k`, given the batch means `mu` at
/// `state.x` and `nu` at `state.x_prev`.
pub fn estimate_gradient(
    state: &PsgaState,
    mu: &[f64],
    nu: &[f64],
    loss: &SmoothLoss,
    refresh: bool,
) -> Result<(Vec<f64>, EstimateKind)> {
    if state.k <= 1 {
        return Ok((mu.to_vec(), EstimateKind::Initial));
    }
    if refresh {
        return Ok((loss.full_grad(&state.x)?, EstimateKind::Refresh));
    }
    let d = momentum_estimate(mu, nu, &state.d, state.theta())?;
    Ok((d, EstimateKind::Momentum))
}

/// Whether iteration `k` replaces the estimate with the exact gradient.
pub fn refresh_draw(stream: &RngStream, k: u64, m: u64) -> bool {
    k > 1 && coin(&mut stream.at(k), 1.0 / m as f64)
}

#[derive(Debug, Clone)]
pub struct Psga {
    params: PsgaParams,
    state: PsgaState,
    batch_stream: RngStream,
    refresh_stream: RngStream,
    lipschitz: f64,
    check_floor: bool,
    mu: Vec<f64>,
    nu: Vec<f64>,
}

impl Psga {
    pub fn new(
        params: PsgaParams,
        x0: Vec<f64>,
        loss: &SmoothLoss,
        rng: RngStream,
    ) -> Result<Self> {
        if x0.len() != loss.dim() {
            return Err(invalid(format!(
                "initial point has dimension {}, problem has {}",
                x0.len(),
                loss.dim()
            )));
        }
        let lipschitz = loss.lipschitz();
        let eta0 = params.validate(lipschitz)?;
        let dim = x0.len();
        Ok(Self {
            check_floor: !params.clamp_to_theory,
            params,
            state: PsgaState::new(x0, eta0),
            batch_stream: rng.substream(streams::BATCH),
            refresh_stream: rng.substream(streams::REFRESH),
            lipschitz,
            mu: vec![0.0; dim],
            nu: vec![0.0; dim],
        })
    }

    pub fn state(&self) -> &PsgaState {
        &self.state
    }

    pub fn params(&self) -> &PsgaParams {
        &self.params
    }

    /// Runs one iteration with an arbitrary surrogate of the regularizer.
    pub fn step_with<S: Surrogate>(&mut self, loss: &SmoothLoss, reg: &S) -> Result<()> {
        let k = self.state.k;
        let batch = sample_batch(
            &mut self.batch_stream.at(k),
            loss.n_samples(),
            self.params.batch_size,
        )?;
        loss.batch_mean_grad_into(&self.state.x, &batch.ids, &mut self.mu)?;
        if k == 1 {
            self.nu.copy_from_slice(&self.mu);
        } else {
            loss.batch_mean_grad_into(&self.state.x_prev, &batch.ids, &mut self.nu)?;
        }

        let refresh = refresh_draw(&self.refresh_stream, k, self.params.m);
        let (d, kind) = estimate_gradient(&self.state, &self.mu, &self.nu, loss, refresh)?;

        let tau = compute_tau(
            &self.mu,
            &self.nu,
            &self.state.x,
            &self.state.x_prev,
            self.params.eps_curvature,
        )?;
        let (mut eta, branch) = update_step_size(self.state.eta, tau);
        if self.params.clamp_to_theory {
            eta = eta.min(theory_step_cap(k, self.params.m, self.lipschitz));
        }
        if !(eta.is_finite() && eta > 0.0) || !all_finite(&d) {
            return Err(Error::NumericFailure {
                iteration: k,
                message: format!("step size {eta} or gradient estimate is not finite"),
            });
        }
        let floor = 0.5 / self.lipschitz;
        if self.check_floor && eta < floor - 1e-12 {
            return Err(Error::Invariant {
                iteration: k,
                message: format!("step size {eta} fell below 1/(2L) = {floor}"),
            });
        }

        let x = &self.state.x;
        let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi - eta * di).collect();
        let mut y = vec![0.0; x.len()];
        reg.surrogate_prox_into(&trial, eta, x, &mut y)?;
        let w = k as f64 / (k as f64 + 1.0);
        let x_next: Vec<f64> = x
            .iter()
            .zip(&y)
            .map(|(xi, yi)| xi + w * (yi - xi))
            .collect();
        if !all_finite(&x_next) {
            return Err(Error::NumericFailure {
                iteration: k,
                message: "iterate has a non-finite coordinate".into(),
            });
        }

        let x_k = std::mem::replace(&mut self.state.x, x_next);
        self.state.x_prev = x_k;
        self.state.d = d;
        self.state.eta = eta;
        self.state.last_branch = Some(branch);
        self.state.last_tau = Some(tau);
        self.state.last_estimate = Some(kind);
        self.state.k = k + 1;
        Ok(())
    }
}

impl Optimizer for Psga {
    fn name(&self) -> &'static str {
        "PSGA"
    }

    fn step(&mut self, loss: &SmoothLoss, reg: &L1) -> Result<()> {
        self.step_with(loss, reg)
    }

    fn iterations(&self) -> u64 {
        self.state.k - 1
    }

    fn iterate(&self) -> &[f64] {
        &self.state.x
    }

    fn estimate(&self) -> Option<GradientEstimate<'_>> {
        (self.state.k > 1).then(|| GradientEstimate {
            point: &self.state.x_prev,
            value: &self.state.d,
        })
    }

    fn step_size(&self) -> f64 {
        self.state.eta
    }

    fn branch(&self) -> Option<StepBranch> {
        self.state.last_branch
    }
}
