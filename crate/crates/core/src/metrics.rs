//! Quantities logged along a run.

use crate::error::{invalid, Result};
use crate::linalg::dist;
use crate::problems::SmoothLoss;
use crate::psga::StepBranch;
use crate::regularizers::L1;

/// One logged row of a convergence trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iter: u64,
    /// Optimizer time only; metric evaluation is excluded.
    pub elapsed_s: f64,
    /// `F(x) = f(x) + r(x)` at the current iterate.
    pub f_val: f64,
    /// Filled in once the reference value is known.
    pub rel_subopt: Option<f64>,
    /// `‖d - ∇f‖` at the point where the estimate `d` was formed.
    pub grad_err: f64,
    /// `dist(0, ∂F(x))` at the current iterate.
    pub stationarity: f64,
    pub eta: Option<f64>,
    pub branch: Option<StepBranch>,
}

pub fn objective(loss: &SmoothLoss, reg: &L1, x: &[f64]) -> Result<f64> {
    Ok(loss.loss_value(x)? + reg.value(x))
}

/// `|f_val - f_star| / f_star`
pub fn rel_subopt(f_val: f64, f_star: f64) -> Result<f64> {
    if !(f_star > 0.0) {
        return Err(invalid(format!(
            "reference value must be positive, got {f_star}"
        )));
    }
    Ok((f_val - f_star).abs() / f_star)
}

pub fn grad_estimation_error(d: &[f64], loss: &SmoothLoss, x: &[f64]) -> Result<f64> {
    dist(d, &loss.full_grad(x)?)
}

pub fn stationarity(loss: &SmoothLoss, reg: &L1, x: &[f64]) -> Result<f64> {
    reg.subdiff_dist(&loss.full_grad(x)?, x)
}
