//! Comparison methods: PStorm, S-PStorm, ProxSVRG, SAGA and RDA.
//!
//! Each is a stepwise state machine driven through [`Optimizer`]. For the
//! mini-batch methods one step is one mini-batch update. ProxSVRG counts one
//! epoch per step and SAGA one pass of `steps_per_iter` single-sample updates.

use crate::error::{invalid, Error, Result};
use crate::linalg::{all_finite, axpy};
use crate::optimizer::{GradientEstimate, Optimizer};
use crate::problems::SmoothLoss;
use crate::regularizers::{soft_threshold, L1};
use crate::rng::{sample_batch, streams, RngStream};

fn check_x0(x0: &[f64], loss: &SmoothLoss) -> Result<()> {
    if x0.len() != loss.dim() {
        return Err(invalid(format!(
            "initial point has dimension {}, problem has {}",
            x0.len(),
            loss.dim()
        )));
    }
    Ok(())
}

fn check_step(step: f64, what: &str) -> Result<()> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(invalid(format!("{what} must be positive, got {step}")));
    }
    Ok(())
}

fn finite_or_fail(x: &[f64], iteration: u64, name: &str) -> Result<()> {
    if all_finite(x) {
        Ok(())
    } else {
        Err(Error::NumericFailure {
            iteration,
            message: format!("{name} iterate has a non-finite coordinate"),
        })
    }
}

/// `prox_{t r}(x - t d)`
fn prox_gradient(reg: &L1, x: &[f64], d: &[f64], t: f64) -> Result<Vec<f64>> {
    let trial: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi - t * di).collect();
    reg.prox(&trial, t)
}

/// STORM-style recursion `v + (1 - β)(d_prev - u)`.
pub fn storm_update(v: &[f64], u: &[f64], d_prev: &[f64], beta: f64) -> Vec<f64> {
    v.iter()
        .zip(u)
        .zip(d_prev)
        .map(|((v, u), d)| v + (1.0 - beta) * (d - u))
        .collect()
}

// ---------------------------------------------------------------------------
// S-PStorm

#[derive(Debug, Clone, PartialEq)]
pub struct SPstormParams {
    pub batch_size: usize,
    /// Fixed step; `None` means `0.1/L`.
    pub alpha: Option<f64>,
    /// Relaxation `ζ` in `x⁺ = x + ζβ_k(y - x)`.
    pub zeta: f64,
}

impl Default for SPstormParams {
    fn default() -> Self {
        Self {
            batch_size: 256,
            alpha: None,
            zeta: 1.0,
        }
    }
}

/// Stabilized proximal STORM with `β_k = 1/(k+1)` and a relaxed update.
#[derive(Debug, Clone)]
pub struct SPstorm {
    batch_size: usize,
    alpha: f64,
    zeta: f64,
    k: u64,
    x_prev: Vec<f64>,
    x: Vec<f64>,
    d: Vec<f64>,
    stream: RngStream,
}

impl SPstorm {
    pub fn new(
        params: SPstormParams,
        x0: Vec<f64>,
        loss: &SmoothLoss,
        rng: RngStream,
    ) -> Result<Self> {
        check_x0(&x0, loss)?;
        if params.batch_size == 0 {
            return Err(invalid("batch_size must be at least 1"));
        }
        let alpha = params.alpha.unwrap_or(0.1 / loss.lipschitz());
        check_step(alpha, "alpha")?;
        check_step(params.zeta, "zeta")?;
        Ok(Self {
            batch_size: params.batch_size,
            alpha,
            zeta: params.zeta,
            k: 1,
            x_prev: x0.clone(),
            d: vec![0.0; x0.len()],
            x: x0,
            stream: rng.substream(streams::BATCH),
        })
    }

    pub fn beta(k: u64) -> f64 {
        1.0 / (k as f64 + 1.0)
    }

    pub fn gradient_estimate(&self) -> &[f64] {
        &self.d
    }
}

impl Optimizer for SPstorm {
    fn name(&self) -> &'static str {
        "SPStorm"
    }

    fn step(&mut self, loss: &SmoothLoss, reg: &L1) -> Result<()> {
        let k = self.k;
        let batch = sample_batch(&mut self.stream.at(k), loss.n_samples(), self.batch_size)?;
        let v = loss.batch_mean_grad(&self.x, &batch.ids)?;
        let beta = Self::beta(k);
        let d = if k == 1 {
            v
        } else {
            let u = loss.batch_mean_grad(&self.x_prev, &batch.ids)?;
            storm_update(&v, &u, &self.d, beta)
        };
        let y = prox_gradient(reg, &self.x, &d, self.alpha)?;
        let w = self.zeta * beta;
        let x_next: Vec<f64> = self
            .x
            .iter()
            .zip(&y)
            .map(|(x, y)| x + w * (y - x))
            .collect();
        finite_or_fail(&x_next, k, "SPStorm")?;
        self.x_prev = std::mem::replace(&mut self.x, x_next);
        self.d = d;
        self.k += 1;
        Ok(())
    }

    fn iterations(&self) -> u64 {
        self.k - 1
    }

    fn iterate(&self) -> &[f64] {
        &self.x
    }

    fn estimate(&self) -> Option<GradientEstimate<'_>> {
        (self.k > 1).then(|| GradientEstimate {
            point: &self.x_prev,
            value: &self.d,
        })
    }

    fn step_size(&self) -> f64 {
        self.alpha
    }
}

// ---------------------------------------------------------------------------
// PStorm

#[derive(Debug, Clone, PartialEq)]
pub struct PStormParams {
    pub batch_size: usize,
}

impl Default for PStormParams {
    fn default() -> Self {
        Self { batch_size: 256 }
    }
}

/// Proximal STORM with the diminishing schedule
/// `η_k = (4^{1/3}/(8L)) / (k+4)^{1/3}` and
/// `β_k = (1 + 24η_k²L² - η_{k+1}/η_k) / (1 + 4η_k²L²)`.
#[derive(Debug, Clone)]
pub struct PStorm {
    batch_size: usize,
    lipschitz: f64,
    k: u64,
    x_prev: Vec<f64>,
    x: Vec<f64>,
    d: Vec<f64>,
    eta: f64,
    stream: RngStream,
}

impl PStorm {
    pub fn new(
        params: PStormParams,
        x0: Vec<f64>,
        loss: &SmoothLoss,
        rng: RngStream,
    ) -> Result<Self> {
        check_x0(&x0, loss)?;
        if params.batch_size == 0 {
            return Err(invalid("batch_size must be at least 1"));
        }
        let lipschitz = loss.lipschitz();
        Ok(Self {
            batch_size: params.batch_size,
            lipschitz,
            k: 1,
            x_prev: x0.clone(),
            d: vec![0.0; x0.len()],
            x: x0,
            eta: Self::eta(1, lipschitz),
            stream: rng.substream(streams::BATCH),
        })
    }

    pub fn eta(k: u64, lipschitz: f64) -> f64 {
        (4f64.cbrt() / (8.0 * lipschitz)) / (k as f64 + 4.0).cbrt()
    }

    pub fn beta(k: u64, lipschitz: f64) -> f64 {
        let eta = Self::eta(k, lipschitz);
        let next = Self::eta(k + 1, lipschitz);
        let a2 = eta * eta * lipschitz * lipschitz;
        (1.0 + 24.0 * a2 - next / eta) / (1.0 + 4.0 * a2)
    }
}

impl Optimizer for PStorm {
    fn name(&self) -> &'static str {
        "PStorm"
    }

    fn step(&mut self, loss: &SmoothLoss, reg: &L1) -> Result<()> {
        let k = self.k;
        let batch = sample_batch(&mut self.stream.at(k), loss.n_samples(), self.batch_size)?;
        let v = loss.batch_mean_grad(&self.x, &batch.ids)?;
        let d = if k == 1 {
            v
        } else {
            let u = loss.batch_mean_grad(&self.x_prev, &batch.ids)?;
            storm_update(&v, &u, &self.d, Self::beta(k - 1, self.lipschitz))
        };
        let eta = Self::eta(k, self.lipschitz);
        let x_next = prox_gradient(reg, &self.x, &d, eta)?;
        finite_or_fail(&x_next, k, "PStorm")?;
        self.x_prev = std::mem::replace(&mut self.x, x_next);
        self.d = d;
        self.eta = eta;
        self.k += 1;
        Ok(())
    }

    fn iterations(&self) -> u64 {
        self.k - 1
    }

    fn iterate(&self) -> &[f64] {
        &self.x
    }

    fn estimate(&self) -> Option<GradientEstimate<'_>> {
        (self.k > 1).then(|| GradientEstimate {
            point: &self.x_prev,
            value: &self.d,
        })
    }

    fn step_size(&self) -> f64 {
        self.eta
    }
}

// ---------------------------------------------------------------------------
// ProxSVRG

#[derive(Debug, Clone, PartialEq)]
#[derive(Default)]
pub struct ProxSvrgParams {
    /// Fixed step; `None` means `0.1/L`.
    pub alpha: Option<f64>,
    /// Inner steps per epoch; `None` means `2N`.
    pub epoch_length: Option<usize>,
}


/// Proximal SVRG with uniform sampling and last-iterate snapshots.
#[derive(Debug, Clone)]
pub struct ProxSvrg {
    alpha: f64,
    epoch_length: usize,
    x: Vec<f64>,
    x_tilde: Vec<f64>,
    v_tilde: Vec<f64>,
    /// Inner steps taken so far, over all epochs.
    inner: u64,
    epochs: u64,
    last_point: Vec<f64>,
    last_v: Vec<f64>,
    stream: RngStream,
}

impl ProxSvrg {
    pub fn new(
        params: ProxSvrgParams,
        x0: Vec<f64>,
        loss: &SmoothLoss,
        rng: RngStream,
    ) -> Result<Self> {
        check_x0(&x0, loss)?;
        let alpha = params.alpha.unwrap_or(0.1 / loss.lipschitz());
        check_step(alpha, "alpha")?;
        let epoch_length = params.epoch_length.unwrap_or(2 * loss.n_samples());
        if epoch_length == 0 {
            return Err(invalid("epoch_length must be at least 1"));
        }
        let dim = x0.len();
        Ok(Self {
            alpha,
            epoch_length,
            x_tilde: x0.clone(),
            x: x0,
            v_tilde: vec![0.0; dim],
            inner: 0,
            epochs: 0,
            last_point: vec![0.0; dim],
            last_v: vec![0.0; dim],
            stream: rng.substream(streams::SINGLE),
        })
    }

    pub fn snapshot(&self) -> (&[f64], &[f64]) {
        (&self.x_tilde, &self.v_tilde)
    }

    /// Variance-reduced gradient `∇Λ(x;ξ_i) - ∇Λ(x̃;ξ_i) + ṽ` at the current iterate.
    pub fn corrected_gradient(&self, loss: &SmoothLoss, i: usize) -> Result<Vec<f64>> {
        let delta = loss.sample_grad_coef(&self.x, i)? - loss.sample_grad_coef(&self.x_tilde, i)?;
        let mut v = self.v_tilde.clone();
        axpy(delta, loss.dataset().row(i), &mut v)?;
        Ok(v)
    }

    /// One inner update; takes a new snapshot first at epoch boundaries.
    pub fn inner_step(&mut self, loss: &SmoothLoss, reg: &L1) -> Result<()> {
        if self.inner.is_multiple_of(self.epoch_length as u64) {
            self.x_tilde.copy_from_slice(&self.x);
            loss.full_grad_into(&self.x_tilde, &mut self.v_tilde)?;
        }
        let batch = sample_batch(&mut self.stream.at(self.inner), loss.n_samples(), 1)?;
        let v = self.corrected_gradient(loss, batch.ids[0])?;
        let x_next = prox_gradient(reg, &self.x, &v, self.alpha)?;
        self.inner += 1;
        finite_or_fail(&x_next, self.epochs + 1, "ProxSVRG")?;
        self.last_point = std::mem::replace(&mut self.x, x_next);
        self.last_v = v;
        Ok(())
    }
}

impl Optimizer for ProxSvrg {
    fn name(&self) -> &'static str {
        "ProxSVRG"
    }

    fn step(&mut self, loss: &SmoothLoss, reg: &L1) -> Result<()> {
        for _ in 0..self.epoch_length {
            self.inner_step(loss, reg)?;
        }
        self.epochs += 1;
        Ok(())
    }

    fn iterations(&self) -> u64 {
        self.epochs
    }

    fn iterate(&self) -> &[f64] {
        &self.x
    }

    fn estimate(&self) -> Option<GradientEstimate<'_>> {
        (self.inner > 0).then(|| GradientEstimate {
            point: &self.last_point,
            value: &self.last_v,
        })
    }

    fn step_size(&self) -> f64 {
        self.alpha
    }
}

// ---------------------------------------------------------------------------
// SAGA

pub const DEFAULT_SAGA_MEMORY_BUDGET: u64 = 4 << 30;

#[derive(Debug, Clone, PartialEq)]
pub struct SagaParams {
    /// Fixed step; `None` means `0.1/L`.
    pub alpha: Option<f64>,
    /// Single-sample updates per step; `None` means `N`.
    pub steps_per_iter: Option<usize>,
    /// Refuse to start when a dense `N × n` table of f64 would exceed this many bytes.
    pub memory_budget: u64,
}

impl Default for SagaParams {
    fn default() -> Self {
        Self {
            alpha: None,
            steps_per_iter: None,
            memory_budget: DEFAULT_SAGA_MEMORY_BUDGET,
        }
    }
}

/// Bytes a dense gradient table would need.
pub fn dense_table_bytes(n_samples: usize, n_features: usize) -> u128 {
    n_samples as u128 * n_features as u128 * std::mem::size_of::<f64>() as u128
}

/// Proximal SAGA.
///
/// Each stored gradient is a multiple of its data row, so the table keeps one
/// coefficient per sample and reconstructs rows on the data support.
#[derive(Debug, Clone)]
pub struct Saga {
    alpha: f64,
    steps_per_iter: usize,
    x: Vec<f64>,
    coefs: Vec<f64>,
    table_mean: Vec<f64>,
    since_rebuild: usize,
    inner: u64,
    passes: u64,
    last_point: Vec<f64>,
    last_v: Vec<f64>,
    stream: RngStream,
}

impl Saga {
    pub fn new(
        params: SagaParams,
        x0: Vec<f64>,
        loss: &SmoothLoss,
        rng: RngStream,
    ) -> Result<Self> {
        check_x0(&x0, loss)?;
        let required = dense_table_bytes(loss.n_samples(), loss.dim());
        if required > u128::from(params.memory_budget) {
            return Err(Error::MemoryBudget {
                required,
                budget: params.memory_budget,
            });
        }
        let alpha = params.alpha.unwrap_or(0.1 / loss.lipschitz());
        check_step(alpha, "alpha")?;
        let steps_per_iter = params.steps_per_iter.unwrap_or(loss.n_samples());
        if steps_per_iter == 0 {
            return Err(invalid("steps_per_iter must be at least 1"));
        }
        let coefs = (0..loss.n_samples())
            .map(|j| loss.sample_grad_coef(&x0, j))
            .collect::<Result<Vec<_>>>()?;
        let dim = x0.len();
        let mut saga = Self {
            alpha,
            steps_per_iter,
            x: x0,
            coefs,
            table_mean: vec![0.0; dim],
            since_rebuild: 0,
            inner: 0,
            passes: 0,
            last_point: vec![0.0; dim],
            last_v: vec![0.0; dim],
            stream: rng.substream(streams::SINGLE),
        };
        saga.rebuild_mean(loss)?;
        Ok(saga)
    }

    fn rebuild_mean(&mut self, loss: &SmoothLoss) -> Result<()> {
        self.table_mean.fill(0.0);
        let w = 1.0 / loss.n_samples() as f64;
        for (row, &c) in loss.dataset().rows().iter().zip(&self.coefs) {
            axpy(w * c, row, &mut self.table_mean)?;
        }
        self.since_rebuild = 0;
        Ok(())
    }

    pub fn table_mean(&self) -> &[f64] {
        &self.table_mean
    }

    /// Stored gradient of sample `j`.
    pub fn table_row(&self, loss: &SmoothLoss, j: usize) -> crate::linalg::SparseVec {
        loss.dataset().row(j).scaled(self.coefs[j])
    }

    /// `∇Λ(x;ξ_i) - table[i] + mean(table)` at the current iterate.
    pub fn corrected_gradient(&self, loss: &SmoothLoss, i: usize) -> Result<Vec<f64>> {
        let delta = loss.sample_grad_coef(&self.x, i)? - self.coefs[i];
        let mut v = self.table_mean.clone();
        axpy(delta, loss.dataset().row(i), &mut v)?;
        Ok(v)
    }

    pub fn inner_step(&mut self, loss: &SmoothLoss, reg: &L1) -> Result<()> {
        let n = loss.n_samples();
        let i = sample_batch(&mut self.stream.at(self.inner), n, 1)?.ids[0];
        let fresh = loss.sample_grad_coef(&self.x, i)?;
        let delta = fresh - self.coefs[i];
        let mut v = self.table_mean.clone();
        axpy(delta, loss.dataset().row(i), &mut v)?;

        axpy(
            delta / n as f64,
            loss.dataset().row(i),
            &mut self.table_mean,
        )?;
        self.coefs[i] = fresh;
        self.since_rebuild += 1;
        if self.since_rebuild >= n {
            self.rebuild_mean(loss)?;
        }

        let x_next = prox_gradient(reg, &self.x, &v, self.alpha)?;
        self.inner += 1;
        finite_or_fail(&x_next, self.passes + 1, "SAGA")?;
        self.last_point = std::mem::replace(&mut self.x, x_next);
        self.last_v = v;
        Ok(())
    }
}

impl Optimizer for Saga {
    fn name(&self) -> &'static str {
        "SAGA"
    }

    fn step(&mut self, loss: &SmoothLoss, reg: &L1) -> Result<()> {
        for _ in 0..self.steps_per_iter {
            self.inner_step(loss, reg)?;
        }
        self.passes += 1;
        Ok(())
    }

    fn iterations(&self) -> u64 {
        self.passes
    }

    fn iterate(&self) -> &[f64] {
        &self.x
    }

    fn estimate(&self) -> Option<GradientEstimate<'_>> {
        (self.inner > 0).then(|| GradientEstimate {
            point: &self.last_point,
            value: &self.last_v,
        })
    }

    fn step_size(&self) -> f64 {
        self.alpha
    }
}

// ---------------------------------------------------------------------------
// RDA

#[derive(Debug, Clone, PartialEq)]
pub struct RdaParams {
    pub batch_size: usize,
    pub gamma: f64,
}

impl Default for RdaParams {
    fn default() -> Self {
        Self {
            batch_size: 256,
            gamma: 1e-2,
        }
    }
}

/// Closed-form ℓ1 dual averaging step:
/// `argmin_x ⟨ḡ, x⟩ + λ‖x‖₁ + (γ/√k)·½‖x‖²`.
pub fn rda_solution(g_bar: &[f64], lambda: f64, k: u64, gamma: f64) -> Vec<f64> {
    let scale = (k as f64).sqrt() / gamma;
    g_bar
        .iter()
        .map(|&g| -scale * soft_threshold(g, lambda))
        .collect()
}

/// Regularized dual averaging with `η_k = √k/γ`.
#[derive(Debug, Clone)]
pub struct Rda {
    batch_size: usize,
    gamma: f64,
    k: u64,
    x: Vec<f64>,
    g_bar: Vec<f64>,
    last_point: Vec<f64>,
    last_g: Vec<f64>,
    stream: RngStream,
}

impl Rda {
    pub fn new(params: RdaParams, x0: Vec<f64>, loss: &SmoothLoss, rng: RngStream) -> Result<Self> {
        check_x0(&x0, loss)?;
        if params.batch_size == 0 {
            return Err(invalid("batch_size must be at least 1"));
        }
        check_step(params.gamma, "gamma")?;
        let dim = x0.len();
        Ok(Self {
            batch_size: params.batch_size,
            gamma: params.gamma,
            k: 1,
            x: x0,
            g_bar: vec![0.0; dim],
            last_point: vec![0.0; dim],
            last_g: vec![0.0; dim],
            stream: rng.substream(streams::BATCH),
        })
    }

    pub fn average_gradient(&self) -> &[f64] {
        &self.g_bar
    }
}

impl Optimizer for Rda {
    fn name(&self) -> &'static str {
        "RDA"
    }

    fn step(&mut self, loss: &SmoothLoss, reg: &L1) -> Result<()> {
        let k = self.k;
        let batch = sample_batch(&mut self.stream.at(k), loss.n_samples(), self.batch_size)?;
        let g = loss.batch_mean_grad(&self.x, &batch.ids)?;
        let w = 1.0 / k as f64;
        for (avg, gi) in self.g_bar.iter_mut().zip(&g) {
            *avg += w * (gi - *avg);
        }
        let x_next = rda_solution(&self.g_bar, reg.lambda(), k, self.gamma);
        finite_or_fail(&x_next, k, "RDA")?;
        self.last_point = std::mem::replace(&mut self.x, x_next);
        self.last_g = g;
        self.k += 1;
        Ok(())
    }

    fn iterations(&self) -> u64 {
        self.k - 1
    }

    fn iterate(&self) -> &[f64] {
        &self.x
    }

    fn estimate(&self) -> Option<GradientEstimate<'_>> {
        (self.k > 1).then(|| GradientEstimate {
            point: &self.last_point,
            value: &self.last_g,
        })
    }

    fn step_size(&self) -> f64 {
        ((self.k - 1).max(1) as f64).sqrt() / self.gamma
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::parse_libsvm_str;
    use crate::problems::LossKind;
    use std::sync::Arc;

    fn six_rows(kind: LossKind) -> SmoothLoss {
        let text = "1 1:1 2:0.5\n-1 1:0.2 2:-1 3:0.4\n1 2:2\n-1 1:-1.5 3:1\n1 3:-0.7\n-1 1:0.3 2:0.3 3:0.3\n";
        SmoothLoss::new(kind, Arc::new(parse_libsvm_str(text).unwrap())).unwrap()
    }

    #[test]
    fn storm_recursion_example() {
        let d = storm_update(&[0.5, 0.0], &[0.8, 0.0], &[1.0, 0.0], 1.0 / 3.0);
        assert!((d[0] - 0.633_333_333_333_333_4).abs() < 1e-15);
    }

    #[test]
    fn full_relaxation_lands_on_trial_point() {
        // ζβ_1 = 1 with ζ = 2 at k = 1.
        let loss = six_rows(LossKind::Logistic);
        let reg = L1::new(0.01).unwrap();
        let x0 = vec![0.1, -0.2, 0.3];
        let params = SPstormParams {
            zeta: 2.0,
            ..Default::default()
        };
        let mut opt = SPstorm::new(params, x0.clone(), &loss, RngStream::new(5)).unwrap();
        opt.step(&loss, &reg).unwrap();
        let d = opt.gradient_estimate().to_vec();
        let y = prox_gradient(&reg, &x0, &d, 0.1 / loss.lipschitz()).unwrap();
        assert_eq!(opt.iterate(), &y[..]);
    }

    #[test]
    fn pstorm_schedule() {
        let eta1 = PStorm::eta(1, 1.0);
        let want = (0.8f64).cbrt() / 8.0;
        assert!((eta1 - want).abs() < 1e-15);
        assert!((eta1 - 0.116_04).abs() < 1e-5);
        for k in 1..1000 {
            assert!(PStorm::eta(k + 1, 2.0) < PStorm::eta(k, 2.0));
        }
    }

    #[test]
    fn pstorm_beta_stays_in_unit_interval() {
        for &l in &[0.1, 1.0, 10.0] {
            for k in 1..=1_000_000u64 {
                let b = PStorm::beta(k, l);
                assert!(b > 0.0 && b < 1.0, "beta({k}, {l}) = {b}");
            }
        }
    }

    #[test]
    fn svrg_correction_cancels_at_snapshot() {
        let loss = six_rows(LossKind::Logistic);
        let reg = L1::new(0.0).unwrap();
        let mut opt = ProxSvrg::new(
            ProxSvrgParams::default(),
            vec![0.2, 0.1, -0.3],
            &loss,
            RngStream::new(1),
        )
        .unwrap();
        opt.inner_step(&loss, &reg).unwrap();
        // Put the iterate back on the snapshot.
        opt.x = opt.x_tilde.clone();
        for i in 0..6 {
            assert_eq!(opt.corrected_gradient(&loss, i).unwrap(), opt.v_tilde);
        }
    }

    #[test]
    fn svrg_single_sample_is_full_gradient() {
        let data = parse_libsvm_str("1 1:1 2:-3\n").unwrap();
        let loss = SmoothLoss::new(LossKind::LeastSquares, Arc::new(data)).unwrap();
        let reg = L1::new(0.0).unwrap();
        let mut opt = ProxSvrg::new(
            ProxSvrgParams::default(),
            vec![0.5, 0.5],
            &loss,
            RngStream::new(2),
        )
        .unwrap();
        for _ in 0..5 {
            opt.inner_step(&loss, &reg).unwrap();
            let est = opt.estimate().unwrap();
            let g = loss.full_grad(est.point).unwrap();
            for (a, b) in g.iter().zip(est.value) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    fn enumerate_mean(vs: impl Iterator<Item = Vec<f64>>, n: usize) -> Vec<f64> {
        let mut acc: Option<Vec<f64>> = None;
        for v in vs {
            match acc.as_mut() {
                None => acc = Some(v),
                Some(a) => a.iter_mut().zip(&v).for_each(|(a, b)| *a += b),
            }
        }
        acc.unwrap().into_iter().map(|a| a / n as f64).collect()
    }

    #[test]
    fn svrg_and_saga_estimates_are_unbiased() {
        for kind in [LossKind::Logistic, LossKind::LeastSquares] {
            let loss = six_rows(kind);
            let reg = L1::new(0.05).unwrap();
            let mut svrg = ProxSvrg::new(
                ProxSvrgParams {
                    alpha: Some(0.05),
                    epoch_length: Some(50),
                },
                vec![0.2, 0.1, -0.3],
                &loss,
                RngStream::new(3),
            )
            .unwrap();
            let mut saga = Saga::new(
                SagaParams {
                    alpha: Some(0.05),
                    ..Default::default()
                },
                vec![0.2, 0.1, -0.3],
                &loss,
                RngStream::new(3),
            )
            .unwrap();
            for _ in 0..7 {
                svrg.inner_step(&loss, &reg).unwrap();
                saga.inner_step(&loss, &reg).unwrap();
            }
            let g = loss.full_grad(svrg.iterate()).unwrap();
            let mean = enumerate_mean(
                (0..6).map(|i| svrg.corrected_gradient(&loss, i).unwrap()),
                6,
            );
            for (a, b) in g.iter().zip(&mean) {
                assert!((a - b).abs() < 1e-14);
            }
            let g = loss.full_grad(saga.iterate()).unwrap();
            let mean = enumerate_mean(
                (0..6).map(|i| saga.corrected_gradient(&loss, i).unwrap()),
                6,
            );
            for (a, b) in g.iter().zip(&mean) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn saga_fresh_table_gives_table_mean() {
        let loss = six_rows(LossKind::Logistic);
        let saga = Saga::new(
            SagaParams::default(),
            vec![0.1, 0.0, -0.1],
            &loss,
            RngStream::new(0),
        )
        .unwrap();
        for i in 0..6 {
            let v = saga.corrected_gradient(&loss, i).unwrap();
            for (a, b) in v.iter().zip(saga.table_mean()) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn saga_running_mean_matches_recomputation() {
        let loss = six_rows(LossKind::LeastSquares);
        let reg = L1::new(0.01).unwrap();
        let mut saga = Saga::new(
            SagaParams {
                alpha: Some(0.02),
                ..Default::default()
            },
            vec![0.0; 3],
            &loss,
            RngStream::new(8),
        )
        .unwrap();
        for _ in 0..1000 {
            saga.inner_step(&loss, &reg).unwrap();
        }
        let mut direct = vec![0.0; 3];
        for j in 0..6 {
            axpy(1.0 / 6.0, &saga.table_row(&loss, j), &mut direct).unwrap();
        }
        for (a, b) in direct.iter().zip(saga.table_mean()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn saga_refuses_over_budget() {
        let loss = six_rows(LossKind::Logistic);
        let params = SagaParams {
            memory_budget: 100,
            ..Default::default()
        };
        match Saga::new(params, vec![0.0; 3], &loss, RngStream::new(0)) {
            Err(Error::MemoryBudget { required, budget }) => {
                assert_eq!(required, 6 * 3 * 8);
                assert_eq!(budget, 100);
            }
            other => panic!("expected memory refusal, got {other:?}"),
        }
    }

    #[test]
    fn rda_closed_form_examples() {
        assert_eq!(
            rda_solution(&[0.1, -0.2, 0.0], 0.5, 9, 0.01),
            vec![0.0, 0.0, 0.0]
        );
        assert_eq!(rda_solution(&[0.1, -0.2], 0.0, 1, 1.0), vec![-0.1, 0.2]);
    }

    #[test]
    fn rda_matches_grid_minimization() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let g: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let lambda = rng.random_range(0.0..0.5);
            let k = rng.random_range(1..20u64);
            let gamma = 1.0;
            let x = rda_solution(&g, lambda, k, gamma);
            let beta = gamma / (k as f64).sqrt();
            for i in 0..3 {
                // Minimize g u + λ|u| + β u²/2 over u ∈ [-5, 5] with step 1e-5.
                let mut best = (f64::INFINITY, 0.0);
                for s in -500_000..=500_000 {
                    let u = s as f64 * 1e-5;
                    let v = g[i] * u + lambda * u.abs() + 0.5 * beta * u * u;
                    if v < best.0 {
                        best = (v, u);
                    }
                }
                assert!(
                    (x[i] - best.1).abs() < 1e-4,
                    "coord {i}: {} vs grid {}",
                    x[i],
                    best.1
                );
            }
        }
    }

    #[test]
    fn baselines_are_deterministic() {
        let loss = six_rows(LossKind::Logistic);
        let reg = L1::new(0.01).unwrap();
        let build = || -> Vec<Box<dyn Optimizer>> {
            let x0 = vec![0.0; 3];
            let r = RngStream::new(99);
            vec![
                Box::new(
                    SPstorm::new(
                        SPstormParams {
                            batch_size: 3,
                            ..Default::default()
                        },
                        x0.clone(),
                        &loss,
                        r,
                    )
                    .unwrap(),
                ),
                Box::new(
                    PStorm::new(PStormParams { batch_size: 3 }, x0.clone(), &loss, r).unwrap(),
                ),
                Box::new(ProxSvrg::new(ProxSvrgParams::default(), x0.clone(), &loss, r).unwrap()),
                Box::new(Saga::new(SagaParams::default(), x0.clone(), &loss, r).unwrap()),
                Box::new(
                    Rda::new(
                        RdaParams {
                            batch_size: 3,
                            ..Default::default()
                        },
                        x0,
                        &loss,
                        r,
                    )
                    .unwrap(),
                ),
            ]
        };
        let mut a = build();
        let mut b = build();
        for (oa, ob) in a.iter_mut().zip(b.iter_mut()) {
            for _ in 0..20 {
                oa.step(&loss, &reg).unwrap();
                ob.step(&loss, &reg).unwrap();
            }
            assert_eq!(oa.iterate(), ob.iterate(), "{}", oa.name());
        }
    }
}
