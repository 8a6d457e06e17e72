//! Smooth finite-sum losses `f(x) = (1/N) Σ_j Λ(x; ξ_j)` for linear models.
//!
//! Every per-sample gradient is a multiple of the data row, so the hot
//! paths work with the scalar coefficient and the row's sparse support.

use std::sync::Arc;

use crate::data::Dataset;
use crate::error::{invalid, Result};
use crate::linalg::{axpy, dot, SparseVec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// `log(1 + exp(-y_j d_j·x))`
    Logistic,
    /// `½ (y_j - a_j·x)²`
    LeastSquares,
}

#[derive(Debug, Clone)]
pub struct SmoothLoss {
    kind: LossKind,
    data: Arc<Dataset>,
    lipschitz: f64,
}

/// Maximum per-sample smoothness constant: `max‖d_j‖²/4` for logistic,
/// `max‖a_j‖²` for least squares.
pub fn lipschitz_bound(kind: LossKind, data: &Dataset) -> f64 {
    let max_sq = data
        .rows()
        .iter()
        .map(SparseVec::squared_norm)
        .fold(0.0, f64::max);
    match kind {
        LossKind::Logistic => max_sq / 4.0,
        LossKind::LeastSquares => max_sq,
    }
}

/// `log(1 + e^{-t})` without overflow.
pub fn log1p_exp_neg(t: f64) -> f64 {
    (-t).max(0.0) + (-t.abs()).exp().ln_1p()
}

/// Logistic sigmoid `1 / (1 + e^{-z})`.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl SmoothLoss {
    pub fn new(kind: LossKind, data: Arc<Dataset>) -> Result<Self> {
        let lipschitz = lipschitz_bound(kind, &data);
        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return Err(invalid("every data row is zero; the loss has no curvature"));
        }
        Ok(Self {
            kind,
            data,
            lipschitz,
        })
    }

    /// Replaces the computed smoothness constant.
    pub fn with_lipschitz(mut self, lipschitz: f64) -> Result<Self> {
        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return Err(invalid(format!(
                "Lipschitz constant must be positive, got {lipschitz}"
            )));
        }
        self.lipschitz = lipschitz;
        Ok(self)
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn dataset(&self) -> &Dataset {
        &self.data
    }

    pub fn n_samples(&self) -> usize {
        self.data.n_samples()
    }

    pub fn dim(&self) -> usize {
        self.data.n_features()
    }

    fn check_x(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(invalid(format!(
                "iterate has dimension {}, dataset has {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    fn check_j(&self, j: usize) -> Result<()> {
        if j >= self.n_samples() {
            return Err(invalid(format!(
                "sample {j} out of range for {} samples",
                self.n_samples()
            )));
        }
        Ok(())
    }

    fn value_from_margin(&self, t: f64, y: f64) -> f64 {
        match self.kind {
            LossKind::Logistic => log1p_exp_neg(y * t),
            LossKind::LeastSquares => 0.5 * (y - t) * (y - t),
        }
    }

    fn coef_from_margin(&self, t: f64, y: f64) -> f64 {
        match self.kind {
            LossKind::Logistic => -y * sigmoid(-y * t),
            LossKind::LeastSquares => -(y - t),
        }
    }

    pub fn sample_loss(&self, x: &[f64], j: usize) -> Result<f64> {
        self.check_x(x)?;
        self.check_j(j)?;
        let t = dot(self.data.row(j), x)?;
        Ok(self.value_from_margin(t, self.data.label(j)))
    }

    /// Scalar `c` such that `∇Λ(x; ξ_j) = c · row_j`.
    pub fn sample_grad_coef(&self, x: &[f64], j: usize) -> Result<f64> {
        self.check_j(j)?;
        let t = dot(self.data.row(j), x)?;
        Ok(self.coef_from_margin(t, self.data.label(j)))
    }

    /// Per-sample gradient, supported on the row's nonzeros.
    pub fn sample_grad(&self, x: &[f64], j: usize) -> Result<SparseVec> {
        self.check_x(x)?;
        let c = self.sample_grad_coef(x, j)?;
        Ok(self.data.row(j).scaled(c))
    }

    /// Mean of per-sample gradients over `ids`, counting repeats.
    pub fn batch_mean_grad(&self, x: &[f64], ids: &[usize]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.batch_mean_grad_into(x, ids, &mut out)?;
        Ok(out)
    }

    pub fn batch_mean_grad_into(&self, x: &[f64], ids: &[usize], out: &mut [f64]) -> Result<()> {
        if ids.is_empty() {
            return Err(invalid("batch must be nonempty"));
        }
        self.check_x(x)?;
        self.check_x(out)?;
        out.fill(0.0);
        let w = 1.0 / ids.len() as f64;
        for &j in ids {
            let c = self.sample_grad_coef(x, j)?;
            axpy(w * c, self.data.row(j), out)?;
        }
        Ok(())
    }

    pub fn full_grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.full_grad_into(x, &mut out)?;
        Ok(out)
    }

    pub fn full_grad_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.check_x(x)?;
        self.check_x(out)?;
        out.fill(0.0);
        let w = 1.0 / self.n_samples() as f64;
        for (row, &y) in self.data.rows().iter().zip(self.data.labels()) {
            let c = self.coef_from_margin(dot(row, x)?, y);
            axpy(w * c, row, out)?;
        }
        Ok(())
    }

    /// Mean loss over all samples.
    pub fn loss_value(&self, x: &[f64]) -> Result<f64> {
        self.check_x(x)?;
        let mut total = 0.0;
        for (row, &y) in self.data.rows().iter().zip(self.data.labels()) {
            total += self.value_from_margin(dot(row, x)?, y);
        }
        Ok(total / self.n_samples() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::parse_libsvm_str;

    fn loss(kind: LossKind, text: &str) -> SmoothLoss {
        SmoothLoss::new(kind, Arc::new(parse_libsvm_str(text).unwrap())).unwrap()
    }

    #[test]
    fn logistic_gradient_at_origin_is_half_row() {
        let l = loss(LossKind::Logistic, "-1 1:2 3:-4\n+1 2:1\n");
        let g = l.sample_grad(&[0.0; 3], 0).unwrap();
        assert_eq!(g.indices(), &[0, 2]);
        assert_eq!(g.values(), &[1.0, -2.0]);
    }

    #[test]
    fn least_squares_gradient_direct() {
        let l = loss(LossKind::LeastSquares, "1 1:1\n0.5 2:1\n");
        let g = l.sample_grad(&[0.0, 0.0], 0).unwrap().to_dense(2).unwrap();
        assert_eq!(g, vec![-1.0, 0.0]);
    }

    #[test]
    fn logistic_value_at_origin_is_ln2() {
        let l = loss(LossKind::Logistic, "-1 1:2 3:-4\n+1 2:1\n+1 1:0.3\n");
        assert!((l.loss_value(&[0.0; 3]).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn exact_least_squares_fit_has_zero_loss() {
        let l = loss(LossKind::LeastSquares, "2 1:1\n3 2:1\n5 1:1 2:1\n");
        assert_eq!(l.loss_value(&[2.0, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn lipschitz_examples() {
        assert_eq!(loss(LossKind::Logistic, "1 1:2").lipschitz(), 1.0);
        assert_eq!(
            loss(LossKind::LeastSquares, "1 1:1\n1 2:3").lipschitz(),
            9.0
        );
        let base = loss(LossKind::LeastSquares, "1 1:1 2:-2\n1 2:0.5");
        let scaled = loss(LossKind::LeastSquares, "1 1:3 2:-6\n1 2:1.5");
        assert!((scaled.lipschitz() - 9.0 * base.lipschitz()).abs() < 1e-12);
    }

    #[test]
    fn logistic_curvature_bound_by_grid() {
        // Λ''(t) along d is σ'(t)‖d‖²; its maximum over a fine grid should be ‖d‖²/4.
        let d_sq = 4.0;
        let max = (-20_000..=20_000)
            .map(|i| {
                let t = i as f64 * 1e-3;
                let s = sigmoid(t);
                s * (1.0 - s) * d_sq
            })
            .fold(0.0, f64::max);
        assert!((max - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stable_logistic_pieces() {
        assert!(log1p_exp_neg(-800.0).is_finite());
        assert!((log1p_exp_neg(-800.0) - 800.0).abs() < 1e-12);
        assert!(log1p_exp_neg(800.0) >= 0.0);
        assert_eq!(sigmoid(-800.0), 0.0);
        assert_eq!(sigmoid(800.0), 1.0);
    }

    #[test]
    fn duplicate_batch_equals_single_sample() {
        let l = loss(LossKind::Logistic, "-1 1:2 3:-4\n+1 2:1\n+1 1:0.3\n");
        let x = [0.3, -0.2, 0.1];
        let twice = l.batch_mean_grad(&x, &[2, 2]).unwrap();
        let once = l.sample_grad(&x, 2).unwrap().to_dense(3).unwrap();
        assert_eq!(twice, once);
        let all = l.batch_mean_grad(&x, &[0, 1, 2]).unwrap();
        let full = l.full_grad(&x).unwrap();
        for (a, b) in all.iter().zip(&full) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn balanced_mirror_rows_cancel_at_origin() {
        let l = loss(
            LossKind::Logistic,
            "1 1:1 2:2\n-1 1:1 2:2\n1 1:-1 2:-2\n-1 1:-1 2:-2\n",
        );
        assert_eq!(l.full_grad(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn argument_errors() {
        let l = loss(LossKind::Logistic, "1 1:1\n");
        assert!(l.sample_grad(&[0.0], 1).is_err());
        assert!(l.sample_grad(&[0.0, 0.0], 0).is_err());
        assert!(l.batch_mean_grad(&[0.0], &[]).is_err());
        assert!(l.full_grad(&[0.0, 1.0]).is_err());
        assert!(SmoothLoss::new(
            LossKind::Logistic,
            Arc::new(parse_libsvm_str("1\n").unwrap())
        )
        .is_err());
    }
}
