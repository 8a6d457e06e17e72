//! The ℓ1 regularizer `r(x) = λ‖x‖₁`, its proximal map, and the surrogate
//! interface used inside the proximal step.

use crate::error::{invalid, Result};
use crate::linalg::same_len;

pub const DEFAULT_LAMBDA: f64 = 1e-5;

/// `sign(v) · max(|v| - threshold, 0)`
pub fn soft_threshold(v: f64, threshold: f64) -> f64 {
    if v > threshold {
        v - threshold
    } else if v < -threshold {
        v + threshold
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1 {
    lambda: f64,
}

impl Default for L1 {
    fn default() -> Self {
        Self {
            lambda: DEFAULT_LAMBDA,
        }
    }
}

impl L1 {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(invalid(format!(
                "lambda must be finite and >= 0, got {lambda}"
            )));
        }
        Ok(Self { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.lambda * x.iter().map(|v| v.abs()).sum::<f64>()
    }

    /// `argmin_u tλ‖u‖₁ + ½‖u - v‖²`
    pub fn prox(&self, v: &[f64], t: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; v.len()];
        self.prox_into(v, t, &mut out)?;
        Ok(out)
    }

    pub fn prox_into(&self, v: &[f64], t: f64, out: &mut [f64]) -> Result<()> {
        if !(t > 0.0) {
            return Err(invalid(format!("prox step must be positive, got {t}")));
        }
        same_len(v, out)?;
        let thr = t * self.lambda;
        for (o, &vi) in out.iter_mut().zip(v) {
            *o = soft_threshold(vi, thr);
        }
        Ok(())
    }

    /// Distance from 0 to `g + λ∂‖·‖₁(x)`, where `g` is the smooth gradient at `x`.
    pub fn subdiff_dist(&self, g: &[f64], x: &[f64]) -> Result<f64> {
        same_len(g, x)?;
        let sq: f64 = g
            .iter()
            .zip(x)
            .map(|(&gi, &xi)| {
                let r = if xi != 0.0 {
                    gi + self.lambda * xi.signum()
                } else {
                    (gi.abs() - self.lambda).max(0.0)
                };
                r * r
            })
            .sum();
        Ok(sq.sqrt())
    }
}

/// A surrogate `D(x, y)` of the regularizer: `D(y, y) = r(y)` and
/// `D(x, y) >= r(x)`. The proximal step is taken on `D(·, anchor)`.
pub trait Surrogate {
    fn regularizer(&self, x: &[f64]) -> f64;

    fn surrogate(&self, x: &[f64], anchor: &[f64]) -> f64;

    fn surrogate_prox_into(&self, v: &[f64], t: f64, anchor: &[f64], out: &mut [f64])
        -> Result<()>;
}

/// The plain regularizer is its own surrogate.
impl Surrogate for L1 {
    fn regularizer(&self, x: &[f64]) -> f64 {
        self.value(x)
    }

    fn surrogate(&self, x: &[f64], _anchor: &[f64]) -> f64 {
        self.value(x)
    }

    fn surrogate_prox_into(
        &self,
        v: &[f64],
        t: f64,
        _anchor: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        self.prox_into(v, t, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn prox_objective(u: f64, v: f64, tl: f64) -> f64 {
        tl * u.abs() + 0.5 * (u - v) * (u - v)
    }

    /// Grid minimizer of the scalar prox objective over [-4, 4], step 1e-4.
    fn grid_prox(v: f64, tl: f64) -> f64 {
        let mut best = (f64::INFINITY, 0.0);
        for i in -40_000..=40_000 {
            let u = i as f64 * 1e-4;
            let val = prox_objective(u, v, tl);
            if val < best.0 {
                best = (val, u);
            }
        }
        best.1
    }

    #[test]
    fn prox_matches_grid_oracle() {
        // frozen oracle value: grid_prox(2.0, 0.5) = 1.5
        assert!((grid_prox(2.0, 0.5) - 1.5).abs() < 1e-9);
        let r = L1::new(0.5).unwrap();
        assert_eq!(r.prox(&[2.0], 1.0).unwrap(), vec![1.5]);
        assert_eq!(r.prox(&[-0.3], 1.0).unwrap(), vec![0.0]);
    }

    #[test]
    fn zero_lambda_prox_is_identity() {
        let r = L1::new(0.0).unwrap();
        let v = [1.0, -2.5, 0.0, 3e-9];
        assert_eq!(r.prox(&v, 0.7).unwrap(), v.to_vec());
    }

    #[test]
    fn bad_arguments() {
        assert!(L1::new(-1.0).is_err());
        assert!(L1::new(f64::NAN).is_err());
        let r = L1::new(0.1).unwrap();
        assert!(r.prox(&[1.0], 0.0).is_err());
        assert!(r.prox(&[1.0], -1.0).is_err());
        assert!(r.subdiff_dist(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn value_examples() {
        let r = L1::new(1e-5).unwrap();
        assert_eq!(r.value(&[0.0, 0.0]), 0.0);
        assert!((r.value(&[1.0, -1.0]) - 2e-5).abs() < 1e-20);
    }

    #[test]
    fn subdiff_scalar_examples() {
        let r = L1::new(0.5).unwrap();
        assert_eq!(r.subdiff_dist(&[0.3], &[0.0]).unwrap(), 0.0);
        assert!((r.subdiff_dist(&[0.2], &[1.0]).unwrap() - 0.7).abs() < 1e-15);
    }

    /// Brute force: minimize ‖g + λ s‖ over s_i = sign(x_i) where x_i ≠ 0 and
    /// s_i on a 1e-3 grid of [-1, 1] where x_i = 0.
    fn grid_subdiff(g: &[f64], x: &[f64], lambda: f64) -> f64 {
        let mut total = 0.0;
        for (&gi, &xi) in g.iter().zip(x) {
            let best = if xi != 0.0 {
                (gi + lambda * xi.signum()).powi(2)
            } else {
                (-1000..=1000)
                    .map(|k| (gi + lambda * k as f64 * 1e-3).powi(2))
                    .fold(f64::INFINITY, f64::min)
            };
            total += best;
        }
        total.sqrt()
    }

    #[test]
    fn subdiff_matches_grid_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let lambda = rng.random_range(0.0..1.0);
            let g: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let x: Vec<f64> = (0..3)
                .map(|_| {
                    if rng.random_bool(0.5) {
                        0.0
                    } else {
                        rng.random_range(-1.0..1.0)
                    }
                })
                .collect();
            let got = L1::new(lambda).unwrap().subdiff_dist(&g, &x).unwrap();
            let want = grid_subdiff(&g, &x, lambda);
            assert!((got - want).abs() <= 2e-3, "got {got}, grid {want}");
        }
    }

    #[test]
    fn trivial_surrogate_laws() {
        let r = L1::new(0.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-3.0..3.0)).collect();
            let y: Vec<f64> = (0..4).map(|_| rng.random_range(-3.0..3.0)).collect();
            assert_eq!(r.surrogate(&y, &y), r.regularizer(&y));
            assert!(r.surrogate(&x, &y) >= r.regularizer(&x));
        }
    }

    proptest! {
        #[test]
        fn prox_is_optimal_against_perturbations(
            v in proptest::collection::vec(-5.0f64..5.0, 1..6),
            t in 0.01f64..3.0,
            lambda in 0.0f64..2.0,
            seed in any::<u64>(),
        ) {
            let r = L1::new(lambda).unwrap();
            let u = r.prox(&v, t).unwrap();
            let obj = |w: &[f64]| {
                t * lambda * w.iter().map(|a| a.abs()).sum::<f64>()
                    + 0.5 * w.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
            };
            let base = obj(&u);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..1000 {
                let scale = 10f64.powf(rng.random_range(-4.0..0.0));
                let w: Vec<f64> = u.iter().map(|a| a + scale * rng.random_range(-1.0..1.0)).collect();
                prop_assert!(base <= obj(&w) + 1e-12);
            }
        }

        #[test]
        fn prox_is_nonexpansive(
            pair in (1usize..6).prop_flat_map(|n| (
                proptest::collection::vec(-5.0f64..5.0, n),
                proptest::collection::vec(-5.0f64..5.0, n),
            )),
            t in 0.01f64..3.0,
            lambda in 0.0f64..2.0,
        ) {
            let (a, b) = pair;
            let r = L1::new(lambda).unwrap();
            let pa = r.prox(&a, t).unwrap();
            let pb = r.prox(&b, t).unwrap();
            let d_out = crate::linalg::dist(&pa, &pb).unwrap();
            let d_in = crate::linalg::dist(&a, &b).unwrap();
            prop_assert!(d_out <= d_in + 1e-12);
        }

        #[test]
        fn l1_triangle_inequality(
            pair in (1usize..6).prop_flat_map(|n| (
                proptest::collection::vec(-5.0f64..5.0, n),
                proptest::collection::vec(-5.0f64..5.0, n),
            )),
            lambda in 0.0f64..2.0,
        ) {
            let (x, y) = pair;
            let r = L1::new(lambda).unwrap();
            let s: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
            prop_assert!(r.value(&s) <= r.value(&x) + r.value(&y) + 1e-12);
        }
    }
}
