//! Seeded synthetic problems for tests, self-checks and demos.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::Dataset;
use crate::error::{invalid, Result};
use crate::linalg::SparseVec;
use crate::problems::sigmoid;

fn sparse_row(rng: &mut ChaCha8Rng, dim: usize, density: f64) -> SparseVec {
    let mut idx = Vec::new();
    let mut val = Vec::new();
    for i in 0..dim {
        if rng.random_bool(density) {
            idx.push(i);
            val.push(StandardNormal.sample(rng));
        }
    }
    if idx.is_empty() {
        let i = rng.random_range(0..dim);
        idx.push(i);
        val.push(StandardNormal.sample(rng));
    }
    SparseVec::new(idx, val).expect("indices generated in order")
}

/// Binary classification rows with a planted weight vector; labels are
/// drawn from the logistic model so the classes overlap.
pub fn sparse_logistic(n_samples: usize, dim: usize, density: f64, seed: u64) -> Result<Dataset> {
    if n_samples == 0 || dim == 0 || !(density > 0.0 && density <= 1.0) {
        return Err(invalid(
            "need n_samples >= 1, dim >= 1 and density in (0, 1]",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut rows = Vec::with_capacity(n_samples);
    let mut labels = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let row = sparse_row(&mut rng, dim, density);
        let t: f64 = row.iter().map(|(i, v)| v * w[i]).sum();
        let y = if rng.random_bool(sigmoid(t)) {
            1.0
        } else {
            -1.0
        };
        rows.push(row);
        labels.push(y);
    }
    Dataset::new(rows, labels, dim)
}

/// Dense Gaussian regression design `y = A x★ + noise` with a `k`-sparse `x★`.
/// Returns the dataset and `x★`.
pub fn sparse_regression(
    n_samples: usize,
    dim: usize,
    nonzeros: usize,
    noise: f64,
    seed: u64,
) -> Result<(Dataset, Vec<f64>)> {
    if n_samples == 0 || dim == 0 || nonzeros > dim {
        return Err(invalid("need n_samples >= 1, dim >= 1 and nonzeros <= dim"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x_star = vec![0.0; dim];
    let mut placed = 0;
    while placed < nonzeros {
        let i = rng.random_range(0..dim);
        if x_star[i] == 0.0 {
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            x_star[i] = sign * rng.random_range(0.5..2.0);
            placed += 1;
        }
    }
    let scale = 1.0 / (dim as f64).sqrt();
    let mut rows = Vec::with_capacity(n_samples);
    let mut labels = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let vals: Vec<f64> = (0..dim)
            .map(|_| scale * Distribution::<f64>::sample(&StandardNormal, &mut rng))
            .collect();
        let clean: f64 = vals.iter().zip(&x_star).map(|(a, b)| a * b).sum();
        let e: f64 = StandardNormal.sample(&mut rng);
        labels.push(clean + noise * e);
        rows.push(SparseVec::new((0..dim).collect(), vals)?);
    }
    Ok((Dataset::new(rows, labels, dim)?, x_star))
}
