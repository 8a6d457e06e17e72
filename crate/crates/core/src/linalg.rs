//! Sparse rows and the handful of dense kernels the optimizers need.

use crate::error::{invalid, Result};

/// A sparse vector stored as sorted 0-based positions and aligned values.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVec {
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseVec {
    /// Builds a sparse vector, checking that indices are strictly increasing.
    pub fn new(indices: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(invalid(format!(
                "{} indices but {} values",
                indices.len(),
                values.len()
            )));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("sparse indices must be strictly increasing"));
        }
        Ok(Self { indices, values })
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    /// Smallest dense dimension able to hold this vector.
    pub fn min_dim(&self) -> usize {
        self.indices.last().map_or(0, |&i| i + 1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices
            .iter()
            .copied()
            .zip(self.values.iter().copied())
    }

    pub fn squared_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn scaled(&self, alpha: f64) -> SparseVec {
        SparseVec {
            indices: self.indices.clone(),
            values: self.values.iter().map(|v| alpha * v).collect(),
        }
    }

    pub fn to_dense(&self, dim: usize) -> Result<Vec<f64>> {
        let mut out = vec![0.0; dim];
        axpy(1.0, self, &mut out)?;
        Ok(out)
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if self.min_dim() > dim {
            return Err(invalid(format!(
                "sparse index {} out of range for dimension {dim}",
                self.min_dim() - 1
            )));
        }
        Ok(())
    }
}

/// Inner product of a sparse row with a dense vector.
pub fn dot(a: &SparseVec, x: &[f64]) -> Result<f64> {
    a.check_dim(x.len())?;
    Ok(a.iter().map(|(i, v)| v * x[i]).sum())
}

/// `x += alpha * a`.
pub fn axpy(alpha: f64, a: &SparseVec, x: &mut [f64]) -> Result<()> {
    a.check_dim(x.len())?;
    for (i, v) in a.iter() {
        x[i] += alpha * v;
    }
    Ok(())
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dense_dot(a: &[f64], b: &[f64]) -> Result<f64> {
    same_len(a, b)?;
    Ok(a.iter().zip(b).map(|(x, y)| x * y).sum())
}

/// Euclidean distance between two dense vectors.
pub fn dist(a: &[f64], b: &[f64]) -> Result<f64> {
    same_len(a, b)?;
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

pub(crate) fn same_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(invalid(format!(
            "dimension mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

pub(crate) fn all_finite(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite())
}
