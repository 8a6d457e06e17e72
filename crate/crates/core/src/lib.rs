//! Stochastic proximal methods for composite problems `min f(x) + r(x)`,
//! where `f` is a finite-sum smooth loss over a sparse dataset and `r` is an
//! ℓ1 penalty.
//!
//! [`psga::Psga`] combines a momentum variance-reduced gradient estimator,
//! occasional full-gradient refreshes and a curvature-adaptive step size.
//! [`baselines`] holds the comparison methods.

pub mod baselines;
pub mod data;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod optimizer;
pub mod problems;
pub mod psga;
pub mod regularizers;
pub mod rng;
pub mod synthetic;

pub use data::{load_libsvm, parse_libsvm, parse_libsvm_str, Dataset};
pub use error::{Error, Result};
pub use linalg::SparseVec;
pub use optimizer::{GradientEstimate, Optimizer};
pub use problems::{LossKind, SmoothLoss};
pub use psga::{Psga, PsgaParams, StepBranch};
pub use regularizers::{Surrogate, L1};
pub use rng::RngStream;
