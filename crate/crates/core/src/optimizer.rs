use crate::error::Result;
use crate::problems::SmoothLoss;
use crate::psga::StepBranch;
use crate::regularizers::L1;

/// The last gradient estimate an optimizer formed, and where it formed it.
#[derive(Debug, Clone, Copy)]
pub struct GradientEstimate<'a> {
    pub point: &'a [f64],
    pub value: &'a [f64],
}

/// A stepwise stochastic proximal method over a shared loss and regularizer.
///
/// One `step` is one logical iteration as counted by the benchmark harness.
pub trait Optimizer: Send {
    fn name(&self) -> &'static str;

    fn step(&mut self, loss: &SmoothLoss, reg: &L1) -> Result<()>;

    /// Number of completed steps.
    fn iterations(&self) -> u64;

    /// Current iterate.
    fn iterate(&self) -> &[f64];

    fn estimate(&self) -> Option<GradientEstimate<'_>>;

    /// Step size used by the last completed step.
    fn step_size(&self) -> f64;

    fn branch(&self) -> Option<StepBranch> {
        None
    }
}
