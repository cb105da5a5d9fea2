//! Frozen source forecasters: construction, pre-training, forward prediction,
//! and exact gradients.
//!
//! Every model maps an L×C look-back to an H×C prediction and exposes two
//! reverse-mode primitives: `vjp_input` (gradient of a scalar loss with
//! respect to the input, used to chain calibration gradients through the
//! frozen model) and `param_grads` (used only during pre-training). Both are
//! exact for the implemented forward maps and are checked against central
//! finite differences in the tests.

mod dlinear;
mod linear;
mod norm;
mod ridge;
mod train;

pub use dlinear::DLinearForecaster;
pub use linear::LinearForecaster;
pub use norm::NormWrapper;
pub use ridge::fit_ridge;
pub use train::{fit_iterative, mean_mse, TrainConfig, TrainReport};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::model_doc::ModelNode;

/// Whether temporal weights are shared across variables or kept per-variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelMode {
    /// One H×L map applied to every variable (the default).
    Shared,
    /// An independent H×L map per variable.
    PerVariable,
}

/// Behavioral contract of a source forecaster.
///
/// `predict` is deterministic and reentrant; `vjp_input(x, u)` returns the
/// exact gradient of `<u, predict(x)>` with respect to `x`. Parameters are
/// exposed as a flat vector so training and freezing checks can treat every
/// model uniformly; `param_grads` is aligned with that layout.
pub trait Forecaster: Send + Sync {
    fn lookback(&self) -> usize;
    fn horizon(&self) -> usize;
    fn predict(&self, x: &Array2<f64>) -> Result<Array2<f64>>;
    fn vjp_input(&self, x: &Array2<f64>, upstream: &Array2<f64>) -> Result<Array2<f64>>;
    fn params(&self) -> Vec<f64>;
    fn set_params(&mut self, flat: &[f64]) -> Result<()>;
    fn param_grads(&self, x: &Array2<f64>, upstream: &Array2<f64>) -> Result<Vec<f64>>;
    /// Serializable description of the model (kind, shapes, parameters).
    fn to_node(&self) -> ModelNode;
}

pub(crate) fn check_lookback(x: &Array2<f64>, lookback: usize) -> Result<()> {
    if x.nrows() != lookback {
        return Err(Error::Shape(format!(
            "input has {} rows, model expects look-back {lookback}",
            x.nrows()
        )));
    }
    Ok(())
}

pub(crate) fn check_upstream(
    upstream: &Array2<f64>,
    horizon: usize,
    vars: usize,
) -> Result<()> {
    if upstream.dim() != (horizon, vars) {
        return Err(Error::Shape(format!(
            "upstream is {}x{}, expected {horizon}x{vars}",
            upstream.nrows(),
            upstream.ncols()
        )));
    }
    Ok(())
}

/// Weight lookup for the shared/per-variable storage convention: a bank with
/// one entry serves every variable.
pub(crate) fn bank_index(bank_len: usize, var: usize, total_vars: usize) -> Result<usize> {
    if bank_len == 1 {
        Ok(0)
    } else if bank_len == total_vars {
        Ok(var)
    } else {
        Err(Error::Shape(format!(
            "model has {bank_len} per-variable maps but input has {total_vars} variables"
        )))
    }
}
