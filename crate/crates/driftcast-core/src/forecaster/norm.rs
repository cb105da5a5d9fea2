//! Instance-normalization wrapper without learnable transformations.
//!
//! Each look-back column is standardized by its own mean and population
//! standard deviation before the inner model predicts, and the prediction is
//! mapped back with the same statistics. The epsilon floor keeps constant
//! columns well-defined in both directions.

use ndarray::{Array1, Array2};

use super::{check_lookback, check_upstream, Forecaster};
use crate::error::Result;
use crate::model_doc::ModelNode;

pub struct NormWrapper {
    inner: Box<dyn Forecaster>,
    epsilon: f64,
}

impl NormWrapper {
    pub fn new(inner: Box<dyn Forecaster>, epsilon: f64) -> Self {
        assert!(epsilon > 0.0, "epsilon must be positive");
        Self { inner, epsilon }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn inner(&self) -> &dyn Forecaster {
        self.inner.as_ref()
    }

    /// Per-variable (normalized window, mean, sigma + epsilon).
    fn normalize(&self, x: &Array2<f64>) -> (Array2<f64>, Array1<f64>, Array1<f64>) {
        let (len, vars) = x.dim();
        let mut mu = Array1::zeros(vars);
        let mut scale = Array1::zeros(vars);
        let mut normalized = Array2::zeros((len, vars));
        for c in 0..vars {
            let col = x.column(c);
            let mean = col.sum() / len as f64;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / len as f64;
            let s = var.sqrt() + self.epsilon;
            mu[c] = mean;
            scale[c] = s;
            normalized
                .column_mut(c)
                .assign(&col.mapv(|v| (v - mean) / s));
        }
        (normalized, mu, scale)
    }
}

impl Forecaster for NormWrapper {
    fn lookback(&self) -> usize {
        self.inner.lookback()
    }

    fn horizon(&self) -> usize {
        self.inner.horizon()
    }

    fn predict(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        check_lookback(x, self.lookback())?;
        let (normalized, mu, scale) = self.normalize(x);
        let mut out = self.inner.predict(&normalized)?;
        for c in 0..x.ncols() {
            let mut col = out.column_mut(c);
            col *= scale[c];
            col += mu[c];
        }
        Ok(out)
    }

    fn vjp_input(&self, x: &Array2<f64>, upstream: &Array2<f64>) -> Result<Array2<f64>> {
        check_lookback(x, self.lookback())?;
        check_upstream(upstream, self.horizon(), x.ncols())?;
        let (len, vars) = x.dim();
        let (normalized, mu, scale) = self.normalize(x);
        let inner_pred = self.inner.predict(&normalized)?;

        // Output column is pred_c * s_c + mu_c, so the inner model sees the
        // upstream scaled by s_c.
        let mut scaled_upstream = upstream.clone();
        for c in 0..vars {
            let mut col = scaled_upstream.column_mut(c);
            col *= scale[c];
        }
        let through_inner = self.inner.vjp_input(&normalized, &scaled_upstream)?;

        let n = len as f64;
        let mut out = Array2::zeros((len, vars));
        for c in 0..vars {
            let a = through_inner.column(c);
            let a_mean = a.sum() / n;
            let a_dot_norm = a.dot(&normalized.column(c));
            let u_dot_pred = upstream.column(c).dot(&inner_pred.column(c));
            let u_sum = upstream.column(c).sum();
            let sigma = scale[c] - self.epsilon;
            // Coefficient of d(sigma)/dx_l = (x_l - mu) / (n * sigma); zero at
            // an exactly constant column, where sigma is not differentiable.
            let sigma_coef = if sigma > 0.0 {
                (u_dot_pred - a_dot_norm / scale[c]) / (n * sigma)
            } else {
                0.0
            };
            for l in 0..len {
                out[[l, c]] = (a[l] - a_mean) / scale[c]
                    + sigma_coef * (x[[l, c]] - mu[c])
                    + u_sum / n;
            }
        }
        Ok(out)
    }

    fn params(&self) -> Vec<f64> {
        self.inner.params()
    }

    fn set_params(&mut self, flat: &[f64]) -> Result<()> {
        self.inner.set_params(flat)
    }

    fn param_grads(&self, x: &Array2<f64>, upstream: &Array2<f64>) -> Result<Vec<f64>> {
        check_lookback(x, self.lookback())?;
        check_upstream(upstream, self.horizon(), x.ncols())?;
        let (normalized, _, scale) = self.normalize(x);
        let mut scaled_upstream = upstream.clone();
        for c in 0..x.ncols() {
            let mut col = scaled_upstream.column_mut(c);
            col *= scale[c];
        }
        self.inner.param_grads(&normalized, &scaled_upstream)
    }

    fn to_node(&self) -> ModelNode {
        ModelNode::Norm {
            epsilon: self.epsilon,
            inner: Box::new(self.inner.to_node()),
        }
    }
}
