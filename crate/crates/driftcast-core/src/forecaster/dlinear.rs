//! Linear forecaster on a trend/seasonal decomposition.
//!
//! Each variable is split into a moving-average trend (edge-replicated
//! padding, odd kernel, default 25) and a seasonal remainder `x - trend`;
//! the two parts get independent linear heads and the outputs are summed.
//! The decomposition satisfies `trend + seasonal = x` exactly.

use ndarray::{Array1, Array2, ArrayView1};

use super::{bank_index, check_lookback, check_upstream, ChannelMode, Forecaster};
use crate::error::{Error, Result};
use crate::model_doc::ModelNode;

#[derive(Debug, Clone, PartialEq)]
pub struct DLinearForecaster {
    lookback: usize,
    horizon: usize,
    kernel: usize,
    pub trend_weights: Vec<Array2<f64>>,
    pub trend_biases: Vec<Array1<f64>>,
    pub seasonal_weights: Vec<Array2<f64>>,
    pub seasonal_biases: Vec<Array1<f64>>,
}

impl DLinearForecaster {
    pub fn zeros(
        lookback: usize,
        horizon: usize,
        kernel: usize,
        mode: ChannelMode,
    ) -> Result<Self> {
        Self::zeros_with_vars(lookback, horizon, kernel, if mode == ChannelMode::Shared { 1 } else { 0 })
    }

    pub fn zeros_per_variable(
        lookback: usize,
        horizon: usize,
        kernel: usize,
        vars: usize,
    ) -> Result<Self> {
        Self::zeros_with_vars(lookback, horizon, kernel, vars)
    }

    fn zeros_with_vars(lookback: usize, horizon: usize, kernel: usize, banks: usize) -> Result<Self> {
        if kernel == 0 || kernel.is_multiple_of(2) {
            return Err(Error::Shape(format!("kernel {kernel} must be odd and positive")));
        }
        if banks == 0 {
            return Err(Error::Shape("per-variable mode needs a variable count".into()));
        }
        Ok(Self {
            lookback,
            horizon,
            kernel,
            trend_weights: (0..banks).map(|_| Array2::zeros((horizon, lookback))).collect(),
            trend_biases: (0..banks).map(|_| Array1::zeros(horizon)).collect(),
            seasonal_weights: (0..banks).map(|_| Array2::zeros((horizon, lookback))).collect(),
            seasonal_biases: (0..banks).map(|_| Array1::zeros(horizon)).collect(),
        })
    }

    pub fn kernel(&self) -> usize {
        self.kernel
    }

    pub(crate) fn from_parts(
        kernel: usize,
        trend_weights: Vec<Array2<f64>>,
        trend_biases: Vec<Array1<f64>>,
        seasonal_weights: Vec<Array2<f64>>,
        seasonal_biases: Vec<Array1<f64>>,
    ) -> Result<Self> {
        if trend_weights.is_empty()
            || trend_weights.len() != trend_biases.len()
            || trend_weights.len() != seasonal_weights.len()
            || trend_weights.len() != seasonal_biases.len()
        {
            return Err(Error::Shape("bank size mismatch".into()));
        }
        let (horizon, lookback) = trend_weights[0].dim();
        let mut model = Self::zeros_with_vars(lookback, horizon, kernel, trend_weights.len())?;
        for w in trend_weights.iter().chain(seasonal_weights.iter()) {
            if w.dim() != (horizon, lookback) {
                return Err(Error::Shape("inconsistent weight shapes".into()));
            }
        }
        for b in trend_biases.iter().chain(seasonal_biases.iter()) {
            if b.len() != horizon {
                return Err(Error::Shape("bias length != horizon".into()));
            }
        }
        model.trend_weights = trend_weights;
        model.trend_biases = trend_biases;
        model.seasonal_weights = seasonal_weights;
        model.seasonal_biases = seasonal_biases;
        Ok(model)
    }
}

/// Moving average with edge-replicated padding: out-of-range indices clamp to
/// the boundary samples.
pub(crate) fn moving_average(col: ArrayView1<f64>, kernel: usize) -> Array1<f64> {
    let len = col.len();
    let half = (kernel / 2) as isize;
    let mut out = Array1::zeros(len);
    for i in 0..len {
        let mut acc = 0.0;
        for d in -half..=half {
            let idx = (i as isize + d).clamp(0, len as isize - 1) as usize;
            acc += col[idx];
        }
        out[i] = acc / kernel as f64;
    }
    out
}

/// Adjoint of [`moving_average`]: scatters each averaged contribution back to
/// the clamped source index.
fn moving_average_adjoint(grad: ArrayView1<f64>, kernel: usize) -> Array1<f64> {
    let len = grad.len();
    let half = (kernel / 2) as isize;
    let mut out = Array1::zeros(len);
    for i in 0..len {
        let share = grad[i] / kernel as f64;
        for d in -half..=half {
            let idx = (i as isize + d).clamp(0, len as isize - 1) as usize;
            out[idx] += share;
        }
    }
    out
}

impl Forecaster for DLinearForecaster {
    fn lookback(&self) -> usize {
        self.lookback
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn predict(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        check_lookback(x, self.lookback)?;
        let vars = x.ncols();
        let mut out = Array2::zeros((self.horizon, vars));
        for c in 0..vars {
            let k = bank_index(self.trend_weights.len(), c, vars)?;
            let trend = moving_average(x.column(c), self.kernel);
            let seasonal = &x.column(c) - &trend;
            let mut col = self.trend_weights[k].dot(&trend);
            col += &self.seasonal_weights[k].dot(&seasonal);
            col += &self.trend_biases[k];
            col += &self.seasonal_biases[k];
            out.column_mut(c).assign(&col);
        }
        Ok(out)
    }

    fn vjp_input(&self, x: &Array2<f64>, upstream: &Array2<f64>) -> Result<Array2<f64>> {
        check_lookback(x, self.lookback)?;
        check_upstream(upstream, self.horizon, x.ncols())?;
        let vars = x.ncols();
        let mut out = Array2::zeros((self.lookback, vars));
        for c in 0..vars {
            let k = bank_index(self.trend_weights.len(), c, vars)?;
            let uc = upstream.column(c);
            // y = Wt (M x) + Ws (x - M x): dx = M^T (Wt^T u - Ws^T u) + Ws^T u
            let through_trend = self.trend_weights[k].t().dot(&uc);
            let through_seasonal = self.seasonal_weights[k].t().dot(&uc);
            let diff = &through_trend - &through_seasonal;
            let mut dx = moving_average_adjoint(diff.view(), self.kernel);
            dx += &through_seasonal;
            out.column_mut(c).assign(&dx);
        }
        Ok(out)
    }

    fn params(&self) -> Vec<f64> {
        let mut flat = Vec::new();
        for bank in [&self.trend_weights, &self.seasonal_weights] {
            for w in bank {
                flat.extend(w.iter());
            }
        }
        for bank in [&self.trend_biases, &self.seasonal_biases] {
            for b in bank {
                flat.extend(b.iter());
            }
        }
        flat
    }

    fn set_params(&mut self, flat: &[f64]) -> Result<()> {
        let banks = self.trend_weights.len();
        let expected = banks * 2 * (self.horizon * self.lookback + self.horizon);
        if flat.len() != expected {
            return Err(Error::Shape(format!(
                "flat length {} != {expected}",
                flat.len()
            )));
        }
        let mut it = flat.iter();
        for bank in [&mut self.trend_weights, &mut self.seasonal_weights] {
            for w in bank.iter_mut() {
                for v in w.iter_mut() {
                    *v = *it.next().unwrap();
                }
            }
        }
        for bank in [&mut self.trend_biases, &mut self.seasonal_biases] {
            for b in bank.iter_mut() {
                for v in b.iter_mut() {
                    *v = *it.next().unwrap();
                }
            }
        }
        Ok(())
    }

    fn param_grads(&self, x: &Array2<f64>, upstream: &Array2<f64>) -> Result<Vec<f64>> {
        check_lookback(x, self.lookback)?;
        check_upstream(upstream, self.horizon, x.ncols())?;
        let vars = x.ncols();
        let banks = self.trend_weights.len();
        let mut dwt: Vec<Array2<f64>> = (0..banks)
            .map(|_| Array2::zeros((self.horizon, self.lookback)))
            .collect();
        let mut dws = dwt.clone();
        let mut dbt: Vec<Array1<f64>> = (0..banks).map(|_| Array1::zeros(self.horizon)).collect();
        let mut dbs = dbt.clone();
        for c in 0..vars {
            let k = bank_index(banks, c, vars)?;
            let trend = moving_average(x.column(c), self.kernel);
            let seasonal = &x.column(c) - &trend;
            let uc = upstream.column(c);
            for (i, &u) in uc.iter().enumerate() {
                for j in 0..self.lookback {
                    dwt[k][[i, j]] += u * trend[j];
                    dws[k][[i, j]] += u * seasonal[j];
                }
                dbt[k][i] += u;
                dbs[k][i] += u;
            }
        }
        let mut flat = Vec::new();
        for bank in [&dwt, &dws] {
            for w in bank {
                flat.extend(w.iter());
            }
        }
        for bank in [&dbt, &dbs] {
            for b in bank {
                flat.extend(b.iter());
            }
        }
        Ok(flat)
    }

    fn to_node(&self) -> ModelNode {
        ModelNode::Dlinear {
            lookback: self.lookback,
            horizon: self.horizon,
            kernel: self.kernel,
            trend_weights: self.trend_weights.iter().map(|w| w.iter().copied().collect()).collect(),
            trend_biases: self.trend_biases.iter().map(|b| b.to_vec()).collect(),
            seasonal_weights: self
                .seasonal_weights
                .iter()
                .map(|w| w.iter().copied().collect())
                .collect(),
            seasonal_biases: self.seasonal_biases.iter().map(|b| b.to_vec()).collect(),
        }
    }
}
