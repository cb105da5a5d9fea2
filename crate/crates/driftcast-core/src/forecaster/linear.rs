//! Direct linear map from look-back to horizon.

use ndarray::{Array1, Array2};

use super::{bank_index, check_lookback, check_upstream, ChannelMode, Forecaster};
use crate::error::{Error, Result};
use crate::model_doc::ModelNode;

/// `y_c = W x_c + b`, with `W` (H×L) and `b` (H) either shared across
/// variables or held per-variable.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearForecaster {
    lookback: usize,
    horizon: usize,
    /// One weight matrix (shared) or C matrices (per-variable).
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl LinearForecaster {
    pub fn zeros(lookback: usize, horizon: usize, mode: ChannelMode) -> Self {
        match mode {
            ChannelMode::Shared => Self {
                lookback,
                horizon,
                weights: vec![Array2::zeros((horizon, lookback))],
                biases: vec![Array1::zeros(horizon)],
            },
            ChannelMode::PerVariable => {
                panic!("per-variable mode needs a variable count; use zeros_per_variable")
            }
        }
    }

    pub fn zeros_per_variable(lookback: usize, horizon: usize, vars: usize) -> Self {
        Self {
            lookback,
            horizon,
            weights: (0..vars).map(|_| Array2::zeros((horizon, lookback))).collect(),
            biases: (0..vars).map(|_| Array1::zeros(horizon)).collect(),
        }
    }

    pub fn from_parts(weights: Vec<Array2<f64>>, biases: Vec<Array1<f64>>) -> Result<Self> {
        if weights.is_empty() || weights.len() != biases.len() {
            return Err(Error::Shape("weight/bias bank size mismatch".into()));
        }
        let (horizon, lookback) = weights[0].dim();
        for w in &weights {
            if w.dim() != (horizon, lookback) {
                return Err(Error::Shape("inconsistent weight shapes".into()));
            }
        }
        for b in &biases {
            if b.len() != horizon {
                return Err(Error::Shape("bias length != horizon".into()));
            }
        }
        Ok(Self {
            lookback,
            horizon,
            weights,
            biases,
        })
    }

    pub fn is_shared(&self) -> bool {
        self.weights.len() == 1
    }
}

impl Forecaster for LinearForecaster {
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
            let k = bank_index(self.weights.len(), c, vars)?;
            let mut col = self.weights[k].dot(&x.column(c));
            col += &self.biases[k];
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
            let k = bank_index(self.weights.len(), c, vars)?;
            out.column_mut(c)
                .assign(&self.weights[k].t().dot(&upstream.column(c)));
        }
        Ok(out)
    }

    fn params(&self) -> Vec<f64> {
        let mut flat = Vec::new();
        for w in &self.weights {
            flat.extend(w.iter());
        }
        for b in &self.biases {
            flat.extend(b.iter());
        }
        flat
    }

    fn set_params(&mut self, flat: &[f64]) -> Result<()> {
        let expected = self.weights.len() * (self.horizon * self.lookback + self.horizon);
        if flat.len() != expected {
            return Err(Error::Shape(format!(
                "flat length {} != {expected}",
                flat.len()
            )));
        }
        let mut it = flat.iter();
        for w in &mut self.weights {
            for v in w.iter_mut() {
                *v = *it.next().unwrap();
            }
        }
        for b in &mut self.biases {
            for v in b.iter_mut() {
                *v = *it.next().unwrap();
            }
        }
        Ok(())
    }

    fn param_grads(&self, x: &Array2<f64>, upstream: &Array2<f64>) -> Result<Vec<f64>> {
        check_lookback(x, self.lookback)?;
        check_upstream(upstream, self.horizon, x.ncols())?;
        let vars = x.ncols();
        let mut dw: Vec<Array2<f64>> = self.weights.iter().map(|w| Array2::zeros(w.dim())).collect();
        let mut db: Vec<Array1<f64>> = self.biases.iter().map(|b| Array1::zeros(b.len())).collect();
        for c in 0..vars {
            let k = bank_index(self.weights.len(), c, vars)?;
            let uc = upstream.column(c);
            let xc = x.column(c);
            for (i, &u) in uc.iter().enumerate() {
                for (j, &xv) in xc.iter().enumerate() {
                    dw[k][[i, j]] += u * xv;
                }
                db[k][i] += u;
            }
        }
        let mut flat = Vec::new();
        for w in &dw {
            flat.extend(w.iter());
        }
        for b in &db {
            flat.extend(b.iter());
        }
        Ok(flat)
    }

    fn to_node(&self) -> ModelNode {
        ModelNode::Linear {
            lookback: self.lookback,
            horizon: self.horizon,
            weights: self.weights.iter().map(|w| w.iter().copied().collect()).collect(),
            biases: self.biases.iter().map(|b| b.to_vec()).collect(),
        }
    }
}
