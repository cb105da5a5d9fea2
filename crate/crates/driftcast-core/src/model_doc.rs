//! Versioned model document: one JSON file bundling the forecaster, split
//! ratios, and optional calibration snapshots.
//!
//! Floats are serialized in shortest round-trip decimal form, so a saved and
//! reloaded model predicts bit-identically.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::forecaster::{DLinearForecaster, Forecaster, LinearForecaster, NormWrapper};
use crate::gcm::Gcm;
use crate::io::write_atomic;

pub const DOC_VERSION: u32 = 1;

/// Serializable description of a forecaster; weight matrices are stored
/// row-major with their shapes implied by `lookback`/`horizon`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelNode {
    Linear {
        lookback: usize,
        horizon: usize,
        weights: Vec<Vec<f64>>,
        biases: Vec<Vec<f64>>,
    },
    Dlinear {
        lookback: usize,
        horizon: usize,
        kernel: usize,
        trend_weights: Vec<Vec<f64>>,
        trend_biases: Vec<Vec<f64>>,
        seasonal_weights: Vec<Vec<f64>>,
        seasonal_biases: Vec<Vec<f64>>,
    },
    Norm {
        epsilon: f64,
        inner: Box<ModelNode>,
    },
}

/// Calibration module snapshot.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GcmNode {
    pub dim: usize,
    pub vars: usize,
    /// Per-variable dim×dim matrices, row-major.
    pub w: Vec<Vec<f64>>,
    /// dim×vars, row-major.
    pub b: Vec<f64>,
    pub alpha: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelDocument {
    pub version: u32,
    pub lookback: usize,
    pub horizon: usize,
    /// Train/val/test ratios used at pre-training time; consumers reuse them
    /// to reconstruct the same test segment.
    pub split: Option<[f64; 3]>,
    pub column_names: Option<Vec<String>>,
    pub forecaster: ModelNode,
    pub gcm_in: Option<GcmNode>,
    pub gcm_out: Option<GcmNode>,
}

impl ModelDocument {
    pub fn new(forecaster: &dyn Forecaster) -> Self {
        Self {
            version: DOC_VERSION,
            lookback: forecaster.lookback(),
            horizon: forecaster.horizon(),
            split: None,
            column_names: None,
            forecaster: forecaster.to_node(),
            gcm_in: None,
            gcm_out: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument =
            serde_json::from_str(text).map_err(|e| Error::ModelDoc(e.to_string()))?;
        if doc.version != DOC_VERSION {
            return Err(Error::ModelDoc(format!(
                "unsupported document version {}",
                doc.version
            )));
        }
        Ok(doc)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Reconstructs the forecaster described by this document.
    pub fn build_forecaster(&self) -> Result<Box<dyn Forecaster>> {
        build_node(&self.forecaster)
    }
}

fn matrices(flat: &[Vec<f64>], rows: usize, cols: usize) -> Result<Vec<Array2<f64>>> {
    flat.iter()
        .map(|data| {
            if data.len() != rows * cols {
                return Err(Error::ModelDoc(format!(
                    "matrix payload {} != {rows}x{cols}",
                    data.len()
                )));
            }
            Array2::from_shape_vec((rows, cols), data.clone())
                .map_err(|e| Error::ModelDoc(e.to_string()))
        })
        .collect()
}

fn vectors(flat: &[Vec<f64>], len: usize) -> Result<Vec<Array1<f64>>> {
    flat.iter()
        .map(|data| {
            if data.len() != len {
                return Err(Error::ModelDoc(format!(
                    "vector payload {} != {len}",
                    data.len()
                )));
            }
            Ok(Array1::from_vec(data.clone()))
        })
        .collect()
}

fn build_node(node: &ModelNode) -> Result<Box<dyn Forecaster>> {
    match node {
        ModelNode::Linear {
            lookback,
            horizon,
            weights,
            biases,
        } => {
            let model = LinearForecaster::from_parts(
                matrices(weights, *horizon, *lookback)?,
                vectors(biases, *horizon)?,
            )?;
            Ok(Box::new(model))
        }
        ModelNode::Dlinear {
            lookback,
            horizon,
            kernel,
            trend_weights,
            trend_biases,
            seasonal_weights,
            seasonal_biases,
        } => {
            let model = DLinearForecaster::from_parts(
                *kernel,
                matrices(trend_weights, *horizon, *lookback)?,
                vectors(trend_biases, *horizon)?,
                matrices(seasonal_weights, *horizon, *lookback)?,
                vectors(seasonal_biases, *horizon)?,
            )?;
            Ok(Box::new(model))
        }
        ModelNode::Norm { epsilon, inner } => {
            if *epsilon <= 0.0 {
                return Err(Error::ModelDoc(format!("epsilon {epsilon} must be positive")));
            }
            Ok(Box::new(NormWrapper::new(build_node(inner)?, *epsilon)))
        }
    }
}

impl GcmNode {
    pub fn from_gcm(gcm: &Gcm) -> Self {
        Self {
            dim: gcm.dim(),
            vars: gcm.vars(),
            w: gcm.w.iter().map(|m| m.iter().copied().collect()).collect(),
            b: gcm.b.iter().copied().collect(),
            alpha: gcm.alpha.to_vec(),
        }
    }

    pub fn build(&self) -> Result<Gcm> {
        let mut gcm = Gcm::new(self.dim, self.vars, 0.0);
        if self.w.len() != self.vars || self.b.len() != self.dim * self.vars {
            return Err(Error::ModelDoc("calibration payload shape mismatch".into()));
        }
        let mut flat = Vec::with_capacity(gcm.flat_len());
        for w in &self.w {
            if w.len() != self.dim * self.dim {
                return Err(Error::ModelDoc("calibration matrix shape mismatch".into()));
            }
            flat.extend(w.iter());
        }
        flat.extend(self.b.iter());
        if self.alpha.len() != self.vars {
            return Err(Error::ModelDoc("alpha length mismatch".into()));
        }
        flat.extend(self.alpha.iter());
        gcm.load_flat(&flat)?;
        Ok(gcm)
    }
}

/// Canonical serialized form of a forecaster's parameters, used to assert the
/// frozen contract (identical before and after an adaptation run).
pub fn params_fingerprint(model: &dyn Forecaster) -> String {
    serde_json::to_string(&model.to_node()).expect("model node serializes")
}
