//! Gated calibration module: a residual, per-variable temporal map with a
//! tanh gate.
//!
//! For input column `z_c` the forward map is
//! `z_c + tanh(alpha_c) * (W^c z_c + b_c)`. One module sits at each end of
//! the frozen forecaster: the input module operates on look-back windows
//! (dim = L), the output module on predictions (dim = H). `W` and `b` start
//! at zero so a fresh module is exactly the identity; `alpha` starts at a
//! small searched constant and is adapted jointly with `W` and `b`.
//!
//! Gradients are hand-derived closed forms. With `g_c = tanh(alpha_c)` and
//! residual `r_c = W^c z_c + b_c`, the reverse-mode rules for a scalar loss
//! with upstream `u_c` are:
//!
//! - `dW^c = g_c * u_c z_c^T`
//! - `db_c = g_c * u_c`
//! - `dalpha_c = (1 - g_c^2) * <u_c, r_c>`
//! - `dz_c = u_c + g_c * (W^c)^T u_c`

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Calibration parameters for one end of the forecaster.
#[derive(Debug, Clone, PartialEq)]
pub struct Gcm {
    dim: usize,
    vars: usize,
    /// Per-variable temporal calibration, `vars` matrices of dim×dim.
    pub w: Vec<Array2<f64>>,
    /// Bias, dim×vars.
    pub b: Array2<f64>,
    /// Gating vector, one entry per variable.
    pub alpha: Array1<f64>,
}

/// Parameter gradients with the same shapes as [`Gcm`].
#[derive(Debug, Clone)]
pub struct GcmGradients {
    pub dw: Vec<Array2<f64>>,
    pub db: Array2<f64>,
    pub dalpha: Array1<f64>,
}

impl Gcm {
    /// A fresh module: `W = 0`, `b = 0`, `alpha` filled with `alpha_init`.
    /// Forward equals the identity on any input.
    pub fn new(dim: usize, vars: usize, alpha_init: f64) -> Self {
        Self {
            dim,
            vars,
            w: (0..vars).map(|_| Array2::zeros((dim, dim))).collect(),
            b: Array2::zeros((dim, vars)),
            alpha: Array1::from_elem(vars, alpha_init),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    fn check_shape(&self, z: &Array2<f64>, what: &str) -> Result<()> {
        if z.dim() != (self.dim, self.vars) {
            return Err(Error::Shape(format!(
                "{what} is {}x{}, module expects {}x{}",
                z.nrows(),
                z.ncols(),
                self.dim,
                self.vars
            )));
        }
        Ok(())
    }

    /// Calibrated output, column-wise `z + tanh(alpha) * (W z + b)`.
    pub fn forward(&self, z: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_shape(z, "input")?;
        let mut out = z.clone();
        for c in 0..self.vars {
            let gate = self.alpha[c].tanh();
            let zc = z.column(c);
            let mut residual = self.w[c].dot(&zc);
            residual += &self.b.column(c);
            residual *= gate;
            let mut col = out.column_mut(c);
            col += &residual;
        }
        Ok(out)
    }

    /// Gradients of `<upstream, forward(z)>` with respect to the parameters
    /// and the input.
    pub fn backward(
        &self,
        z: &Array2<f64>,
        upstream: &Array2<f64>,
    ) -> Result<(GcmGradients, Array2<f64>)> {
        self.check_shape(z, "input")?;
        self.check_shape(upstream, "upstream")?;
        let mut dw = Vec::with_capacity(self.vars);
        let mut db = Array2::zeros((self.dim, self.vars));
        let mut dalpha = Array1::zeros(self.vars);
        let mut dz = upstream.clone();
        for c in 0..self.vars {
            let gate = self.alpha[c].tanh();
            let zc = z.column(c);
            let uc = upstream.column(c);

            let mut dwc = Array2::zeros((self.dim, self.dim));
            for (i, &u) in uc.iter().enumerate() {
                let scaled = gate * u;
                for (j, &zv) in zc.iter().enumerate() {
                    dwc[[i, j]] = scaled * zv;
                }
            }
            dw.push(dwc);

            db.column_mut(c).assign(&(&uc * gate));

            let mut residual = self.w[c].dot(&zc);
            residual += &self.b.column(c);
            dalpha[c] = (1.0 - gate * gate) * uc.dot(&residual);

            let back = self.w[c].t().dot(&uc);
            let mut col = dz.column_mut(c);
            col.scaled_add(gate, &back);
        }
        Ok((GcmGradients { dw, db, dalpha }, dz))
    }

    /// Number of scalars in the flat parameter layout.
    pub fn flat_len(&self) -> usize {
        self.vars * self.dim * self.dim + self.dim * self.vars + self.vars
    }

    /// Appends parameters in the fixed order: each `W^c` row-major, then `b`
    /// row-major, then `alpha`. [`GcmGradients::append_flat`] uses the same
    /// order.
    pub fn append_flat(&self, out: &mut Vec<f64>) {
        for wc in &self.w {
            out.extend(wc.iter());
        }
        out.extend(self.b.iter());
        out.extend(self.alpha.iter());
    }

    /// Loads parameters from the flat layout produced by [`Gcm::append_flat`].
    pub fn load_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.flat_len() {
            return Err(Error::Shape(format!(
                "flat parameter length {} != {}",
                flat.len(),
                self.flat_len()
            )));
        }
        let mut it = flat.iter();
        for wc in &mut self.w {
            for v in wc.iter_mut() {
                *v = *it.next().unwrap();
            }
        }
        for v in self.b.iter_mut() {
            *v = *it.next().unwrap();
        }
        for v in self.alpha.iter_mut() {
            *v = *it.next().unwrap();
        }
        Ok(())
    }
}

impl GcmGradients {
    pub fn append_flat(&self, out: &mut Vec<f64>) {
        for dwc in &self.dw {
            out.extend(dwc.iter());
        }
        out.extend(self.db.iter());
        out.extend(self.dalpha.iter());
    }

    /// Adds this gradient into a flat accumulator with the layout of
    /// [`Gcm::append_flat`].
    pub fn add_into(&self, acc: &mut [f64]) {
        let mut idx = 0;
        for dwc in &self.dw {
            for &v in dwc.iter() {
                acc[idx] += v;
                idx += 1;
            }
        }
        for &v in self.db.iter() {
            acc[idx] += v;
            idx += 1;
        }
        for &v in self.dalpha.iter() {
            acc[idx] += v;
            idx += 1;
        }
        debug_assert_eq!(idx, acc.len());
    }
}
