//! The adaptation loss and its exact gradients with respect to calibration
//! parameters.
//!
//! The loss has two parts. The partial term compares the first `p` horizon
//! rows of the anchor window's calibrated prediction against the
//! partially-observed ground truth. The full term, when a past mini-batch has
//! its complete ground truth, compares freshly recomputed calibrated
//! predictions of all that batch's windows against their full horizons. Both
//! terms are means over every element they cover, and the total is their sum.
//!
//! Gradients chain output-calibration backward, then the frozen forecaster's
//! input VJP, then input-calibration backward. The forecaster's own
//! parameters never receive gradients.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::forecaster::Forecaster;
use crate::gcm::Gcm;

/// Paired look-backs and full horizons of one past mini-batch.
pub type PairedWindows<'a> = (&'a [Array2<f64>], &'a [Array2<f64>]);

/// Inputs of one adaptation event.
pub struct AdaptationBatch<'a> {
    /// Look-back of the anchor window `X_{t*}`.
    pub anchor_lookback: &'a Array2<f64>,
    /// First `p` rows of the anchor's horizon, shape p×C.
    pub pogt: &'a Array2<f64>,
    /// Look-backs and full horizons of the most recent past mini-batch whose
    /// ground truth is complete, if any.
    pub full: Option<PairedWindows<'a>>,
}

/// Losses of [`adaptation_loss_and_grads`] without the gradient work.
pub fn adaptation_loss(
    forecaster: &dyn Forecaster,
    gcm_in: &Gcm,
    gcm_out: &Gcm,
    batch: &AdaptationBatch,
) -> Result<(f64, Option<f64>)> {
    let calibrated = |x: &Array2<f64>| -> Result<Array2<f64>> {
        gcm_out.forward(&forecaster.predict(&gcm_in.forward(x)?)?)
    };

    let pred = calibrated(batch.anchor_lookback)?;
    let p = batch.pogt.nrows();
    check_pogt(&pred, batch.pogt)?;
    let n_partial = (p * pred.ncols()) as f64;
    let mut partial = 0.0;
    for i in 0..p {
        for c in 0..pred.ncols() {
            let e = pred[[i, c]] - batch.pogt[[i, c]];
            partial += e * e;
        }
    }
    partial /= n_partial;

    let full = match batch.full {
        None => None,
        Some((lookbacks, horizons)) => {
            let mut acc = 0.0;
            let mut count = 0usize;
            for (x, y) in lookbacks.iter().zip(horizons) {
                let pred = calibrated(x)?;
                acc += pred
                    .iter()
                    .zip(y.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>();
                count += pred.len();
            }
            Some(acc / count as f64)
        }
    };
    Ok((partial, full))
}

/// Computes the loss terms and the gradient of their sum with respect to the
/// flat `[input module | output module]` parameter layout.
pub fn adaptation_loss_and_grads(
    forecaster: &dyn Forecaster,
    gcm_in: &Gcm,
    gcm_out: &Gcm,
    batch: &AdaptationBatch,
) -> Result<(f64, Option<f64>, Vec<f64>)> {
    let in_len = gcm_in.flat_len();
    let mut grads = vec![0.0; in_len + gcm_out.flat_len()];

    type UpstreamBuilder<'u> = dyn FnMut(&Array2<f64>) -> (f64, Array2<f64>) + 'u;
    // Forward through both modules, build the loss upstream, then pull it
    // back through output module -> frozen forecaster -> input module.
    let mut backprop = |x: &Array2<f64>, make_upstream: &mut UpstreamBuilder| -> Result<f64> {
        let calibrated_in = gcm_in.forward(x)?;
        let pred = forecaster.predict(&calibrated_in)?;
        let calibrated_out = gcm_out.forward(&pred)?;
        let (loss, upstream) = make_upstream(&calibrated_out);
        let (out_grads, d_pred) = gcm_out.backward(&pred, &upstream)?;
        let d_calibrated_in = forecaster.vjp_input(&calibrated_in, &d_pred)?;
        let (in_grads, _) = gcm_in.backward(x, &d_calibrated_in)?;
        in_grads.add_into(&mut grads[..in_len]);
        out_grads.add_into(&mut grads[in_len..]);
        Ok(loss)
    };

    let p = batch.pogt.nrows();
    let pogt = batch.pogt;
    let partial = backprop(batch.anchor_lookback, &mut |pred| {
        let n = (p * pred.ncols()) as f64;
        let mut loss = 0.0;
        let mut upstream = Array2::zeros(pred.dim());
        for i in 0..p {
            for c in 0..pred.ncols() {
                let e = pred[[i, c]] - pogt[[i, c]];
                loss += e * e;
                upstream[[i, c]] = 2.0 * e / n;
            }
        }
        (loss / n, upstream)
    })?;

    let full = match batch.full {
        None => None,
        Some((lookbacks, horizons)) => {
            if lookbacks.len() != horizons.len() || lookbacks.is_empty() {
                return Err(Error::Shape("full-loss batch is malformed".into()));
            }
            let n = (lookbacks.len() * horizons[0].len()) as f64;
            let mut total = 0.0;
            for (x, y) in lookbacks.iter().zip(horizons) {
                total += backprop(x, &mut |pred| {
                    let mut loss = 0.0;
                    let mut upstream = Array2::zeros(pred.dim());
                    for (idx, (a, b)) in pred.iter().zip(y.iter()).enumerate() {
                        let e = a - b;
                        loss += e * e;
                        upstream[[idx / pred.ncols(), idx % pred.ncols()]] = 2.0 * e / n;
                    }
                    (loss / n, upstream)
                })?;
            }
            Some(total)
        }
    };

    Ok((partial, full, grads))
}

fn check_pogt(pred: &Array2<f64>, pogt: &Array2<f64>) -> Result<()> {
    if pogt.nrows() == 0 || pogt.nrows() > pred.nrows() || pogt.ncols() != pred.ncols() {
        return Err(Error::Shape(format!(
            "POGT is {}x{} against a {}x{} prediction",
            pogt.nrows(),
            pogt.ncols(),
            pred.nrows(),
            pred.ncols()
        )));
    }
    Ok(())
}

/// Snapshot of both modules in the flat layout the optimizer steps over.
pub fn flatten_pair(gcm_in: &Gcm, gcm_out: &Gcm) -> Vec<f64> {
    let mut flat = Vec::with_capacity(gcm_in.flat_len() + gcm_out.flat_len());
    gcm_in.append_flat(&mut flat);
    gcm_out.append_flat(&mut flat);
    flat
}

/// Writes a flat snapshot back into both modules.
pub fn load_pair(gcm_in: &mut Gcm, gcm_out: &mut Gcm, flat: &[f64]) -> Result<()> {
    let split = gcm_in.flat_len();
    if flat.len() != split + gcm_out.flat_len() {
        return Err(Error::Shape("flat pair length mismatch".into()));
    }
    gcm_in.load_flat(&flat[..split])?;
    gcm_out.load_flat(&flat[split..])?;
    Ok(())
}
