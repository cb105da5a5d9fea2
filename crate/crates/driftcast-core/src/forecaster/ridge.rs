//! Closed-form ridge fit for the direct linear forecaster.
//!
//! Each (window, variable) pair contributes one sample: the look-back column
//! is the regressor, the horizon column the target. Solving the normal
//! equations on the bias-augmented design minimizes
//! `sum ||W x + b - y||^2 + lambda ||W||_F^2` (the bias is not penalized, so
//! `lambda -> inf` drives the weights to zero and the bias to the target
//! mean).

use ndarray::{Array1, Array2};

use super::{ChannelMode, LinearForecaster};
use crate::error::{Error, Result};
use crate::timeseries::WindowPair;

/// Fits a [`LinearForecaster`] by normal equations on the (L+1)-augmented
/// design.
///
/// At `lambda = 0` with rank-deficient data the system stays consistent; the
/// solver then returns a particular least-squares solution (free directions
/// pinned to zero) rather than failing, so noiseless data is always
/// interpolated exactly.
pub fn fit_ridge(
    windows: &[WindowPair],
    lambda: f64,
    mode: ChannelMode,
) -> Result<LinearForecaster> {
    if windows.is_empty() {
        return Err(Error::Shape("ridge fit needs at least one window".into()));
    }
    if lambda < 0.0 {
        return Err(Error::Shape(format!("lambda {lambda} must be nonnegative")));
    }
    let lookback = windows[0].lookback.nrows();
    let horizon = windows[0].horizon.nrows();
    let vars = windows[0].lookback.ncols();
    for w in windows {
        if w.lookback.dim() != (lookback, vars) || w.horizon.dim() != (horizon, vars) {
            return Err(Error::Shape("inconsistent window shapes".into()));
        }
    }

    let solve_bank = |cols: &mut dyn Iterator<Item = usize>| -> Result<(Array2<f64>, Array1<f64>)> {
        let dim = lookback + 1;
        let mut gram = Array2::zeros((dim, dim));
        let mut rhs = Array2::zeros((dim, horizon));
        let mut sample = Array1::zeros(dim);
        for c in cols {
            for w in windows {
                sample.slice_mut(ndarray::s![..lookback]).assign(&w.lookback.column(c));
                sample[lookback] = 1.0;
                for i in 0..dim {
                    let si = sample[i];
                    for j in i..dim {
                        gram[[i, j]] += si * sample[j];
                    }
                    for (h, &y) in w.horizon.column(c).iter().enumerate() {
                        rhs[[i, h]] += si * y;
                    }
                }
            }
        }
        for i in 0..dim {
            for j in 0..i {
                gram[[i, j]] = gram[[j, i]];
            }
        }
        // Penalize weights only, not the bias slot.
        for i in 0..lookback {
            gram[[i, i]] += lambda;
        }
        let solution = solve_psd_consistent(&gram, &rhs)?;
        let mut weight = Array2::zeros((horizon, lookback));
        let mut bias = Array1::zeros(horizon);
        for h in 0..horizon {
            for j in 0..lookback {
                weight[[h, j]] = solution[[j, h]];
            }
            bias[h] = solution[[lookback, h]];
        }
        Ok((weight, bias))
    };

    match mode {
        ChannelMode::Shared => {
            let (weight, bias) = solve_bank(&mut (0..vars))?;
            LinearForecaster::from_parts(vec![weight], vec![bias])
        }
        ChannelMode::PerVariable => {
            let mut weights = Vec::with_capacity(vars);
            let mut biases = Vec::with_capacity(vars);
            for c in 0..vars {
                let (weight, bias) = solve_bank(&mut std::iter::once(c))?;
                weights.push(weight);
                biases.push(bias);
            }
            LinearForecaster::from_parts(weights, biases)
        }
    }
}

/// Solves `G X = B` for symmetric positive semidefinite `G` via
/// diagonally-pivoted Cholesky.
///
/// Rank-deficient but consistent systems (normal equations always are) get a
/// particular solution with the non-pivoted coordinates set to zero. The
/// result is verified against the original system; failure of that check is
/// reported as a singular system.
fn solve_psd_consistent(gram: &Array2<f64>, rhs: &Array2<f64>) -> Result<Array2<f64>> {
    let dim = gram.nrows();
    let nrhs = rhs.ncols();
    let mut work = gram.clone();
    let mut perm: Vec<usize> = (0..dim).collect();
    let max_diag = (0..dim).fold(0.0f64, |acc, i| acc.max(gram[[i, i]]));
    let tol = max_diag * 1e-13 * dim as f64;

    // Pivoted Cholesky: work becomes L in its lower triangle under the
    // permutation; rank-deficient directions are skipped.
    let mut rank = dim;
    for k in 0..dim {
        let pivot = (k..dim)
            .max_by(|&a, &b| work[[a, a]].partial_cmp(&work[[b, b]]).unwrap())
            .unwrap();
        if work[[pivot, pivot]] <= tol {
            rank = k;
            break;
        }
        if pivot != k {
            perm.swap(k, pivot);
            swap_symmetric(&mut work, k, pivot);
        }
        let d = work[[k, k]].sqrt();
        work[[k, k]] = d;
        for i in k + 1..dim {
            work[[i, k]] /= d;
        }
        // Update the full trailing block so it stays symmetric; pivot swaps
        // read both triangles.
        for j in k + 1..dim {
            let ljk = work[[j, k]];
            for i in k + 1..dim {
                work[[i, j]] -= work[[i, k]] * ljk;
            }
        }
    }

    let mut solution = Array2::zeros((dim, nrhs));
    for col in 0..nrhs {
        // Forward substitution on the rank-sized leading block.
        let mut y = vec![0.0; rank];
        for i in 0..rank {
            let mut acc = rhs[[perm[i], col]];
            for j in 0..i {
                acc -= work[[i, j]] * y[j];
            }
            y[i] = acc / work[[i, i]];
        }
        // Back substitution; coordinates beyond the rank stay zero.
        let mut z = vec![0.0; dim];
        for i in (0..rank).rev() {
            let mut acc = y[i];
            for j in i + 1..rank {
                acc -= work[[j, i]] * z[j];
            }
            z[i] = acc / work[[i, i]];
        }
        for i in 0..dim {
            solution[[perm[i], col]] = z[i];
        }
    }

    // Consistency check on the original (unpermuted) system.
    let residual = gram.dot(&solution) - rhs;
    let scale = max_diag.max(1.0)
        * solution.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0)
        + rhs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for r in residual.iter() {
        if r.abs() > 1e-8 * scale {
            return Err(Error::SingularSystem(format!(
                "normal equations inconsistent: residual {r:.3e} at scale {scale:.3e}"
            )));
        }
    }
    Ok(solution)
}

fn swap_symmetric(m: &mut Array2<f64>, a: usize, b: usize) {
    let dim = m.nrows();
    for j in 0..dim {
        m.swap([a, j], [b, j]);
    }
    for i in 0..dim {
        m.swap([i, a], [i, b]);
    }
}
