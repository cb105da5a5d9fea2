//! Iterative pre-training with Adam and a cosine learning-rate schedule.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Forecaster;
use crate::error::{Error, Result};
use crate::optim::{AdamState, CosineSchedule};
use crate::timeseries::WindowPair;

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 64,
            lr: 1e-3,
            weight_decay: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub epochs_run: usize,
    pub best_val_mse: f64,
    pub final_train_mse: f64,
}

/// Trains the model in place by mini-batch MSE descent and restores the
/// parameter snapshot with the lowest validation MSE seen across epochs.
///
/// The learning rate follows a cosine schedule over epochs. When no
/// validation windows are supplied, snapshot selection falls back to the
/// epoch-end training MSE. Shuffling and all arithmetic are deterministic
/// under the seed.
pub fn fit_iterative(
    model: &mut dyn Forecaster,
    train_windows: &[WindowPair],
    val_windows: &[WindowPair],
    config: &TrainConfig,
) -> Result<TrainReport> {
    if train_windows.is_empty() {
        return Err(Error::Shape("training needs at least one window".into()));
    }
    if config.batch_size == 0 {
        return Err(Error::Shape("batch size must be positive".into()));
    }
    if config.epochs == 0 {
        let train_mse = mean_mse(model, train_windows)?;
        let val_mse = if val_windows.is_empty() {
            train_mse
        } else {
            mean_mse(model, val_windows)?
        };
        return Ok(TrainReport {
            epochs_run: 0,
            best_val_mse: val_mse,
            final_train_mse: train_mse,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut flat = model.params();
    let mut adam = AdamState::new(flat.len(), config.lr);
    adam.weight_decay = config.weight_decay;
    let schedule = CosineSchedule {
        base_lr: config.lr,
        total_steps: config.epochs,
    };

    let mut order: Vec<usize> = (0..train_windows.len()).collect();
    let mut best_val = f64::INFINITY;
    let mut best_snapshot = flat.clone();
    let elems_per_window =
        (model.horizon() * train_windows[0].horizon.ncols()) as f64;

    for epoch in 0..config.epochs {
        adam.lr = schedule.lr_at(epoch);
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            let norm = 1.0 / (chunk.len() as f64 * elems_per_window);
            let mut grads = vec![0.0; flat.len()];
            let mut batch_loss = 0.0;
            for &idx in chunk {
                let window = &train_windows[idx];
                let pred = model.predict(&window.lookback)?;
                let err = &pred - &window.horizon;
                batch_loss += err.iter().map(|e| e * e).sum::<f64>() * norm;
                let upstream = err.mapv(|e| 2.0 * e * norm);
                for (g, d) in grads
                    .iter_mut()
                    .zip(model.param_grads(&window.lookback, &upstream)?)
                {
                    *g += d;
                }
            }
            if !batch_loss.is_finite() {
                return Err(Error::Divergence(format!(
                    "batch loss {batch_loss} at epoch {epoch}"
                )));
            }
            adam.step(&mut flat, &grads)?;
            model.set_params(&flat)?;
        }
        let val_mse = if val_windows.is_empty() {
            mean_mse(model, train_windows)?
        } else {
            mean_mse(model, val_windows)?
        };
        if val_mse < best_val {
            best_val = val_mse;
            best_snapshot.copy_from_slice(&flat);
        }
    }

    model.set_params(&best_snapshot)?;
    Ok(TrainReport {
        epochs_run: config.epochs,
        best_val_mse: best_val,
        final_train_mse: mean_mse(model, train_windows)?,
    })
}

/// Mean squared error over every element of every window.
pub fn mean_mse(model: &dyn Forecaster, windows: &[WindowPair]) -> Result<f64> {
    if windows.is_empty() {
        return Ok(f64::NAN);
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for w in windows {
        let pred = model.predict(&w.lookback)?;
        total += pred
            .iter()
            .zip(w.horizon.iter())
            .map(|(p, y)| (p - y) * (p - y))
            .sum::<f64>();
        count += pred.len();
    }
    Ok(total / count as f64)
}
