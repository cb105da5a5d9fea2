//! Forecast scoring over recorded predictions.

use serde::Serialize;

use super::causal::CausalSeries;
use super::PredictionRecord;
use crate::error::{Error, Result};
use crate::timeseries::TimeSeries;

/// Error summary over all recorded (prediction, truth) element pairs, plus
/// per-horizon-step curves.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Metrics {
    pub mse: f64,
    pub mae: f64,
    pub per_step_mse: Vec<f64>,
    pub per_step_mae: Vec<f64>,
    pub windows: usize,
    pub elements: usize,
}

/// Scores final (adjusted where applicable) predictions against the series.
pub fn score(records: &[PredictionRecord], test: &TimeSeries) -> Result<Metrics> {
    let guard = CausalSeries::fully_observed(test);
    score_guarded(records, &guard)
}

pub(super) fn score_guarded(
    records: &[PredictionRecord],
    guard: &CausalSeries,
) -> Result<Metrics> {
    if records.is_empty() {
        return Err(Error::OutOfRange("no prediction records to score".into()));
    }
    let horizon = records[0].final_prediction.nrows();
    let vars = records[0].final_prediction.ncols();
    let len = guard.series().len();
    let mut sq = vec![0.0; horizon];
    let mut abs = vec![0.0; horizon];
    for record in records {
        if record.origin + horizon > len - 1 {
            return Err(Error::OutOfRange(format!(
                "record at origin {} needs rows through {}, series has {len}",
                record.origin,
                record.origin + horizon
            )));
        }
        let truth = guard.horizon(record.origin, horizon);
        for i in 0..horizon {
            for c in 0..vars {
                let e = record.final_prediction[[i, c]] - truth[[i, c]];
                sq[i] += e * e;
                abs[i] += e.abs();
            }
        }
    }
    let per_row = (records.len() * vars) as f64;
    let elements = records.len() * horizon * vars;
    let mse = sq.iter().sum::<f64>() / elements as f64;
    let mae = abs.iter().sum::<f64>() / elements as f64;
    Ok(Metrics {
        mse,
        mae,
        per_step_mse: sq.iter().map(|s| s / per_row).collect(),
        per_step_mae: abs.iter().map(|a| a / per_row).collect(),
        windows: records.len(),
        elements,
    })
}
