//! The streaming adaptation loop.
//!
//! Test windows are replayed in origin order with stride 1. At each batch
//! boundary the anchor window's dominant period fixes the partially-observed
//! ground-truth length `p`; the batch collects the `p+1` windows at origins
//! `t* ..= t*+p`. When the batch completes (stream time `t*+p`), one
//! adaptation event runs on the calibration modules, the batch's predictions
//! are recomputed, and rows beyond time `t*+p` are spliced with the adapted
//! values. Batches whose full ground truth has since arrived feed the full
//! loss term of later events. The source forecaster stays frozen throughout;
//! windows that cannot complete a final batch are recorded unadapted.

mod causal;
mod loss;
mod metrics;
pub mod report;

pub use causal::CausalSeries;
pub use loss::{
    adaptation_loss, adaptation_loss_and_grads, flatten_pair, load_pair, AdaptationBatch,
};
pub use metrics::{score, Metrics};

use ndarray::Array2;
use serde::Serialize;
use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::forecaster::Forecaster;
use crate::gcm::Gcm;
use crate::optim::AdamState;
use crate::spectral::paas;
use crate::timeseries::TimeSeries;

/// Configuration of one streaming run.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub lookback: usize,
    pub horizon: usize,
    pub tta_lr: f64,
    pub alpha_init: f64,
    pub steps_per_event: usize,
    pub enable_full_loss: bool,
    pub enable_adjustment: bool,
    /// When false the run is the frozen baseline: raw forecaster, no
    /// calibration, no adaptation.
    pub enable_tta: bool,
    /// Replaces periodicity-aware scheduling with a constant POGT length.
    pub fixed_pogt: Option<usize>,
    pub seed: u64,
}

impl RunConfig {
    pub fn new(lookback: usize, horizon: usize) -> Self {
        Self {
            lookback,
            horizon,
            tta_lr: 1e-3,
            alpha_init: 0.1,
            steps_per_event: 1,
            enable_full_loss: true,
            enable_adjustment: true,
            enable_tta: true,
            fixed_pogt: None,
            seed: 0,
        }
    }
}

/// Per-window outcome of a run.
#[derive(Debug, Clone)]
pub struct PredictionRecord {
    pub origin: usize,
    pub batch_id: usize,
    /// Calibrated prediction made with the module state current at arrival.
    pub arrival_prediction: Array2<f64>,
    /// Arrival prediction with rows past the batch's adaptation time replaced
    /// by the post-adaptation recomputation, when adjustment ran.
    pub final_prediction: Array2<f64>,
    pub adjusted: bool,
    /// First horizon row taken from the adapted recomputation.
    pub splice_start: Option<usize>,
}

/// One adaptation event in the run log.
#[derive(Debug, Clone, Serialize)]
pub struct BatchLog {
    pub batch_id: usize,
    pub t_star: usize,
    pub pogt: usize,
    pub loss_partial: f64,
    pub loss_full: Option<f64>,
    pub post_loss_partial: f64,
    pub post_loss_full: Option<f64>,
}

/// Streaming state left over after a run: per-window records, the event log,
/// final calibration modules, optimizer state, and the causality counter.
pub struct TtaLedger {
    pub records: Vec<PredictionRecord>,
    pub batch_log: Vec<BatchLog>,
    pub gcm_in: Option<Gcm>,
    pub gcm_out: Option<Gcm>,
    pub optimizer: Option<AdamState>,
    /// Batches still awaiting full ground truth when the stream ended.
    pub pending_batches: usize,
    pub causality_faults: usize,
}

struct ArrivedWindow {
    origin: usize,
    lookback: Array2<f64>,
}

struct BuildingBatch {
    id: usize,
    t_star: usize,
    pogt: usize,
    windows: Vec<ArrivedWindow>,
}

struct PendingBatch {
    windows: Vec<ArrivedWindow>,
    full_gt_ready_at: usize,
}

/// Splices an adapted recomputation into an arrival prediction.
///
/// For the batch member at offset `k` (0-based, anchor is 0) with POGT length
/// `p`, horizon row `j` covers absolute time `t*+k+1+j`: rows at times up to
/// `t*+p` keep the arrival value, later rows take the adapted one. `k = p`
/// replaces the whole prediction.
pub fn splice_adjusted(
    arrival: &Array2<f64>,
    adapted: &Array2<f64>,
    pogt: usize,
    k: usize,
) -> Array2<f64> {
    debug_assert_eq!(arrival.dim(), adapted.dim());
    let keep = pogt.saturating_sub(k);
    let mut out = arrival.clone();
    for i in keep..arrival.nrows() {
        for c in 0..arrival.ncols() {
            out[[i, c]] = adapted[[i, c]];
        }
    }
    out
}

/// Replays the test series and returns metrics over final predictions plus
/// the full ledger.
pub fn run_stream(
    forecaster: &dyn Forecaster,
    test: &TimeSeries,
    config: &RunConfig,
) -> Result<(Metrics, TtaLedger)> {
    let lookback = config.lookback;
    let horizon = config.horizon;
    if forecaster.lookback() != lookback || forecaster.horizon() != horizon {
        return Err(Error::Shape(format!(
            "run configured for L={lookback}, H={horizon} but model has L={}, H={}",
            forecaster.lookback(),
            forecaster.horizon()
        )));
    }
    if test.len() < lookback + horizon {
        return Err(Error::TooShort {
            required: lookback + horizon,
            actual: test.len(),
        });
    }
    if config.steps_per_event == 0 {
        return Err(Error::Shape("steps_per_event must be positive".into()));
    }
    if let Some(p) = config.fixed_pogt {
        if p == 0 {
            return Err(Error::Shape("fixed POGT length must be positive".into()));
        }
    }

    let vars = test.num_vars();
    let guard = CausalSeries::new(test);
    let last_origin = test.len() - horizon - 1;

    if !config.enable_tta {
        let mut records = Vec::with_capacity(last_origin + 2 - lookback);
        for t in (lookback - 1)..=last_origin {
            guard.advance(t);
            let x = guard.lookback(t, lookback);
            let prediction = forecaster.predict(&x)?;
            records.push(PredictionRecord {
                origin: t,
                batch_id: 0,
                arrival_prediction: prediction.clone(),
                final_prediction: prediction,
                adjusted: false,
                splice_start: None,
            });
        }
        guard.advance(test.len() - 1);
        let metrics = metrics::score_guarded(&records, &guard)?;
        return Ok((
            metrics,
            TtaLedger {
                records,
                batch_log: Vec::new(),
                gcm_in: None,
                gcm_out: None,
                optimizer: None,
                pending_batches: 0,
                causality_faults: guard.faults(),
            },
        ));
    }

    let mut gcm_in = Gcm::new(lookback, vars, config.alpha_init);
    let mut gcm_out = Gcm::new(horizon, vars, config.alpha_init);
    let mut optimizer = AdamState::new(gcm_in.flat_len() + gcm_out.flat_len(), config.tta_lr);

    let mut records: Vec<PredictionRecord> = Vec::with_capacity(last_origin + 2 - lookback);
    let mut batch_log = Vec::new();
    let mut pending: VecDeque<PendingBatch> = VecDeque::new();
    let mut current: Option<BuildingBatch> = None;
    let mut next_batch_id = 0usize;
    let first_origin = lookback - 1;

    for t in first_origin..=last_origin {
        guard.advance(t);
        let x = guard.lookback(t, lookback);

        let batch = match current.as_mut() {
            Some(batch) => batch,
            None => {
                let pogt = match config.fixed_pogt {
                    Some(p) => p.min(horizon),
                    None => paas(&x, horizon)?.pogt_length,
                };
                let id = next_batch_id;
                next_batch_id += 1;
                current = Some(BuildingBatch {
                    id,
                    t_star: t,
                    pogt,
                    windows: Vec::with_capacity(pogt + 1),
                });
                current.as_mut().unwrap()
            }
        };

        let arrival = gcm_out.forward(&forecaster.predict(&gcm_in.forward(&x)?)?)?;
        records.push(PredictionRecord {
            origin: t,
            batch_id: batch.id,
            arrival_prediction: arrival.clone(),
            final_prediction: arrival,
            adjusted: false,
            splice_start: None,
        });
        batch.windows.push(ArrivedWindow {
            origin: t,
            lookback: x,
        });

        if t == batch.t_star + batch.pogt {
            let batch = current.take().unwrap();
            adapt_event(
                forecaster,
                &guard,
                &mut gcm_in,
                &mut gcm_out,
                &mut optimizer,
                &mut pending,
                &mut batch_log,
                &batch,
                config,
            )
            .map_err(|e| annotate_failure(e, t))?;
            if config.enable_adjustment {
                adjust_predictions(
                    forecaster,
                    &gcm_in,
                    &gcm_out,
                    &batch,
                    &mut records,
                    first_origin,
                )?;
            }
            if config.enable_full_loss {
                pending.push_back(PendingBatch {
                    full_gt_ready_at: batch.t_star + batch.pogt + horizon,
                    windows: batch.windows,
                });
            }
        }
    }

    guard.advance(test.len() - 1);
    let metrics = metrics::score_guarded(&records, &guard)?;
    Ok((
        metrics,
        TtaLedger {
            records,
            batch_log,
            gcm_in: Some(gcm_in),
            gcm_out: Some(gcm_out),
            optimizer: Some(optimizer),
            pending_batches: pending.len(),
            causality_faults: guard.faults(),
        },
    ))
}

/// One adaptation event: build the loss inputs, take the configured number of
/// optimizer steps on both calibration modules, and log pre/post losses.
#[allow(clippy::too_many_arguments)]
fn adapt_event(
    forecaster: &dyn Forecaster,
    guard: &CausalSeries,
    gcm_in: &mut Gcm,
    gcm_out: &mut Gcm,
    optimizer: &mut AdamState,
    pending: &mut VecDeque<PendingBatch>,
    batch_log: &mut Vec<BatchLog>,
    batch: &BuildingBatch,
    config: &RunConfig,
) -> Result<()> {
    let now = batch.t_star + batch.pogt;
    let pogt = guard.rows(batch.t_star + 1, batch.t_star + batch.pogt);
    let anchor = &batch.windows[0].lookback;

    // Most recent pending batch whose full horizon has arrived feeds the full
    // loss; every fully-observed batch is dropped so replay cost stays flat.
    let full_batch = if config.enable_full_loss {
        let mut ready: Vec<PendingBatch> = Vec::new();
        while let Some(front) = pending.front() {
            if front.full_gt_ready_at <= now {
                ready.push(pending.pop_front().unwrap());
            } else {
                break;
            }
        }
        ready.pop()
    } else {
        None
    };
    let full_data = match &full_batch {
        None => None,
        Some(past) => {
            let lookbacks: Vec<Array2<f64>> =
                past.windows.iter().map(|w| w.lookback.clone()).collect();
            let horizons: Vec<Array2<f64>> = past
                .windows
                .iter()
                .map(|w| guard.horizon(w.origin, forecaster.horizon()))
                .collect();
            Some((lookbacks, horizons))
        }
    };

    type OwnedPairs = Option<(Vec<Array2<f64>>, Vec<Array2<f64>>)>;
    fn make_batch<'a>(
        anchor: &'a Array2<f64>,
        pogt: &'a Array2<f64>,
        full: &'a OwnedPairs,
    ) -> AdaptationBatch<'a> {
        AdaptationBatch {
            anchor_lookback: anchor,
            pogt,
            full: full.as_ref().map(|(x, y)| (x.as_slice(), y.as_slice())),
        }
    }

    let mut first_losses = None;
    for _ in 0..config.steps_per_event {
        let (partial, full, grads) = adaptation_loss_and_grads(
            forecaster,
            gcm_in,
            gcm_out,
            &make_batch(anchor, &pogt, &full_data),
        )?;
        if first_losses.is_none() {
            first_losses = Some((partial, full));
        }
        let mut flat = flatten_pair(gcm_in, gcm_out);
        optimizer.step(&mut flat, &grads)?;
        load_pair(gcm_in, gcm_out, &flat)?;
    }
    let (partial, full) = first_losses.expect("at least one step");
    let (post_partial, post_full) = adaptation_loss(
        forecaster,
        gcm_in,
        gcm_out,
        &make_batch(anchor, &pogt, &full_data),
    )?;
    batch_log.push(BatchLog {
        batch_id: batch.id,
        t_star: batch.t_star,
        pogt: batch.pogt,
        loss_partial: partial,
        loss_full: full,
        post_loss_partial: post_partial,
        post_loss_full: post_full,
    });
    Ok(())
}

/// Recomputes the batch's predictions with post-adaptation parameters and
/// splices them into the recorded arrivals.
fn adjust_predictions(
    forecaster: &dyn Forecaster,
    gcm_in: &Gcm,
    gcm_out: &Gcm,
    batch: &BuildingBatch,
    records: &mut [PredictionRecord],
    first_origin: usize,
) -> Result<()> {
    for (k, window) in batch.windows.iter().enumerate() {
        let adapted =
            gcm_out.forward(&forecaster.predict(&gcm_in.forward(&window.lookback)?)?)?;
        let record = &mut records[window.origin - first_origin];
        debug_assert_eq!(record.origin, window.origin);
        record.final_prediction =
            splice_adjusted(&record.arrival_prediction, &adapted, batch.pogt, k);
        record.adjusted = true;
        record.splice_start = Some(batch.pogt - k);
    }
    Ok(())
}

fn annotate_failure(err: Error, t: usize) -> Error {
    match err {
        Error::NonFiniteGradient(idx) => {
            Error::Divergence(format!("non-finite gradient (flat index {idx}) at stream time {t}"))
        }
        other => other,
    }
}
