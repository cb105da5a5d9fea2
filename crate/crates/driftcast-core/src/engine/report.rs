//! Run reports and per-window error traces.

use serde::Serialize;
use std::path::Path;

use super::{BatchLog, Metrics, PredictionRecord, RunConfig, TtaLedger};
use crate::error::Result;
use crate::io::write_atomic;
use crate::timeseries::TimeSeries;

pub const REPORT_VERSION: u32 = 1;

/// JSON run report: config echo, baseline and adapted metrics, and the
/// per-batch event log. Serialization is deterministic given the inputs.
#[derive(Debug, Serialize)]
pub struct RunReport<'a> {
    pub version: u32,
    pub data_path: Option<&'a str>,
    pub model_path: Option<&'a str>,
    pub config: &'a RunConfig,
    pub baseline: &'a Metrics,
    pub adapted: Option<&'a Metrics>,
    /// adapted MSE / baseline MSE; below 1 means adaptation helped.
    pub mse_ratio: Option<f64>,
    pub pogt_min: Option<usize>,
    pub pogt_max: Option<usize>,
    pub adaptation_events: usize,
    pub pending_batches: usize,
    pub causality_faults: usize,
    pub batches: &'a [BatchLog],
}

impl<'a> RunReport<'a> {
    pub fn new(
        config: &'a RunConfig,
        baseline: &'a Metrics,
        adapted: Option<&'a Metrics>,
        ledger: &'a TtaLedger,
    ) -> Self {
        let pogts: Vec<usize> = ledger.batch_log.iter().map(|b| b.pogt).collect();
        Self {
            version: REPORT_VERSION,
            data_path: None,
            model_path: None,
            config,
            baseline,
            adapted,
            mse_ratio: adapted.map(|m| m.mse / baseline.mse),
            pogt_min: pogts.iter().min().copied(),
            pogt_max: pogts.iter().max().copied(),
            adaptation_events: ledger.batch_log.len(),
            pending_batches: ledger.pending_batches,
            causality_faults: ledger.causality_faults,
            batches: &ledger.batch_log,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json().as_bytes())
    }
}

/// Writes one row per (window, horizon step, variable):
/// `origin,horizon_step,variable,prediction,truth,adjusted_flag`.
pub fn write_trace(records: &[PredictionRecord], test: &TimeSeries, path: &Path) -> Result<()> {
    let mut text = String::from("origin,horizon_step,variable,prediction,truth,adjusted_flag\n");
    for record in records {
        let horizon = record.final_prediction.nrows();
        for step in 0..horizon {
            let t = record.origin + 1 + step;
            for var in 0..record.final_prediction.ncols() {
                let adjusted = record
                    .splice_start
                    .map(|start| step >= start)
                    .unwrap_or(false);
                text.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    record.origin,
                    step,
                    var,
                    record.final_prediction[[step, var]],
                    test.values()[[t, var]],
                    u8::from(adjusted),
                ));
            }
        }
    }
    write_atomic(path, text.as_bytes())
}
