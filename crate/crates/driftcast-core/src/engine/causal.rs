//! Temporal access guard for replayed test streams.
//!
//! Every read the adaptation loop performs goes through this wrapper, which
//! records a fault whenever a requested row lies beyond the current stream
//! time. A clean run reports zero faults; tests assert on the counter.

use ndarray::Array2;
use std::cell::Cell;

use crate::timeseries::TimeSeries;

pub struct CausalSeries<'a> {
    series: &'a TimeSeries,
    now: Cell<usize>,
    faults: Cell<usize>,
}

impl<'a> CausalSeries<'a> {
    /// Starts with nothing observed; `advance` moves the clock forward.
    pub fn new(series: &'a TimeSeries) -> Self {
        Self {
            series,
            now: Cell::new(0),
            faults: Cell::new(0),
        }
    }

    /// A guard with the whole series already observed (end-of-run scoring).
    pub fn fully_observed(series: &'a TimeSeries) -> Self {
        let guard = Self::new(series);
        guard.advance(series.len() - 1);
        guard
    }

    pub fn series(&self) -> &TimeSeries {
        self.series
    }

    pub fn advance(&self, t: usize) {
        if t > self.now.get() {
            self.now.set(t);
        }
    }

    pub fn now(&self) -> usize {
        self.now.get()
    }

    pub fn faults(&self) -> usize {
        self.faults.get()
    }

    /// Rows `lo ..= hi` (inclusive), faulting if `hi` is still in the future.
    pub fn rows(&self, lo: usize, hi: usize) -> Array2<f64> {
        if hi > self.now.get() {
            self.faults.set(self.faults.get() + 1);
        }
        self.series
            .values()
            .slice(ndarray::s![lo..=hi, ..])
            .to_owned()
    }

    /// The look-back window ending at `t`.
    pub fn lookback(&self, t: usize, len: usize) -> Array2<f64> {
        self.rows(t + 1 - len, t)
    }

    /// The horizon following origin `t`.
    pub fn horizon(&self, t: usize, len: usize) -> Array2<f64> {
        self.rows(t + 1, t + len)
    }
}
