//! Time-series container, chronological splitting, and sliding-window extraction.
//!
//! A [`TimeSeries`] is a T×C matrix of finite reals with column names. Splits
//! are contiguous, ordered, and non-overlapping; windows pair an L-step
//! look-back with the H-step horizon that follows it. Everything here is
//! immutable after construction and safe to share across runs.

use ndarray::{s, Array2};

use crate::error::{Error, Result};

/// A length-T, C-variable real-valued series.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Array2<f64>,
    names: Vec<String>,
}

impl TimeSeries {
    /// Builds a series from a T×C matrix, rejecting non-finite entries.
    pub fn new(values: Array2<f64>, names: Vec<String>) -> Result<Self> {
        let (t, c) = values.dim();
        if t == 0 || c == 0 {
            return Err(Error::Shape(format!(
                "series must have T >= 1 and C >= 1, got {t}x{c}"
            )));
        }
        if names.len() != c {
            return Err(Error::Shape(format!(
                "{} column names for {c} columns",
                names.len()
            )));
        }
        for ((row, col), &v) in values.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFiniteValue {
                    row: row + 1,
                    col: col + 1,
                });
            }
        }
        Ok(Self { values, names })
    }

    /// Builds a series with generated column names `v0, v1, ...`.
    pub fn from_values(values: Array2<f64>) -> Result<Self> {
        let names = (0..values.ncols()).map(|c| format!("v{c}")).collect();
        Self::new(values, names)
    }

    /// Number of time steps T.
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    /// Number of variables C.
    pub fn num_vars(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Rows `t-len+1 ..= t` as an owned matrix.
    pub(crate) fn rows_ending_at(&self, t: usize, len: usize) -> Array2<f64> {
        self.values.slice(s![t + 1 - len..=t, ..]).to_owned()
    }
}

/// Chronological train/validation/test fractions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl SplitSpec {
    pub fn new(train: f64, val: f64, test: f64) -> Result<Self> {
        for (name, r) in [("train", train), ("val", val), ("test", test)] {
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::Ratio(format!("{name} ratio {r} not in (0, 1)")));
            }
        }
        let sum = train + val + test;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Ratio(format!("ratios sum to {sum}, expected 1")));
        }
        Ok(Self { train, val, test })
    }
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train: 0.6,
            val: 0.2,
            test: 0.2,
        }
    }
}

/// Splits a series into contiguous train/val/test segments in time order.
///
/// Train and validation lengths are `floor(T * ratio)`; the remainder goes to
/// the test segment so the evaluated stream is never shortened. Concatenating
/// the three segments reproduces the input exactly.
pub fn chronological_split(
    series: &TimeSeries,
    spec: &SplitSpec,
) -> Result<(TimeSeries, TimeSeries, TimeSeries)> {
    let t = series.len();
    // The 1e-9 nudge keeps floor() from dropping a step when T * ratio lands
    // a few ulps below an integer (e.g. 100 * 0.6).
    let n_train = (t as f64 * spec.train + 1e-9).floor() as usize;
    let n_val = (t as f64 * spec.val + 1e-9).floor() as usize;
    if n_train + n_val >= t {
        return Err(Error::TooShort {
            required: n_train + n_val + 1,
            actual: t,
        });
    }
    let n_test = t - n_train - n_val;
    if n_train == 0 || n_val == 0 || n_test == 0 {
        return Err(Error::TooShort {
            required: 1,
            actual: 0,
        });
    }
    let segment = |lo: usize, hi: usize| {
        TimeSeries::new(
            series.values.slice(s![lo..hi, ..]).to_owned(),
            series.names.clone(),
        )
    };
    Ok((
        segment(0, n_train)?,
        segment(n_train, n_train + n_val)?,
        segment(n_train + n_val, t)?,
    ))
}

/// One (look-back, horizon) sample anchored at origin time `t`.
///
/// The look-back holds rows `t-L+1 ..= t` and the horizon rows
/// `t+1 ..= t+H` of the parent series (0-based).
#[derive(Debug, Clone, PartialEq)]
pub struct WindowPair {
    pub origin: usize,
    pub lookback: Array2<f64>,
    pub horizon: Array2<f64>,
}

/// Extracts sliding windows at origins `L-1, L-1+stride, ...` while the
/// horizon stays inside the series.
pub fn make_windows(
    series: &TimeSeries,
    lookback: usize,
    horizon: usize,
    stride: usize,
) -> Result<Vec<WindowPair>> {
    if lookback == 0 || horizon == 0 || stride == 0 {
        return Err(Error::Shape(
            "lookback, horizon, and stride must be positive".into(),
        ));
    }
    let t = series.len();
    if t < lookback + horizon {
        return Err(Error::TooShort {
            required: lookback + horizon,
            actual: t,
        });
    }
    let last_origin = t - horizon - 1;
    let mut out = Vec::with_capacity((t - lookback - horizon) / stride + 1);
    let mut origin = lookback - 1;
    while origin <= last_origin {
        out.push(WindowPair {
            origin,
            lookback: series.rows_ending_at(origin, lookback),
            horizon: series.values.slice(s![origin + 1..=origin + horizon, ..]).to_owned(),
        });
        origin += stride;
    }
    Ok(out)
}
