//! Discrete Fourier analysis of look-back windows and POGT-length scheduling.
//!
//! Scheduling picks the variable with the highest spectral power, takes its
//! dominant frequency bin, and converts that to a partially-observed
//! ground-truth length `p = min(ceil(L / f*), H)`. The DFT is a direct
//! O(L^2) summation: window lengths are small and the definition doubles as
//! its own specification.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Spectral summary of one look-back window plus the scheduling decision.
#[derive(Debug, Clone)]
pub struct SpectrumReport {
    /// Per-variable magnitudes of DFT bins `1 ..= L/2` (DC and mirrored bins
    /// excluded), shape (L/2)×C.
    pub amplitudes: Array2<f64>,
    /// Variable with the highest total spectral power.
    pub selected_variable: usize,
    /// Dominant frequency bin of the selected variable, in `1 ..= L/2`.
    pub dominant_frequency: usize,
    /// Scheduled POGT length, `min(ceil(L / f*), H)`.
    pub pogt_length: usize,
}

/// Per-variable DFT magnitudes of a mean-centered window.
///
/// Each column is centered, then `|sum_t x_t exp(-2*pi*i*f*t/L)|` is returned
/// for bins `f = 1 ..= L/2`. Requires `L >= 4`.
pub fn dft_magnitudes(window: &Array2<f64>) -> Result<Array2<f64>> {
    let (len, vars) = window.dim();
    if len < 4 {
        return Err(Error::Shape(format!(
            "window length {len} too short for spectral analysis (need >= 4)"
        )));
    }
    let bins = len / 2;
    let mut out = Array2::zeros((bins, vars));
    for c in 0..vars {
        let col = window.column(c);
        let mean = col.sum() / len as f64;
        for f in 1..=bins {
            let mut re = 0.0;
            let mut im = 0.0;
            for (t, &v) in col.iter().enumerate() {
                let angle = -2.0 * std::f64::consts::PI * (f * t) as f64 / len as f64;
                let x = v - mean;
                re += x * angle.cos();
                im += x * angle.sin();
            }
            out[[f - 1, c]] = re.hypot(im);
        }
    }
    Ok(out)
}

/// Selects the dominant variable and frequency of a window and schedules the
/// POGT length.
///
/// Ties break toward the smaller index. A degenerate all-zero spectrum
/// (e.g. a constant window) falls back to bin 1, i.e. `p = min(L, H)`.
pub fn paas(window: &Array2<f64>, horizon: usize) -> Result<SpectrumReport> {
    if horizon == 0 {
        return Err(Error::Shape("horizon must be positive".into()));
    }
    let amplitudes = dft_magnitudes(window)?;
    let len = window.nrows();
    let vars = window.ncols();

    let mut selected_variable = 0;
    let mut best_power = f64::NEG_INFINITY;
    for c in 0..vars {
        let power: f64 = amplitudes.column(c).iter().map(|m| m * m).sum();
        if power > best_power {
            best_power = power;
            selected_variable = c;
        }
    }

    let col = amplitudes.column(selected_variable);
    let mut dominant_frequency = 1;
    let mut best_mag = f64::NEG_INFINITY;
    for (i, &m) in col.iter().enumerate() {
        if m > best_mag {
            best_mag = m;
            dominant_frequency = i + 1;
        }
    }

    // A spectrum that is zero up to round-off carries no period information;
    // bin 1 yields the longest admissible POGT.
    let scale = window.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if best_mag <= 1e-9 * len as f64 * (1.0 + scale) {
        dominant_frequency = 1;
    }

    let period = len.div_ceil(dominant_frequency);
    let pogt_length = period.min(horizon).max(1);
    Ok(SpectrumReport {
        amplitudes,
        selected_variable,
        dominant_frequency,
        pogt_length,
    })
}
