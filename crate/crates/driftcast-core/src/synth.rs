//! Deterministic synthetic series: per-variable sinusoids plus Gaussian noise
//! and an optional non-stationary mean drift.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::TimeSeries;

/// One sinusoidal component, `amplitude * sin(2*pi*cycles*t/cycle_len + phase)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Tone {
    pub cycles: f64,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

/// Mean drift injected into every variable.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Drift {
    #[default]
    None,
    /// Ramps from 0 at the drift start to `total_shift` at the final step.
    Linear { total_shift: f64 },
    /// Jumps by `magnitude` at `floor(at_fraction * T)`.
    Step { at_fraction: f64, magnitude: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSpec {
    /// Total time steps T.
    pub steps: usize,
    /// Variable count C; `tones` must have one list per variable.
    pub vars: usize,
    /// Length over which `Tone::cycles` counts full periods (pick the
    /// look-back length so integer cycle counts land on exact DFT bins).
    #[serde(default = "default_cycle_len")]
    pub cycle_len: usize,
    pub tones: Vec<Vec<Tone>>,
    #[serde(default)]
    pub noise_std: f64,
    #[serde(default)]
    pub drift: Drift,
    /// Where the linear drift begins, as a fraction of T. The default matches
    /// the start of the test segment under the default 0.6/0.2/0.2 split.
    #[serde(default = "default_drift_start")]
    pub drift_start_fraction: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_cycle_len() -> usize {
    96
}

fn default_drift_start() -> f64 {
    0.8
}

impl SynthSpec {
    fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.vars == 0 {
            return Err(Error::Spec("steps and vars must be positive".into()));
        }
        if self.cycle_len == 0 {
            return Err(Error::Spec("cycle_len must be positive".into()));
        }
        if self.tones.len() != self.vars {
            return Err(Error::Spec(format!(
                "{} tone lists for {} variables",
                self.tones.len(),
                self.vars
            )));
        }
        if self.noise_std < 0.0 {
            return Err(Error::Spec("noise_std must be nonnegative".into()));
        }
        if !(0.0..=1.0).contains(&self.drift_start_fraction) {
            return Err(Error::Spec("drift_start_fraction must be in [0, 1]".into()));
        }
        if let Drift::Step { at_fraction, .. } = self.drift {
            if !(0.0..=1.0).contains(&at_fraction) {
                return Err(Error::Spec("step at_fraction must be in [0, 1]".into()));
            }
        }
        Ok(())
    }

    fn drift_at(&self, t: usize) -> f64 {
        match self.drift {
            Drift::None => 0.0,
            Drift::Linear { total_shift } => {
                let start = (self.drift_start_fraction * self.steps as f64).floor() as usize;
                if t < start || self.steps < 2 {
                    0.0
                } else {
                    let span = (self.steps - 1 - start).max(1) as f64;
                    total_shift * (t - start) as f64 / span
                }
            }
            Drift::Step {
                at_fraction,
                magnitude,
            } => {
                let at = (at_fraction * self.steps as f64).floor() as usize;
                if t >= at {
                    magnitude
                } else {
                    0.0
                }
            }
        }
    }
}

/// Generates the series described by `spec`; identical specs (including the
/// seed) produce identical matrices.
pub fn generate(spec: &SynthSpec) -> Result<TimeSeries> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let tau = 2.0 * std::f64::consts::PI;
    let mut values = Array2::zeros((spec.steps, spec.vars));
    for t in 0..spec.steps {
        let drift = spec.drift_at(t);
        for c in 0..spec.vars {
            let mut v = drift;
            for tone in &spec.tones[c] {
                v += tone.amplitude
                    * (tau * tone.cycles * t as f64 / spec.cycle_len as f64 + tone.phase).sin();
            }
            if spec.noise_std > 0.0 {
                v += spec.noise_std * normal.sample(&mut rng);
            }
            values[[t, c]] = v;
        }
    }
    TimeSeries::from_values(values)
}
