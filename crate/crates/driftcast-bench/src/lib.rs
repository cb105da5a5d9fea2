//! Benchmark-only crate; see `benches/pipeline.rs`.
//!
//! Shared fixture builders live here so the bench targets stay small.

use driftcast_core::forecaster::{fit_ridge, ChannelMode, LinearForecaster};
use driftcast_core::synth::{generate, Drift, SynthSpec, Tone};
use driftcast_core::timeseries::{chronological_split, make_windows, SplitSpec, TimeSeries};

/// A drifting multivariate tone mixture and a ridge-fitted source model.
pub fn bench_fixture(steps: usize) -> (LinearForecaster, TimeSeries) {
    let spec = SynthSpec {
        steps,
        vars: 3,
        cycle_len: 96,
        tones: vec![
            vec![Tone { cycles: 4.0, amplitude: 1.0, phase: 0.0 }],
            vec![Tone { cycles: 8.0, amplitude: 1.0, phase: 1.3 }],
            vec![Tone { cycles: 12.0, amplitude: 1.0, phase: 2.1 }],
        ],
        noise_std: 0.1,
        drift: Drift::Linear { total_shift: 1.0 },
        drift_start_fraction: 0.8,
        seed: 11,
    };
    let series = generate(&spec).expect("fixture spec is valid");
    let (train, _, test) = chronological_split(&series, &SplitSpec::default()).unwrap();
    let windows = make_windows(&train, 96, 96, 1).unwrap();
    let model = fit_ridge(&windows, 1e-4, ChannelMode::Shared).unwrap();
    (model, test)
}
