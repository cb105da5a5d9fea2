//! Test-time adaptation for time series forecasting.
//!
//! The crate pre-trains frozen linear-family forecasters (closed-form ridge or
//! iterative Adam training), then adapts lightweight gated calibration modules
//! on a replayed test stream. Adaptation is scheduled by the dominant spectral
//! period of each anchor look-back window, supervised by partially-observed
//! ground truth, and followed by splicing adapted predictions into the
//! not-yet-observed tail of earlier forecasts.
//!
//! Main entry points:
//! - [`timeseries`]: containers, chronological splits, sliding windows
//! - [`forecaster`]: frozen source models with exact input/parameter gradients
//! - [`spectral`]: DFT magnitudes and periodicity-aware scheduling
//! - [`gcm`]: gated calibration modules and their analytic gradients
//! - [`engine`]: the streaming adaptation loop, scoring, and run reports
//! - [`synth`], [`io`], [`model_doc`]: data generation, CSV I/O, model files

pub mod engine;
pub mod error;
pub mod forecaster;
pub mod gcm;
pub mod io;
pub mod model_doc;
pub mod optim;
pub mod spectral;
pub mod synth;
pub mod timeseries;

pub use engine::{run_stream, score, Metrics, RunConfig, TtaLedger};
pub use error::{Error, Result};
pub use forecaster::{
    fit_iterative, fit_ridge, ChannelMode, DLinearForecaster, Forecaster, LinearForecaster,
    NormWrapper, TrainConfig,
};
pub use gcm::{Gcm, GcmGradients};
pub use spectral::{dft_magnitudes, paas, SpectrumReport};
pub use timeseries::{chronological_split, make_windows, SplitSpec, TimeSeries, WindowPair};
