//! Command-line surface: synthetic data generation, pre-training, adaptation
//! runs, and spectral inspection.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use driftcast_core::engine::report::{write_trace, RunReport};
use driftcast_core::engine::{run_stream, RunConfig};
use driftcast_core::forecaster::{
    fit_iterative, fit_ridge, ChannelMode, DLinearForecaster, Forecaster, LinearForecaster,
    NormWrapper, TrainConfig,
};
use driftcast_core::forecaster::mean_mse;
use driftcast_core::io::{load_csv, write_csv, CsvDatasetSpec};
use driftcast_core::model_doc::ModelDocument;
use driftcast_core::spectral::paas;
use driftcast_core::synth::{generate, SynthSpec};
use driftcast_core::timeseries::{chronological_split, make_windows, SplitSpec, TimeSeries};

#[derive(Parser)]
#[command(
    name = "driftcast",
    version,
    about = "Pre-train frozen forecasters and adapt them on replayed test streams"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset from a JSON spec.
    Synth(SynthArgs),
    /// Fit a source forecaster and write a model document.
    Pretrain(PretrainArgs),
    /// Replay a test stream with or without adaptation and write a report.
    Run(RunArgs),
    /// Print the spectral report and scheduled POGT length of one window.
    Paas(PaasArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// JSON file describing the generator (steps, vars, tones, noise, drift).
    #[arg(long)]
    spec: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelKind {
    Linear,
    Dlinear,
}

#[derive(Args)]
struct PretrainArgs {
    #[arg(long)]
    data: PathBuf,
    /// Treat the first CSV column as a timestamp and drop it.
    #[arg(long)]
    timestamp_column: bool,
    #[arg(long, value_enum)]
    model: ModelKind,
    /// Wrap the forecaster in per-window instance normalization.
    #[arg(long)]
    norm: bool,
    #[arg(long = "L")]
    lookback: usize,
    #[arg(long = "H")]
    horizon: usize,
    /// Chronological train,val,test ratios.
    #[arg(long, default_value = "0.6,0.2,0.2", value_parser = parse_split)]
    split: SplitSpec,
    /// Closed-form ridge fit (linear model only) instead of iterative training.
    #[arg(long)]
    ridge: bool,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 64)]
    batch: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 0.0)]
    wd: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output model document path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    timestamp_column: bool,
    #[arg(long = "model-file")]
    model_file: PathBuf,
    #[arg(long = "L")]
    lookback: usize,
    #[arg(long = "H")]
    horizon: usize,
    /// Adaptation learning rate (conventional grid: 5e-3, 3e-3, 1e-3, 5e-4, 1e-4).
    #[arg(long = "tta-lr", default_value_t = 1e-3)]
    tta_lr: f64,
    /// Initial gating value (conventional grid: 0.01, 0.05, 0.1, 0.3).
    #[arg(long = "alpha-init", default_value_t = 0.1)]
    alpha_init: f64,
    /// Replace periodicity-aware scheduling with a constant POGT length.
    #[arg(long = "fixed-pogt")]
    fixed_pogt: Option<usize>,
    /// Adapt on the partial loss only, ignoring completed past batches.
    #[arg(long = "no-full-loss")]
    no_full_loss: bool,
    /// Skip splicing adapted predictions into earlier forecasts.
    #[arg(long = "no-adjust")]
    no_adjust: bool,
    /// Frozen baseline only: no calibration, no adaptation.
    #[arg(long = "no-tta")]
    no_tta: bool,
    #[arg(long)]
    report: PathBuf,
    /// Optional per-window error trace CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct PaasArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    timestamp_column: bool,
    #[arg(long = "L")]
    lookback: usize,
    #[arg(long = "H")]
    horizon: usize,
    /// Which window to analyze (0-based over stride-1 windows).
    #[arg(long = "window-index", default_value_t = 0)]
    window_index: usize,
}

fn parse_split(text: &str) -> Result<SplitSpec, String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated ratios, got {text:?}"));
    }
    let ratios: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    SplitSpec::new(ratios[0], ratios[1], ratios[2]).map_err(|e| e.to_string())
}

fn main() -> std::process::ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Pretrain(args) => cmd_pretrain(args),
        Command::Run(args) => cmd_run(args),
        Command::Paas(args) => cmd_paas(args),
    }
}

fn load_series(path: &Path, timestamp_column: bool) -> Result<TimeSeries> {
    let spec = CsvDatasetSpec::new(path).with_timestamp_column(timestamp_column);
    load_csv(&spec).with_context(|| format!("loading {}", path.display()))
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.spec)
        .with_context(|| format!("reading {}", args.spec.display()))?;
    let spec: SynthSpec = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", args.spec.display()))?;
    let series = generate(&spec)?;
    write_csv(&series, &args.out)?;
    println!(
        "wrote {} steps x {} variables to {}",
        series.len(),
        series.num_vars(),
        args.out.display()
    );
    Ok(())
}

fn cmd_pretrain(args: PretrainArgs) -> Result<()> {
    if args.ridge && !matches!(args.model, ModelKind::Linear) {
        bail!("--ridge requires --model linear");
    }
    let series = load_series(&args.data, args.timestamp_column)?;
    let (train, val, _) = chronological_split(&series, &args.split)?;
    let train_windows = make_windows(&train, args.lookback, args.horizon, 1)?;
    let val_windows = make_windows(&val, args.lookback, args.horizon, 1)?;

    let model: Box<dyn Forecaster> = if args.ridge {
        let windows = if args.norm {
            normalize_windows(&train_windows)
        } else {
            train_windows.clone()
        };
        let fitted = fit_ridge(&windows, 1e-4, ChannelMode::Shared)?;
        if args.norm {
            Box::new(NormWrapper::new(Box::new(fitted), 1e-5))
        } else {
            Box::new(fitted)
        }
    } else {
        let mut model: Box<dyn Forecaster> = match (args.model, args.norm) {
            (ModelKind::Linear, false) => Box::new(LinearForecaster::zeros(
                args.lookback,
                args.horizon,
                ChannelMode::Shared,
            )),
            (ModelKind::Linear, true) => Box::new(NormWrapper::new(
                Box::new(LinearForecaster::zeros(
                    args.lookback,
                    args.horizon,
                    ChannelMode::Shared,
                )),
                1e-5,
            )),
            (ModelKind::Dlinear, false) => Box::new(DLinearForecaster::zeros(
                args.lookback,
                args.horizon,
                25,
                ChannelMode::Shared,
            )?),
            (ModelKind::Dlinear, true) => Box::new(NormWrapper::new(
                Box::new(DLinearForecaster::zeros(
                    args.lookback,
                    args.horizon,
                    25,
                    ChannelMode::Shared,
                )?),
                1e-5,
            )),
        };
        let config = TrainConfig {
            epochs: args.epochs,
            batch_size: args.batch,
            lr: args.lr,
            weight_decay: args.wd,
            seed: args.seed,
        };
        fit_iterative(model.as_mut(), &train_windows, &val_windows, &config)?;
        model
    };

    let train_mse = mean_mse(model.as_ref(), &train_windows)?;
    let val_mse = mean_mse(model.as_ref(), &val_windows)?;

    let mut doc = ModelDocument::new(model.as_ref());
    doc.split = Some([args.split.train, args.split.val, args.split.test]);
    doc.column_names = Some(series.names().to_vec());
    doc.save(&args.out)?;
    println!(
        "pretrained: train_mse={train_mse:.6e} val_mse={val_mse:.6e} model={}",
        args.out.display()
    );
    Ok(())
}

/// Per-window instance normalization applied to (look-back, horizon) pairs so
/// the closed-form fit sees the same inputs the wrapped model will.
fn normalize_windows(
    windows: &[driftcast_core::timeseries::WindowPair],
) -> Vec<driftcast_core::timeseries::WindowPair> {
    windows
        .iter()
        .map(|w| {
            let len = w.lookback.nrows() as f64;
            let mut lookback = w.lookback.clone();
            let mut horizon = w.horizon.clone();
            for c in 0..w.lookback.ncols() {
                let col = w.lookback.column(c);
                let mean = col.sum() / len;
                let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / len;
                let scale = var.sqrt() + 1e-5;
                lookback.column_mut(c).mapv_inplace(|v| (v - mean) / scale);
                horizon.column_mut(c).mapv_inplace(|v| (v - mean) / scale);
            }
            driftcast_core::timeseries::WindowPair {
                origin: w.origin,
                lookback,
                horizon,
            }
        })
        .collect()
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let doc = ModelDocument::load(&args.model_file)
        .with_context(|| format!("loading {}", args.model_file.display()))?;
    if doc.lookback != args.lookback || doc.horizon != args.horizon {
        bail!(
            "--L {} / --H {} do not match the model document (L={}, H={})",
            args.lookback,
            args.horizon,
            doc.lookback,
            doc.horizon
        );
    }
    let model = doc.build_forecaster()?;
    let series = load_series(&args.data, args.timestamp_column)?;
    let split = match doc.split {
        Some([train, val, test]) => SplitSpec::new(train, val, test)?,
        None => SplitSpec::default(),
    };
    let (_, _, test) = chronological_split(&series, &split)?;

    let mut config = RunConfig::new(args.lookback, args.horizon);
    config.tta_lr = args.tta_lr;
    config.alpha_init = args.alpha_init;
    config.enable_full_loss = !args.no_full_loss;
    config.enable_adjustment = !args.no_adjust;
    config.enable_tta = !args.no_tta;
    config.fixed_pogt = args.fixed_pogt;
    config.seed = args.seed;

    let mut baseline_config = config.clone();
    baseline_config.enable_tta = false;
    let (baseline, baseline_ledger) = run_stream(model.as_ref(), &test, &baseline_config)?;

    let adapted = if config.enable_tta {
        Some(run_stream(model.as_ref(), &test, &config)?)
    } else {
        None
    };

    let ledger = adapted
        .as_ref()
        .map(|(_, ledger)| ledger)
        .unwrap_or(&baseline_ledger);
    let mut report = RunReport::new(
        &config,
        &baseline,
        adapted.as_ref().map(|(metrics, _)| metrics),
        ledger,
    );
    let data_path = args.data.display().to_string();
    let model_path = args.model_file.display().to_string();
    report.data_path = Some(&data_path);
    report.model_path = Some(&model_path);
    report.save(&args.report)?;

    if let Some(trace_path) = &args.trace {
        write_trace(&ledger.records, &test, trace_path)?;
    }

    match &adapted {
        Some((metrics, _)) => println!(
            "baseline mse={:.6} adapted mse={:.6} ratio={:.4} report={}",
            baseline.mse,
            metrics.mse,
            metrics.mse / baseline.mse,
            args.report.display()
        ),
        None => println!(
            "baseline mse={:.6} report={}",
            baseline.mse,
            args.report.display()
        ),
    }
    Ok(())
}

fn cmd_paas(args: PaasArgs) -> Result<()> {
    let series = load_series(&args.data, args.timestamp_column)?;
    let windows = make_windows(&series, args.lookback, args.horizon, 1)?;
    let window = windows.get(args.window_index).with_context(|| {
        format!(
            "window index {} out of range ({} windows)",
            args.window_index,
            windows.len()
        )
    })?;
    let report = paas(&window.lookback, args.horizon)?;
    println!("window origin: {}", window.origin);
    println!(
        "selected variable: {} ({})",
        report.selected_variable,
        series.names()[report.selected_variable]
    );
    println!("dominant frequency bin: {}", report.dominant_frequency);
    println!("pogt length: {}", report.pogt_length);
    for c in 0..series.num_vars() {
        let power: f64 = report.amplitudes.column(c).iter().map(|m| m * m).sum();
        println!("variable {c} spectral power: {power:.6e}");
    }
    let col = report.amplitudes.column(report.selected_variable);
    let mut bins: Vec<(usize, f64)> = col.iter().enumerate().map(|(i, &m)| (i + 1, m)).collect();
    bins.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    for (bin, magnitude) in bins.iter().take(5) {
        println!("  bin {bin}: |X| = {magnitude:.6}");
    }
    Ok(())
}
