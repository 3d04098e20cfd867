//! The operator-facing commands: generate synthetic telemetry, train
//! per-horizon models, evaluate against observations, forecast from the
//! latest window, and search hyperparameters.

use std::ops::Range;
use std::path::{Path, PathBuf};

use sewercast_core::data::{
    chrono_split, fill_gaps, fit_scaler, make_windows, scale, select_lags, unscale, ChannelKind,
    LagPolicy, LagSpec, ScalerParams, TimeSeriesFrame, WindowedDataset,
};
use sewercast_core::metrics::{evaluate, MetricsReport};
use sewercast_core::model::{build_model, fit, forward, ModelConfig, StopReason};
use sewercast_core::numerics::{derive_seed, SeededRng};
use sewercast_core::synth::{baseline_evaluate, baseline_fit, generate, BaselineSpec};
use sewercast_core::tuner::{coordinate_search, SearchSpace};
use sewercast_core::Error as CoreError;

use crate::checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
use crate::csvio;
use crate::error::{CliError, Result};
use crate::report::format_reports;
use crate::runconfig::RunConfig;
use crate::timefmt;
use crate::triallog::format_log;

fn require_data(cfg: &RunConfig) -> Result<&PathBuf> {
    cfg.data.as_ref().ok_or_else(|| CliError::Usage("no input CSV; pass --data <path>".into()))
}

fn lag_policy(cfg: &RunConfig) -> LagPolicy {
    LagPolicy {
        acf_threshold: cfg.acf_threshold,
        lookback_cap: cfg.lookback_cap,
        rain_top: cfg.rain_top,
    }
}

/// Rows used for fitting the scaler and the lag spec: the chronological
/// training prefix of the frame.
fn train_rows(frame: &TimeSeriesFrame, fraction: f64) -> Result<Range<usize>> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(CliError::Usage(format!(
            "train fraction must lie strictly between 0 and 1, got {fraction}"
        )));
    }
    let rows = (frame.len() as f64 * fraction) as usize;
    if rows == 0 || rows == frame.len() {
        return Err(CliError::Domain(CoreError::Empty(format!(
            "training prefix of {rows} rows leaves nothing to evaluate"
        ))));
    }
    Ok(0..rows)
}

/// Level channels in frame order; every level channel is a forecast target.
fn level_channel_ids(frame: &TimeSeriesFrame) -> Vec<String> {
    frame.level_channels().map(|(_, meta)| meta.id.clone()).collect()
}

/// Targets recorded at training time, recovered from the scaler's channel
/// order (level channels keep their frame order there).
fn checkpoint_targets(scaler: &ScalerParams) -> Vec<String> {
    scaler
        .entries()
        .iter()
        .filter(|(id, _, _)| ChannelKind::infer(id) == ChannelKind::Level)
        .map(|(id, _, _)| id.clone())
        .collect()
}

pub fn cmd_synth(cfg: &RunConfig) -> Result<()> {
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("synthetic.csv"));
    let catchment = cfg.catchment();
    let frame = generate(&catchment)?;
    csvio::save_frame(&out, &frame)?;
    println!("wrote {} rows x {} channels to {}", frame.len(), frame.channels().len(), out.display());
    println!("{:<10} {:>8} {:>8} {:>8}", "station", "mean", "max", "std");
    for (c, meta) in frame.level_channels() {
        let col = frame.column(c);
        let n = col.len() as f64;
        let mean = col.iter().sum::<f64>() / n;
        let max = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        println!("{:<10} {:>8.3} {:>8.3} {:>8.3}", meta.id, mean, max, var.sqrt());
    }
    Ok(())
}

struct Prepared {
    scaled: TimeSeriesFrame,
    scaler: ScalerParams,
    lag_spec: LagSpec,
    targets: Vec<String>,
}

fn prepare_training_frame(cfg: &RunConfig, data: &Path) -> Result<Prepared> {
    let frame = csvio::load_frame(data, cfg.step_seconds)?;
    let frame = fill_gaps(&frame, cfg.max_gap);
    let rows = train_rows(&frame, cfg.train_fraction)?;
    let lag_spec = select_lags(&frame, rows.clone(), &lag_policy(cfg))?;
    let scaler = fit_scaler(&frame, rows)?;
    let scaled = scale(&frame, &scaler)?;
    let targets = level_channel_ids(&frame);
    if targets.is_empty() {
        return Err(CliError::Domain(CoreError::Empty("CSV has no level channels".into())));
    }
    Ok(Prepared { scaled, scaler, lag_spec, targets })
}

/// Train/validation/test split of the windowed samples: the chronological
/// test tail first, then a validation tail carved out of the training side.
fn split_three(
    dataset: &WindowedDataset,
    train_fraction: f64,
    val_fraction: f64,
) -> Result<(WindowedDataset, WindowedDataset, WindowedDataset)> {
    let (train_val, test) = chrono_split(dataset, train_fraction)?;
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(CliError::Usage(format!(
            "val fraction must lie strictly between 0 and 1, got {val_fraction}"
        )));
    }
    let (train, val) = chrono_split(&train_val, 1.0 - val_fraction)?;
    Ok((train, val, test))
}

/// Checkpoint path for one horizon: the `--out` path itself for a single
/// horizon, otherwise `-h<k>` is appended before the extension.
fn horizon_path(out: &Path, horizon: usize, multiple: bool) -> PathBuf {
    if !multiple {
        return out.to_path_buf();
    }
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("model");
    let ext = out.extension().and_then(|s| s.to_str());
    let name = match ext {
        Some(ext) => format!("{stem}-h{horizon}.{ext}"),
        None => format!("{stem}-h{horizon}"),
    };
    out.with_file_name(name)
}

pub fn cmd_train(cfg: &RunConfig) -> Result<()> {
    let data = require_data(cfg)?;
    let prepared = prepare_training_frame(cfg, data)?;
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("model.ckpt"));
    let multiple = cfg.horizons.len() > 1;

    for &horizon in &cfg.horizons {
        let dataset = make_windows(&prepared.scaled, &prepared.lag_spec, horizon, &prepared.targets)?;
        let (train, val, _test) = split_three(&dataset, cfg.train_fraction, cfg.val_fraction)?;
        let model_config = ModelConfig {
            cell_kind: cfg.cell,
            hidden_size: cfg.hidden,
            num_recurrent_layers: cfg.layers,
            num_stations: prepared.targets.len(),
            lookback: prepared.lag_spec.lookback(),
            horizon,
            dropout_ratio: cfg.dropout,
            input_channels: dataset.input_channels(),
            seed: cfg.seed,
        };
        let mut model = build_model(&model_config)?;
        let mut rng = SeededRng::new(derive_seed(cfg.seed, horizon as u64, 1));
        let report = fit(
            &mut model,
            &train,
            &val,
            &cfg.optimizer_spec(),
            cfg.epochs,
            cfg.batch_size,
            cfg.patience,
            &mut rng,
        )?;
        let path = horizon_path(&out, horizon, multiple);
        save_checkpoint(
            &path,
            &Checkpoint {
                model,
                scaler: prepared.scaler.clone(),
                lag_spec: prepared.lag_spec.clone(),
            },
        )?;
        let final_val = report.val_losses.last().copied().unwrap_or(f64::NAN);
        let best_val = report.val_losses.iter().cloned().fold(f64::INFINITY, f64::min);
        let stop = match report.stop_reason {
            StopReason::MaxEpochs => "max-epochs",
            StopReason::EarlyStop => "early-stop",
        };
        println!(
            "horizon {horizon}: {} epochs ({stop}), final validation loss {final_val}, best {best_val}",
            report.epochs_run
        );
        println!("checkpoint written to {}", path.display());
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalSplit {
    All,
    Train,
    Test,
}

impl EvalSplit {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(EvalSplit::All),
            "train" => Ok(EvalSplit::Train),
            "test" => Ok(EvalSplit::Test),
            other => Err(CliError::Usage(format!("unknown split `{other}` (all|train|test)"))),
        }
    }
}

/// Loads a checkpoint and a CSV, rebuilds the windows with the embedded
/// scaler and lag spec, and reports per-station metrics. The scaler is
/// never refitted here: evaluation must see the training-time scaling.
pub fn cmd_evaluate(
    cfg: &RunConfig,
    checkpoint_path: &Path,
    split: EvalSplit,
    export: Option<&Path>,
) -> Result<()> {
    let data = require_data(cfg)?;
    let ckpt = load_checkpoint(checkpoint_path)?;
    let frame = csvio::load_frame(data, cfg.step_seconds)?;

    let targets = checkpoint_targets(&ckpt.scaler);
    let mut missing: Vec<&str> = ckpt
        .lag_spec
        .channel_ids()
        .chain(targets.iter().map(|s| s.as_str()))
        .filter(|id| frame.channel_index(id).is_none())
        .collect();
    missing.dedup();
    if !missing.is_empty() {
        return Err(CliError::Domain(CoreError::Config(format!(
            "CSV lacks channels required by the checkpoint: {}",
            missing.join(", ")
        ))));
    }

    let frame = fill_gaps(&frame, cfg.max_gap);
    let scaled = scale(&frame, &ckpt.scaler)?;
    let horizon = ckpt.model.config().horizon;
    let dataset = make_windows(&scaled, &ckpt.lag_spec, horizon, &targets)?;
    let eval_set = match split {
        EvalSplit::All => dataset.clone(),
        EvalSplit::Train => chrono_split(&dataset, cfg.train_fraction)?.0,
        EvalSplit::Test => chrono_split(&dataset, cfg.train_fraction)?.1,
    };

    let mut reports: Vec<MetricsReport> = vec![evaluate(&ckpt.model, &eval_set, &ckpt.scaler)?];
    if let Some(kind) = cfg.baseline {
        let spec = BaselineSpec {
            kind,
            lag_order: cfg.lag_order.min(dataset.lookback()),
            ridge: cfg.ridge,
        };
        let fit_set = match split {
            // Fit the baseline on the chronological training side so the
            // comparison never trains on evaluated samples.
            EvalSplit::All | EvalSplit::Test => chrono_split(&dataset, cfg.train_fraction)?.0,
            EvalSplit::Train => eval_set.clone(),
        };
        let baseline = baseline_fit(&fit_set, &spec)?;
        reports.push(baseline_evaluate(&baseline, &eval_set, &ckpt.scaler)?);
    }

    if let Some(path) = export {
        export_predictions(path, &ckpt, &eval_set, &scaled)?;
    }

    let text = format_reports(&reports);
    match &cfg.out {
        Some(path) => {
            std::fs::write(path, &text).map_err(|e| CliError::io(path, e))?;
            println!("report written to {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

/// Side-by-side observed/forecast series in physical units, one row per
/// evaluated sample, for external plotting.
fn export_predictions(
    path: &Path,
    ckpt: &Checkpoint,
    eval_set: &WindowedDataset,
    scaled: &TimeSeriesFrame,
) -> Result<()> {
    let horizon = ckpt.model.config().horizon;
    let mut out = String::from("timestamp");
    for id in eval_set.target_channel_ids() {
        out.push_str(&format!(",{id}_obs,{id}_sim"));
    }
    out.push('\n');
    let stations = eval_set.num_stations();
    let mut obs_cols = vec![Vec::with_capacity(eval_set.len()); stations];
    let mut sim_cols = vec![Vec::with_capacity(eval_set.len()); stations];
    for i in 0..eval_set.len() {
        let (pred, _) = forward(&ckpt.model, eval_set.window(i), false, None)?;
        for s in 0..stations {
            obs_cols[s].push(eval_set.target(i)[s]);
            sim_cols[s].push(pred.values()[s]);
        }
    }
    let mut phys_obs = Vec::with_capacity(stations);
    let mut phys_sim = Vec::with_capacity(stations);
    for (s, id) in eval_set.target_channel_ids().iter().enumerate() {
        phys_obs.push(unscale(&obs_cols[s], &ckpt.scaler, id)?);
        phys_sim.push(unscale(&sim_cols[s], &ckpt.scaler, id)?);
    }
    for (i, &anchor) in eval_set.anchors().iter().enumerate() {
        let target_instant = scaled.timestamp_at(anchor + horizon);
        out.push_str(&timefmt::format_utc(target_instant));
        for s in 0..stations {
            out.push_str(&format!(",{},{}", phys_obs[s][i], phys_sim[s][i]));
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| CliError::io(path, e))
}

/// Forecasts per-station levels `horizon` steps past `at`, which must lie
/// on the CSV grid with a full lookback window of history behind it.
pub fn cmd_forecast(cfg: &RunConfig, checkpoint_path: &Path, at: &str) -> Result<()> {
    let data = require_data(cfg)?;
    let ckpt = load_checkpoint(checkpoint_path)?;
    let frame = csvio::load_frame(data, cfg.step_seconds)?;
    let frame = fill_gaps(&frame, cfg.max_gap);
    let scaled = scale(&frame, &ckpt.scaler)?;

    let unix = timefmt::parse_utc(at)
        .ok_or_else(|| CliError::Usage(format!("bad timestamp `{at}` (expected ISO-8601 UTC)")))?;
    let lookback = ckpt.lag_spec.lookback();
    let history_error = || {
        CliError::Domain(CoreError::History(format!(
            "forecast at {at} needs {lookback} consecutive on-grid observations ending there \
             (rows {} through {at})",
            timefmt::format_utc(unix - (lookback as i64 - 1) * cfg.step_seconds as i64)
        )))
    };
    let index = scaled.index_of(unix).ok_or_else(history_error)?;
    if index + 1 < lookback {
        return Err(history_error());
    }

    let channels: Vec<usize> = ckpt
        .lag_spec
        .channel_ids()
        .map(|id| {
            scaled.channel_index(id).ok_or_else(|| {
                CliError::Domain(CoreError::Config(format!("CSV lacks channel `{id}`")))
            })
        })
        .collect::<Result<_>>()?;
    let mut window = Vec::with_capacity(lookback * channels.len());
    for t in index + 1 - lookback..=index {
        for &c in &channels {
            let v = scaled.column(c)[t];
            if v.is_nan() {
                return Err(history_error());
            }
            window.push(v);
        }
    }

    let (pred, _) = forward(&ckpt.model, &window, false, None)?;
    let targets = checkpoint_targets(&ckpt.scaler);
    let horizon = ckpt.model.config().horizon;
    let lead_secs = horizon as i64 * cfg.step_seconds as i64;
    println!(
        "forecast for {} ({} steps ahead of {at})",
        timefmt::format_utc(unix + lead_secs),
        horizon
    );
    for (s, id) in targets.iter().enumerate() {
        let phys = unscale(&pred.values()[s..s + 1], &ckpt.scaler, id)?[0];
        let (_, max) = ckpt.scaler.bounds(id).expect("target channel is in the scaler");
        // Presentation clamp to the physically observed range.
        let clamped = phys.clamp(0.0, max);
        println!("{id} {clamped}");
    }
    Ok(())
}

pub fn cmd_search(cfg: &RunConfig) -> Result<()> {
    let data = require_data(cfg)?;
    let prepared = prepare_training_frame(cfg, data)?;
    let horizon = cfg.horizons[0];
    let dataset = make_windows(&prepared.scaled, &prepared.lag_spec, horizon, &prepared.targets)?;
    let (train, val, test) = split_three(&dataset, cfg.train_fraction, cfg.val_fraction)?;

    let optimizers: Vec<_> = cfg
        .search_optimizer
        .iter()
        .map(|label| sewercast_core::optim::parse_optimizer_label(label).map_err(CliError::from))
        .collect::<Result<_>>()?;
    let mut space = SearchSpace {
        hidden_sizes: cfg.search_hidden.clone(),
        batch_sizes: cfg.search_batch.clone(),
        optimizers,
        dropouts: cfg.search_dropout.clone(),
        base_model: ModelConfig {
            cell_kind: cfg.cell,
            hidden_size: cfg.hidden,
            num_recurrent_layers: cfg.layers,
            num_stations: prepared.targets.len(),
            lookback: prepared.lag_spec.lookback(),
            horizon,
            dropout_ratio: cfg.dropout,
            input_channels: dataset.input_channels(),
            seed: cfg.seed,
        },
        base_optimizer: cfg.optimizer_spec(),
        base_batch_size: cfg.batch_size,
        trial_epochs: cfg.search_epochs,
        trial_patience: cfg.patience.min(cfg.search_epochs),
    };
    // The protocol starts from a point inside the space; align the base to
    // the first candidate of any axis that does not contain it.
    if !space.hidden_sizes.contains(&space.base_model.hidden_size) {
        space.base_model.hidden_size = space.hidden_sizes[0];
    }
    if !space.batch_sizes.contains(&space.base_batch_size) {
        space.base_batch_size = space.batch_sizes[0];
    }
    if !space.optimizers.contains(&space.base_optimizer) {
        space.base_optimizer = space.optimizers[0].clone();
    }
    if !space.dropouts.contains(&space.base_model.dropout_ratio) {
        space.base_model.dropout_ratio = space.dropouts[0];
    }

    let outcome = coordinate_search(&space, &train, &val, Some((&test, &prepared.scaler)), cfg.search_passes)?;

    let log_path = cfg.out.clone().unwrap_or_else(|| PathBuf::from("search.log"));
    std::fs::write(&log_path, format_log(&outcome.trials)).map_err(|e| CliError::io(&log_path, e))?;

    let mut best_cfg = cfg.clone();
    best_cfg.hidden = outcome.best.model.hidden_size;
    best_cfg.dropout = outcome.best.model.dropout_ratio;
    best_cfg.batch_size = outcome.best.batch_size;
    best_cfg.optimizer = outcome.best.optimizer.kind;
    best_cfg.learning_rate = outcome.best.optimizer.learning_rate;
    let best_path = log_path.with_file_name(format!(
        "{}.best",
        log_path.file_name().and_then(|s| s.to_str()).unwrap_or("search")
    ));
    std::fs::write(&best_path, best_cfg.to_train_file()).map_err(|e| CliError::io(&best_path, e))?;

    println!(
        "{} trials over {} passes; best validation loss {}",
        outcome.trials.len(),
        outcome.passes_run,
        outcome.best_loss
    );
    println!("best: {}", outcome.best.summary());
    println!("trial log written to {}", log_path.display());
    println!("best config written to {}", best_path.display());
    Ok(())
}

/// Library-level twin of `cmd_evaluate`'s report path, used by tests to
/// check the CLI output against a direct computation.
pub fn evaluate_report_for_test(
    cfg: &RunConfig,
    checkpoint_path: &Path,
    split: EvalSplit,
) -> Result<Vec<MetricsReport>> {
    let data = require_data(cfg)?;
    let ckpt = load_checkpoint(checkpoint_path)?;
    let frame = csvio::load_frame(data, cfg.step_seconds)?;
    let frame = fill_gaps(&frame, cfg.max_gap);
    let scaled = scale(&frame, &ckpt.scaler)?;
    let targets = checkpoint_targets(&ckpt.scaler);
    let dataset = make_windows(&scaled, &ckpt.lag_spec, ckpt.model.config().horizon, &targets)?;
    let eval_set = match split {
        EvalSplit::All => dataset,
        EvalSplit::Train => chrono_split(&dataset, cfg.train_fraction)?.0,
        EvalSplit::Test => chrono_split(&dataset, cfg.train_fraction)?.1,
    };
    Ok(vec![evaluate(&ckpt.model, &eval_set, &ckpt.scaler)?])
}
