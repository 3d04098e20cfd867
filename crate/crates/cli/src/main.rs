use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sewercast::commands::{cmd_evaluate, cmd_forecast, cmd_search, cmd_synth, cmd_train, EvalSplit};
use sewercast::runconfig::RunConfig;
use sewercast::Result;

/// Multi-station sewer water level forecasting pipeline.
#[derive(Parser)]
#[command(name = "sewercast", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every command. Values given here override the config
/// file, which overrides built-in defaults.
#[derive(Args, Default)]
struct Overrides {
    /// Flat key=value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input telemetry CSV.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output path (CSV, checkpoint, report or trial log by command).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<String>,
    /// Forecast horizons in steps, comma separated (e.g. 1,3,6).
    #[arg(long)]
    horizon: Option<String>,
    /// Hidden unit type: ffnn | rnn | lstm | gru.
    #[arg(long)]
    cell: Option<String>,
    #[arg(long)]
    epochs: Option<String>,
    #[arg(long = "batch-size")]
    batch_size: Option<String>,
    /// Hidden units per layer.
    #[arg(long)]
    hidden: Option<String>,
    /// Number of hidden layers.
    #[arg(long)]
    layers: Option<String>,
    #[arg(long)]
    dropout: Option<String>,
    /// adam | sgd | rmsprop, optionally with a rate as `adam:0.001`.
    #[arg(long)]
    optimizer: Option<String>,
    #[arg(long = "learning-rate")]
    learning_rate: Option<String>,
    #[arg(long)]
    patience: Option<String>,
    #[arg(long = "train-fraction")]
    train_fraction: Option<String>,
    #[arg(long = "val-fraction")]
    val_fraction: Option<String>,
    #[arg(long = "step-seconds")]
    step_seconds: Option<String>,
    /// Forward-fill gaps up to this many steps.
    #[arg(long = "max-gap")]
    max_gap: Option<String>,
    #[arg(long = "acf-threshold")]
    acf_threshold: Option<String>,
    #[arg(long = "lookback-cap")]
    lookback_cap: Option<String>,
    #[arg(long = "rain-top")]
    rain_top: Option<String>,
    /// none | persistence | linear_ar.
    #[arg(long)]
    baseline: Option<String>,
    #[arg(long = "lag-order")]
    lag_order: Option<String>,
    #[arg(long)]
    ridge: Option<String>,
}

impl Overrides {
    fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        let pairs: [(&str, &Option<String>); 21] = [
            ("seed", &self.seed),
            ("horizon", &self.horizon),
            ("cell", &self.cell),
            ("epochs", &self.epochs),
            ("batch-size", &self.batch_size),
            ("hidden", &self.hidden),
            ("layers", &self.layers),
            ("dropout", &self.dropout),
            ("optimizer", &self.optimizer),
            ("learning-rate", &self.learning_rate),
            ("patience", &self.patience),
            ("train-fraction", &self.train_fraction),
            ("val-fraction", &self.val_fraction),
            ("step-seconds", &self.step_seconds),
            ("max-gap", &self.max_gap),
            ("acf-threshold", &self.acf_threshold),
            ("lookback-cap", &self.lookback_cap),
            ("rain-top", &self.rain_top),
            ("baseline", &self.baseline),
            ("lag-order", &self.lag_order),
            ("ridge", &self.ridge),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        if let Some(data) = &self.data {
            cfg.data = Some(data.clone());
        }
        if let Some(out) = &self.out {
            cfg.out = Some(out.clone());
        }
        Ok(())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic catchment CSV.
    Synth {
        #[command(flatten)]
        overrides: Overrides,
        /// Number of grid steps to generate.
        #[arg(long)]
        steps: Option<String>,
        /// Number of level stations.
        #[arg(long)]
        stations: Option<String>,
        #[arg(long = "storm-rate")]
        storm_rate: Option<String>,
        #[arg(long = "storm-intensity")]
        storm_intensity: Option<String>,
        #[arg(long = "storm-duration")]
        storm_duration: Option<String>,
        #[arg(long = "noise-scale")]
        noise_scale: Option<String>,
        /// Per-station recession coefficients, comma separated.
        #[arg(long)]
        recession: Option<String>,
        #[arg(long = "rain-gain")]
        rain_gain: Option<String>,
        #[arg(long = "level-cap")]
        level_cap: Option<String>,
        /// Routing links as `up>down:delay:gain`, `;` separated.
        #[arg(long)]
        routing: Option<String>,
    },
    /// Train one checkpoint per requested horizon.
    Train {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Evaluate a checkpoint against a CSV and report per-station metrics.
    Evaluate {
        #[command(flatten)]
        overrides: Overrides,
        /// Trained checkpoint to evaluate.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Sample range to score: all | train | test.
        #[arg(long, default_value = "all")]
        split: String,
        /// Write observed/forecast series (physical units) to this CSV.
        #[arg(long = "export-predictions")]
        export_predictions: Option<PathBuf>,
    },
    /// Forecast per-station levels from the window ending at an instant.
    Forecast {
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Window end instant, ISO-8601 UTC (e.g. 2014-03-19T12:00:00Z).
        #[arg(long)]
        at: String,
    },
    /// One-axis-at-a-time hyperparameter search.
    Search {
        #[command(flatten)]
        overrides: Overrides,
        /// Hidden-size candidates, comma separated.
        #[arg(long = "search-hidden")]
        search_hidden: Option<String>,
        #[arg(long = "search-batch")]
        search_batch: Option<String>,
        #[arg(long = "search-optimizer")]
        search_optimizer: Option<String>,
        #[arg(long = "search-dropout")]
        search_dropout: Option<String>,
        /// Training epochs per trial.
        #[arg(long = "search-epochs")]
        search_epochs: Option<String>,
        /// Coordinate passes over the axes.
        #[arg(long = "search-passes")]
        search_passes: Option<String>,
    },
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = RunConfig::default();
    match cli.command {
        Command::Synth {
            overrides,
            steps,
            stations,
            storm_rate,
            storm_intensity,
            storm_duration,
            noise_scale,
            recession,
            rain_gain,
            level_cap,
            routing,
        } => {
            overrides.apply(&mut cfg)?;
            let pairs: [(&str, &Option<String>); 10] = [
                ("steps", &steps),
                ("stations", &stations),
                ("storm-rate", &storm_rate),
                ("storm-intensity", &storm_intensity),
                ("storm-duration", &storm_duration),
                ("noise-scale", &noise_scale),
                ("recession", &recession),
                ("rain-gain", &rain_gain),
                ("level-cap", &level_cap),
                ("routing", &routing),
            ];
            for (key, value) in pairs {
                if let Some(v) = value {
                    cfg.set(key, v)?;
                }
            }
            cmd_synth(&cfg)
        }
        Command::Train { overrides } => {
            overrides.apply(&mut cfg)?;
            cmd_train(&cfg)
        }
        Command::Evaluate { overrides, checkpoint, split, export_predictions } => {
            overrides.apply(&mut cfg)?;
            let split = EvalSplit::parse(&split)?;
            cmd_evaluate(&cfg, &checkpoint, split, export_predictions.as_deref())
        }
        Command::Forecast { overrides, checkpoint, at } => {
            overrides.apply(&mut cfg)?;
            cmd_forecast(&cfg, &checkpoint, &at)
        }
        Command::Search {
            overrides,
            search_hidden,
            search_batch,
            search_optimizer,
            search_dropout,
            search_epochs,
            search_passes,
        } => {
            overrides.apply(&mut cfg)?;
            let pairs: [(&str, &Option<String>); 6] = [
                ("search-hidden", &search_hidden),
                ("search-batch", &search_batch),
                ("search-optimizer", &search_optimizer),
                ("search-dropout", &search_dropout),
                ("search-epochs", &search_epochs),
                ("search-passes", &search_passes),
            ];
            for (key, value) in pairs {
                if let Some(v) = value {
                    cfg.set(key, v)?;
                }
            }
            cmd_search(&cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let code = err.exit_code();
            ExitCode::from(code as u8)
        }
    }
}
