//! Run configuration: a flat `key = value` file mirroring the CLI flag
//! names, with flags overriding file values and unknown keys rejected.


use std::path::{Path, PathBuf};

use sewercast_core::cells::CellKind;
use sewercast_core::optim::{parse_optimizer_label, OptimizerKind, OptimizerSpec};
use sewercast_core::synth::{BaselineKind, CatchmentConfig, RoutingLink};

use crate::error::{CliError, Result};

/// Union of every tunable the commands accept. All fields carry defaults;
/// a config file and then command-line flags refine them in that order.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub horizons: Vec<usize>,
    pub cell: CellKind,
    pub epochs: usize,
    pub batch_size: usize,
    pub hidden: usize,
    pub layers: usize,
    pub dropout: f64,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub patience: usize,
    pub train_fraction: f64,
    pub val_fraction: f64,
    pub step_seconds: u32,
    pub max_gap: usize,
    pub acf_threshold: f64,
    pub lookback_cap: usize,
    pub rain_top: usize,
    pub baseline: Option<BaselineKind>,
    pub lag_order: usize,
    pub ridge: f64,
    // Synthetic generator.
    pub steps: usize,
    pub stations: usize,
    pub storm_rate: f64,
    pub storm_intensity: f64,
    pub storm_duration: f64,
    pub noise_scale: f64,
    pub recession: Option<Vec<f64>>,
    pub rain_gain: Option<Vec<f64>>,
    pub level_cap: Option<Vec<f64>>,
    pub routing: Option<Vec<RoutingLink>>,
    // Search axes.
    pub search_hidden: Vec<usize>,
    pub search_batch: Vec<usize>,
    pub search_optimizer: Vec<String>,
    pub search_dropout: Vec<f64>,
    pub search_epochs: usize,
    pub search_passes: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let synth = CatchmentConfig::default();
        RunConfig {
            data: None,
            out: None,
            seed: 42,
            horizons: vec![1],
            cell: CellKind::Gru,
            epochs: 200,
            batch_size: 1024,
            hidden: 512,
            layers: 2,
            dropout: 0.2,
            optimizer: OptimizerKind::Adam,
            learning_rate: 1e-3,
            patience: 10,
            train_fraction: 0.8,
            val_fraction: 0.15,
            step_seconds: 600,
            max_gap: 3,
            acf_threshold: 1.0 / std::f64::consts::E,
            lookback_cap: 24,
            rain_top: 3,
            baseline: None,
            lag_order: 6,
            ridge: 1e-6,
            steps: synth.steps,
            stations: synth.num_stations,
            storm_rate: synth.storm_rate,
            storm_intensity: synth.storm_mean_intensity,
            storm_duration: synth.storm_mean_duration,
            noise_scale: synth.noise_scale,
            recession: None,
            rain_gain: None,
            level_cap: None,
            routing: None,
            search_hidden: vec![32, 64, 128, 256, 512, 1024],
            search_batch: vec![128, 256, 512, 1024, 2048],
            search_optimizer: vec!["rmsprop".into(), "adam".into(), "sgd".into()],
            search_dropout: vec![0.5, 0.35, 0.2, 0.0],
            search_epochs: 20,
            search_passes: 1,
        }
    }
}

impl RunConfig {
    /// Applies one `key = value` assignment (config-file line or flag).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| CliError::Usage(format!("key `{key}`: bad {what} `{value}`"));
        match key {
            "data" => self.data = Some(PathBuf::from(value)),
            "out" => self.out = Some(PathBuf::from(value)),
            "seed" => self.seed = value.parse().map_err(|_| bad("integer"))?,
            "horizon" => {
                self.horizons = value
                    .split(',')
                    .map(|v| v.parse().map_err(|_| bad("horizon list")))
                    .collect::<Result<_>>()?;
                if self.horizons.is_empty() || self.horizons.contains(&0) {
                    return Err(bad("horizon list"));
                }
            }
            "cell" => self.cell = CellKind::parse(value).map_err(|_| bad("cell kind"))?,
            "epochs" => self.epochs = value.parse().map_err(|_| bad("integer"))?,
            "batch-size" => self.batch_size = value.parse().map_err(|_| bad("integer"))?,
            "hidden" => self.hidden = value.parse().map_err(|_| bad("integer"))?,
            "layers" => self.layers = value.parse().map_err(|_| bad("integer"))?,
            "dropout" => self.dropout = value.parse().map_err(|_| bad("number"))?,
            "optimizer" => {
                let spec = parse_optimizer_label(value).map_err(|_| bad("optimizer"))?;
                self.optimizer = spec.kind;
                if value.contains(':') {
                    self.learning_rate = spec.learning_rate;
                }
            }
            "learning-rate" => self.learning_rate = value.parse().map_err(|_| bad("number"))?,
            "patience" => self.patience = value.parse().map_err(|_| bad("integer"))?,
            "train-fraction" => self.train_fraction = value.parse().map_err(|_| bad("number"))?,
            "val-fraction" => self.val_fraction = value.parse().map_err(|_| bad("number"))?,
            "step-seconds" => self.step_seconds = value.parse().map_err(|_| bad("integer"))?,
            "max-gap" => self.max_gap = value.parse().map_err(|_| bad("integer"))?,
            "acf-threshold" => self.acf_threshold = value.parse().map_err(|_| bad("number"))?,
            "lookback-cap" => self.lookback_cap = value.parse().map_err(|_| bad("integer"))?,
            "rain-top" => self.rain_top = value.parse().map_err(|_| bad("integer"))?,
            "baseline" => {
                self.baseline = match value {
                    "none" => None,
                    other => Some(BaselineKind::parse(other).map_err(|_| bad("baseline"))?),
                }
            }
            "lag-order" => self.lag_order = value.parse().map_err(|_| bad("integer"))?,
            "ridge" => self.ridge = value.parse().map_err(|_| bad("number"))?,
            "steps" => self.steps = value.parse().map_err(|_| bad("integer"))?,
            "stations" => self.stations = value.parse().map_err(|_| bad("integer"))?,
            "storm-rate" => self.storm_rate = value.parse().map_err(|_| bad("number"))?,
            "storm-intensity" => self.storm_intensity = value.parse().map_err(|_| bad("number"))?,
            "storm-duration" => self.storm_duration = value.parse().map_err(|_| bad("number"))?,
            "noise-scale" => self.noise_scale = value.parse().map_err(|_| bad("number"))?,
            "recession" => self.recession = Some(parse_list(value).map_err(|_| bad("number list"))?),
            "rain-gain" => self.rain_gain = Some(parse_list(value).map_err(|_| bad("number list"))?),
            "level-cap" => self.level_cap = Some(parse_list(value).map_err(|_| bad("number list"))?),
            "routing" => self.routing = Some(parse_routing(value).map_err(|_| bad("routing list"))?),
            "search-hidden" => {
                self.search_hidden = value
                    .split(',')
                    .map(|v| v.parse().map_err(|_| bad("integer list")))
                    .collect::<Result<_>>()?
            }
            "search-batch" => {
                self.search_batch = value
                    .split(',')
                    .map(|v| v.parse().map_err(|_| bad("integer list")))
                    .collect::<Result<_>>()?
            }
            "search-optimizer" => {
                self.search_optimizer = value.split(',').map(|v| v.to_string()).collect()
            }
            "search-dropout" => {
                self.search_dropout = value
                    .split(',')
                    .map(|v| v.parse().map_err(|_| bad("number list")))
                    .collect::<Result<_>>()?
            }
            "search-epochs" => self.search_epochs = value.parse().map_err(|_| bad("integer"))?,
            "search-passes" => self.search_passes = value.parse().map_err(|_| bad("integer"))?,
            other => return Err(CliError::Usage(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Loads a config file: one `key = value` per line, `#` comments.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        for (index, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("{}:{}: expected `key = value`", path.display(), index + 1))
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn optimizer_spec(&self) -> OptimizerSpec {
        let mut spec = match self.optimizer {
            OptimizerKind::Adam => OptimizerSpec::adam(self.learning_rate),
            OptimizerKind::Sgd => OptimizerSpec::sgd(self.learning_rate),
            OptimizerKind::RmsProp => OptimizerSpec::rmsprop(self.learning_rate),
        };
        spec.learning_rate = self.learning_rate;
        spec
    }

    pub fn catchment(&self) -> CatchmentConfig {
        let mut config = CatchmentConfig::with_stations(self.stations);
        config.steps = self.steps;
        config.step_seconds = self.step_seconds;
        config.storm_rate = self.storm_rate;
        config.storm_mean_intensity = self.storm_intensity;
        config.storm_mean_duration = self.storm_duration;
        config.noise_scale = self.noise_scale;
        config.seed = self.seed;
        if let Some(v) = &self.recession {
            config.recession = broadcast(v, self.stations);
        }
        if let Some(v) = &self.rain_gain {
            config.rain_gain = broadcast(v, self.stations);
        }
        if let Some(v) = &self.level_cap {
            config.level_cap = broadcast(v, self.stations);
        }
        if let Some(links) = &self.routing {
            config.routing = links.clone();
        }
        config
    }

    /// Serializes the training-relevant keys back to config-file form, so a
    /// search result can feed a later train run untouched.
    pub fn to_train_file(&self) -> String {
        let mut out = String::new();
        if let Some(data) = &self.data {
            out.push_str(&format!("data = {}\n", data.display()));
        }
        out.push_str(&format!("seed = {}\n", self.seed));
        let horizons: Vec<String> = self.horizons.iter().map(|h| h.to_string()).collect();
        out.push_str(&format!("horizon = {}\n", horizons.join(",")));
        out.push_str(&format!("cell = {}\n", self.cell.label()));
        out.push_str(&format!("epochs = {}\n", self.epochs));
        out.push_str(&format!("batch-size = {}\n", self.batch_size));
        out.push_str(&format!("hidden = {}\n", self.hidden));
        out.push_str(&format!("layers = {}\n", self.layers));
        out.push_str(&format!("dropout = {}\n", self.dropout));
        out.push_str(&format!("optimizer = {}\n", self.optimizer.label()));
        out.push_str(&format!("learning-rate = {}\n", self.learning_rate));
        out.push_str(&format!("patience = {}\n", self.patience));
        out.push_str(&format!("train-fraction = {}\n", self.train_fraction));
        out.push_str(&format!("val-fraction = {}\n", self.val_fraction));
        out.push_str(&format!("max-gap = {}\n", self.max_gap));
        out.push_str(&format!("acf-threshold = {}\n", self.acf_threshold));
        out.push_str(&format!("lookback-cap = {}\n", self.lookback_cap));
        out.push_str(&format!("rain-top = {}\n", self.rain_top));
        out
    }
}

fn parse_list(value: &str) -> std::result::Result<Vec<f64>, ()> {
    value.split(',').map(|v| v.trim().parse().map_err(|_| ())).collect()
}

fn broadcast(values: &[f64], n: usize) -> Vec<f64> {
    (0..n).map(|i| values[i % values.len()]).collect()
}

/// Routing syntax: `up>down:delay:gain` entries separated by `;`.
fn parse_routing(value: &str) -> std::result::Result<Vec<RoutingLink>, ()> {
    value
        .split(';')
        .map(|entry| {
            let (up, rest) = entry.trim().split_once('>').ok_or(())?;
            let mut parts = rest.split(':');
            let down = parts.next().ok_or(())?;
            let delay = parts.next().ok_or(())?;
            let gain = parts.next().ok_or(())?;
            if parts.next().is_some() {
                return Err(());
            }
            Ok(RoutingLink {
                upstream: up.trim().parse().map_err(|_| ())?,
                downstream: down.trim().parse().map_err(|_| ())?,
                delay: delay.trim().parse().map_err(|_| ())?,
                gain: gain.trim().parse().map_err(|_| ())?,
            })
        })
        .collect()
}
