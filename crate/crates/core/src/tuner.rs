//! Hyperparameter search that varies one axis at a time while holding the
//! others at their current best, an axis per investigation: hidden size,
//! batch size, optimizer, then dropout. Selection minimizes validation
//! loss; test metrics are recorded per trial but never drive adoption.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::data::{ScalerParams, WindowedDataset};
use crate::metrics::{evaluate, MetricsReport};
use crate::model::{build_model, dataset_loss, fit, ModelConfig};
use crate::numerics::{derive_seed, SeededRng};
use crate::optim::{format_optimizer_label, OptimizerSpec};
use crate::{Error, Result};

/// The four searched axes, in protocol order.
pub const AXES: [&str; 4] = ["hidden_size", "batch_size", "optimizer", "dropout"];

/// Candidate lists per axis plus the starting point.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    pub hidden_sizes: Vec<usize>,
    pub batch_sizes: Vec<usize>,
    pub optimizers: Vec<OptimizerSpec>,
    pub dropouts: Vec<f64>,
    pub base_model: ModelConfig,
    pub base_optimizer: OptimizerSpec,
    pub base_batch_size: usize,
    /// Training budget per trial (real-training path only).
    pub trial_epochs: usize,
    pub trial_patience: usize,
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        self.base_model.validate()?;
        self.base_optimizer.validate()?;
        for (axis, empty) in [
            ("hidden_size", self.hidden_sizes.is_empty()),
            ("batch_size", self.batch_sizes.is_empty()),
            ("optimizer", self.optimizers.is_empty()),
            ("dropout", self.dropouts.is_empty()),
        ] {
            if empty {
                return Err(Error::Config(format!("search axis `{axis}` is empty")));
            }
        }
        if !self.hidden_sizes.contains(&self.base_model.hidden_size) {
            return Err(Error::Config("base hidden_size is not a hidden_size candidate".into()));
        }
        if !self.batch_sizes.contains(&self.base_batch_size) {
            return Err(Error::Config("base batch_size is not a batch_size candidate".into()));
        }
        if !self.optimizers.contains(&self.base_optimizer) {
            return Err(Error::Config("base optimizer is not an optimizer candidate".into()));
        }
        if !self.dropouts.contains(&self.base_model.dropout_ratio) {
            return Err(Error::Config("base dropout is not a dropout candidate".into()));
        }
        Ok(())
    }

    pub fn trials_per_pass(&self) -> usize {
        self.hidden_sizes.len() + self.batch_sizes.len() + self.optimizers.len() + self.dropouts.len()
    }

    fn axis_len(&self, axis: usize) -> usize {
        match axis {
            0 => self.hidden_sizes.len(),
            1 => self.batch_sizes.len(),
            2 => self.optimizers.len(),
            _ => self.dropouts.len(),
        }
    }

    fn apply(&self, config: &TrialConfig, axis: usize, candidate: usize) -> TrialConfig {
        let mut next = config.clone();
        match axis {
            0 => next.model.hidden_size = self.hidden_sizes[candidate],
            1 => next.batch_size = self.batch_sizes[candidate],
            2 => next.optimizer = self.optimizers[candidate].clone(),
            _ => next.model.dropout_ratio = self.dropouts[candidate],
        }
        next
    }
}

/// One point of the search space.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub model: ModelConfig,
    pub optimizer: OptimizerSpec,
    pub batch_size: usize,
}

impl TrialConfig {
    pub fn summary(&self) -> String {
        format!(
            "hidden={} batch={} optimizer={} dropout={}",
            self.model.hidden_size,
            self.batch_size,
            format_optimizer_label(&self.optimizer),
            self.model.dropout_ratio
        )
    }
}

/// Record of one trial: the configuration, its validation loss or the error
/// that marked it failed (never both), optional test metrics, timing and
/// the derived seed.
#[derive(Debug, Clone)]
pub struct TrialResult {
    pub axis: &'static str,
    pub candidate_index: usize,
    pub config: TrialConfig,
    pub outcome: core::result::Result<f64, String>,
    pub test_report: Option<MetricsReport>,
    pub wall_secs: f64,
    pub seed: u64,
}

/// Outcome of a search: the adopted configuration and every trial run.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub best: TrialConfig,
    pub best_loss: f64,
    pub trials: Vec<TrialResult>,
    pub passes_run: usize,
}

/// Core protocol, generic over the trial evaluator so synthetic objectives
/// can exercise it without any training. For each axis in order, every
/// candidate is evaluated with the other axes at their current best and the
/// smallest validation loss is adopted (ties keep the earliest candidate).
/// `passes` bounds repeated sweeps; sweeps stop early once no axis changes.
pub fn coordinate_search_with<F>(
    space: &SearchSpace,
    passes: usize,
    mut run_trial: F,
) -> Result<SearchOutcome>
where
    F: FnMut(&TrialConfig, u64) -> (core::result::Result<f64, String>, Option<MetricsReport>, f64),
{
    space.validate()?;
    if passes == 0 {
        return Err(Error::InvalidArgument("search needs at least one pass".into()));
    }
    let mut current = TrialConfig {
        model: space.base_model.clone(),
        optimizer: space.base_optimizer.clone(),
        batch_size: space.base_batch_size,
    };
    let mut current_loss = f64::INFINITY;
    let mut trials = Vec::new();
    let mut passes_run = 0;

    for _pass in 0..passes {
        passes_run += 1;
        let mut changed = false;
        for (axis_index, axis_name) in AXES.iter().enumerate() {
            let mut adopted: Option<(f64, TrialConfig)> = None;
            for candidate in 0..space.axis_len(axis_index) {
                let config = space.apply(&current, axis_index, candidate);
                let seed =
                    derive_seed(space.base_model.seed, axis_index as u64, candidate as u64);
                let (outcome, test_report, wall_secs) = run_trial(&config, seed);
                if let Ok(loss) = outcome {
                    if !loss.is_finite() {
                        trials.push(TrialResult {
                            axis: axis_name,
                            candidate_index: candidate,
                            config,
                            outcome: Err(format!("non-finite validation loss {loss}")),
                            test_report,
                            wall_secs,
                            seed,
                        });
                        continue;
                    }
                    let better = adopted.as_ref().map(|(best, _)| loss < *best).unwrap_or(true);
                    if better {
                        adopted = Some((loss, config.clone()));
                    }
                }
                trials.push(TrialResult {
                    axis: axis_name,
                    candidate_index: candidate,
                    config,
                    outcome,
                    test_report,
                    wall_secs,
                    seed,
                });
            }
            if let Some((loss, config)) = adopted {
                if config != current {
                    changed = true;
                }
                current = config;
                current_loss = loss;
            }
        }
        if !changed {
            break;
        }
    }

    if trials.iter().all(|t| t.outcome.is_err()) {
        return Err(Error::Search("every trial failed".into()));
    }
    Ok(SearchOutcome { best: current, best_loss: current_loss, trials, passes_run })
}

/// Full search over real training runs. Each trial reseeds the model with
/// its derived seed, trains on the shared split and is scored by validation
/// loss; `test` only adds per-trial metrics to the log.
pub fn coordinate_search(
    space: &SearchSpace,
    train: &WindowedDataset,
    val: &WindowedDataset,
    test: Option<(&WindowedDataset, &ScalerParams)>,
    passes: usize,
) -> Result<SearchOutcome> {
    coordinate_search_with(space, passes, |config, seed| {
        #[cfg(feature = "std")]
        let started = std::time::Instant::now();
        let result = (|| -> Result<(f64, Option<MetricsReport>)> {
            let mut model_config = config.model.clone();
            model_config.seed = seed;
            let mut model = build_model(&model_config)?;
            let mut rng = SeededRng::new(derive_seed(seed, 0x7261_696e, 0));
            fit(
                &mut model,
                train,
                val,
                &config.optimizer,
                space.trial_epochs,
                config.batch_size,
                space.trial_patience,
                &mut rng,
            )?;
            let loss = dataset_loss(&model, val)?;
            let report = match test {
                Some((test_ds, scaler)) => Some(evaluate(&model, test_ds, scaler)?),
                None => None,
            };
            Ok((loss, report))
        })();
        #[cfg(feature = "std")]
        let wall = started.elapsed().as_secs_f64();
        #[cfg(not(feature = "std"))]
        let wall = 0.0;
        match result {
            Ok((loss, report)) => (Ok(loss), report, wall),
            Err(e) => (Err(format!("{e}")), None, wall),
        }
    })
}
