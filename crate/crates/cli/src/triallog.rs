//! Append-only trial log for hyperparameter searches: one structured line
//! per trial, consumed by the `search` summary and greppable by hand.

use sewercast_core::optim::format_optimizer_label;
use sewercast_core::tuner::TrialResult;

pub fn format_trial(trial: &TrialResult) -> String {
    let status = match &trial.outcome {
        Ok(loss) => format!("status=ok loss={loss}"),
        Err(message) => format!("status=error message={:?}", message),
    };
    format!(
        "trial axis={} candidate={} {} hidden={} batch={} optimizer={} dropout={} seed={}",
        trial.axis,
        trial.candidate_index,
        status,
        trial.config.model.hidden_size,
        trial.config.batch_size,
        format_optimizer_label(&trial.config.optimizer),
        trial.config.model.dropout_ratio,
        trial.seed,
    )
}

pub fn format_log(trials: &[TrialResult]) -> String {
    let mut out = String::new();
    for t in trials {
        out.push_str(&format_trial(t));
        out.push('\n');
    }
    out
}
