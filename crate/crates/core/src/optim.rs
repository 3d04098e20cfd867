//! Gradient-descent optimizers over flat parameter vectors. Adam is the
//! default; plain SGD doubles as a test oracle and RMSprop rounds out the
//! candidate set the tuner can enumerate.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::numerics::real;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Adam,
    Sgd,
    RmsProp,
}

impl OptimizerKind {
    pub fn label(self) -> &'static str {
        match self {
            OptimizerKind::Adam => "adam",
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::RmsProp => "rmsprop",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "adam" => Ok(OptimizerKind::Adam),
            "sgd" => Ok(OptimizerKind::Sgd),
            "rmsprop" => Ok(OptimizerKind::RmsProp),
            other => Err(Error::InvalidArgument(format!("unknown optimizer `{other}`"))),
        }
    }
}

/// Update rule plus its hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerSpec {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    /// First/second moment decay (Adam) or squared-gradient decay via
    /// `beta2` (RMSprop). Ignored by SGD.
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Optional global-norm gradient clip; `None` disables clipping.
    pub clip_norm: Option<f64>,
}

impl OptimizerSpec {
    pub fn adam(learning_rate: f64) -> Self {
        OptimizerSpec {
            kind: OptimizerKind::Adam,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            clip_norm: None,
        }
    }

    pub fn sgd(learning_rate: f64) -> Self {
        OptimizerSpec { kind: OptimizerKind::Sgd, ..OptimizerSpec::adam(learning_rate) }
    }

    pub fn rmsprop(learning_rate: f64) -> Self {
        OptimizerSpec {
            kind: OptimizerKind::RmsProp,
            beta2: 0.9,
            ..OptimizerSpec::adam(learning_rate)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Config(format!(
                "betas must lie in [0, 1), got ({}, {})",
                self.beta1, self.beta2
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return Err(Error::Config(format!("clip_norm must be positive, got {c}")));
            }
        }
        Ok(())
    }
}

/// Per-parameter accumulators. One instance belongs to one training loop.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    kind: OptimizerKind,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    step: u64,
}

impl OptimizerState {
    pub fn new(spec: &OptimizerSpec, param_count: usize) -> Self {
        let moments = match spec.kind {
            OptimizerKind::Sgd => 0,
            _ => param_count,
        };
        OptimizerState {
            kind: spec.kind,
            first_moment: vec![0.0; if spec.kind == OptimizerKind::Adam { moments } else { 0 }],
            second_moment: vec![0.0; moments],
            step: 0,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

/// Applies one optimizer update in place. `params` and `grads` must share a
/// layout, and `state` must have been built for the same spec kind.
pub fn optimizer_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut OptimizerState,
    spec: &OptimizerSpec,
) -> Result<()> {
    spec.validate()?;
    if params.len() != grads.len() {
        return Err(Error::Shape(format!(
            "params[{}] and grads[{}] disagree",
            params.len(),
            grads.len()
        )));
    }
    if state.kind != spec.kind {
        return Err(Error::InvalidArgument(format!(
            "optimizer state built for {} used with {} spec",
            state.kind.label(),
            spec.kind.label()
        )));
    }
    match spec.kind {
        OptimizerKind::Sgd => {}
        _ => {
            if state.second_moment.len() != params.len() {
                return Err(Error::Shape(format!(
                    "optimizer state sized for {} params, got {}",
                    state.second_moment.len(),
                    params.len()
                )));
            }
        }
    }

    let mut scale = 1.0;
    if let Some(max_norm) = spec.clip_norm {
        let norm = real::sqrt(grads.iter().map(|g| g * g).sum::<f64>());
        if norm > max_norm {
            scale = max_norm / norm;
        }
    }

    state.step += 1;
    let lr = spec.learning_rate;
    match spec.kind {
        OptimizerKind::Sgd => {
            for (p, g) in params.iter_mut().zip(grads) {
                *p -= lr * g * scale;
            }
        }
        OptimizerKind::Adam => {
            let t = state.step as i32;
            let bias1 = 1.0 - powi(spec.beta1, t);
            let bias2 = 1.0 - powi(spec.beta2, t);
            for (((p, g), m), v) in params
                .iter_mut()
                .zip(grads)
                .zip(&mut state.first_moment)
                .zip(&mut state.second_moment)
            {
                let g = g * scale;
                *m = spec.beta1 * *m + (1.0 - spec.beta1) * g;
                *v = spec.beta2 * *v + (1.0 - spec.beta2) * g * g;
                let m_hat = *m / bias1;
                let v_hat = *v / bias2;
                *p -= lr * m_hat / (real::sqrt(v_hat) + spec.epsilon);
            }
        }
        OptimizerKind::RmsProp => {
            for ((p, g), v) in params.iter_mut().zip(grads).zip(&mut state.second_moment) {
                let g = g * scale;
                *v = spec.beta2 * *v + (1.0 - spec.beta2) * g * g;
                *p -= lr * g / (real::sqrt(*v) + spec.epsilon);
            }
        }
    }
    Ok(())
}

fn powi(base: f64, exp: i32) -> f64 {
    let mut acc = 1.0;
    for _ in 0..exp {
        acc *= base;
    }
    acc
}

/// Parses an optimizer axis label such as `adam` or `sgd:0.01`.
pub fn parse_optimizer_label(label: &str) -> Result<OptimizerSpec> {
    let (kind, lr) = match label.split_once(':') {
        Some((k, lr)) => {
            let lr: f64 = lr
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad learning rate in `{label}`")))?;
            (k, Some(lr))
        }
        None => (label, None),
    };
    let kind = OptimizerKind::parse(kind)?;
    let mut spec = match kind {
        OptimizerKind::Adam => OptimizerSpec::adam(1e-3),
        OptimizerKind::Sgd => OptimizerSpec::sgd(1e-2),
        OptimizerKind::RmsProp => OptimizerSpec::rmsprop(1e-3),
    };
    if let Some(lr) = lr {
        spec.learning_rate = lr;
    }
    spec.validate()?;
    Ok(spec)
}

pub fn format_optimizer_label(spec: &OptimizerSpec) -> String {
    format!("{}:{}", spec.kind.label(), spec.learning_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        for spec in [OptimizerSpec::adam(1e-3), OptimizerSpec::sgd(0.1), OptimizerSpec::rmsprop(1e-3)] {
            let mut params = vec![1.0, -2.0, 0.5];
            let before = params.clone();
            let mut state = OptimizerState::new(&spec, 3);
            optimizer_step(&mut params, &[0.0; 3], &mut state, &spec).unwrap();
            assert_eq!(params, before, "{}", spec.kind.label());
            assert!(state.first_moment.iter().all(|&m| m == 0.0));
            assert!(state.second_moment.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn sgd_definition() {
        let spec = OptimizerSpec::sgd(0.1);
        let mut params = vec![1.0];
        let mut state = OptimizerState::new(&spec, 1);
        optimizer_step(&mut params, &[2.0], &mut state, &spec).unwrap();
        assert!((params[0] - 0.8).abs() < 1e-15);
    }

    /// Independent scalar trace of the Adam recurrences, kept deliberately
    /// separate from the implementation.
    fn adam_trace(lr: f64, b1: f64, b2: f64, eps: f64, grads: &[f64], p0: f64) -> f64 {
        let (mut p, mut m, mut v) = (p0, 0.0, 0.0);
        for (t, g) in grads.iter().enumerate() {
            let t = (t + 1) as f64;
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let m_hat = m / (1.0 - b1.powf(t));
            let v_hat = v / (1.0 - b2.powf(t));
            p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        p
    }

    #[test]
    fn adam_first_step_matches_hand_unrolled_recurrence() {
        let spec = OptimizerSpec::adam(1e-3);
        let mut params = vec![0.0];
        let mut state = OptimizerState::new(&spec, 1);
        optimizer_step(&mut params, &[0.5], &mut state, &spec).unwrap();
        let expected = adam_trace(1e-3, 0.9, 0.999, 1e-8, &[0.5], 0.0);
        assert!((params[0] - expected).abs() < 1e-15);
        assert!((params[0] - (-0.0009999999800000004)).abs() < 1e-12);
        assert_eq!(state.step(), 1);
    }

    #[test]
    fn adam_multi_step_matches_trace() {
        let spec = OptimizerSpec::adam(0.01);
        let grads = [0.5, -0.25, 0.125, 0.9, -1.5];
        let mut params = vec![0.3];
        let mut state = OptimizerState::new(&spec, 1);
        for g in grads {
            optimizer_step(&mut params, &[g], &mut state, &spec).unwrap();
        }
        let expected = adam_trace(0.01, 0.9, 0.999, 1e-8, &grads, 0.3);
        assert!((params[0] - expected).abs() < 1e-14);
    }

    #[test]
    fn sgd_converges_monotonically_on_quadratic() {
        // Gradient of 0.5*(p - a)^2 is (p - a); lr < 1 contracts the error.
        let spec = OptimizerSpec::sgd(0.3);
        let a: f64 = 2.5;
        let mut params = vec![-4.0];
        let mut state = OptimizerState::new(&spec, 1);
        let mut prev = (params[0] - a).abs();
        for _ in 0..40 {
            let g = params[0] - a;
            optimizer_step(&mut params, &[g], &mut state, &spec).unwrap();
            let err = (params[0] - a).abs();
            assert!(err < prev || err == 0.0);
            prev = err;
        }
        assert!(prev < 1e-5);
    }

    #[test]
    fn kind_mismatch_is_rejected() {
        let adam = OptimizerSpec::adam(1e-3);
        let sgd = OptimizerSpec::sgd(1e-2);
        let mut state = OptimizerState::new(&adam, 2);
        let mut params = vec![0.0, 0.0];
        assert!(matches!(
            optimizer_step(&mut params, &[1.0, 1.0], &mut state, &sgd),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let spec = OptimizerSpec::adam(1e-3);
        let mut state = OptimizerState::new(&spec, 2);
        let mut params = vec![0.0, 0.0];
        assert!(matches!(
            optimizer_step(&mut params, &[1.0], &mut state, &spec),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn clip_norm_rescales_large_gradients() {
        let mut spec = OptimizerSpec::sgd(1.0);
        spec.clip_norm = Some(1.0);
        let mut params = vec![0.0, 0.0];
        let mut state = OptimizerState::new(&spec, 2);
        optimizer_step(&mut params, &[3.0, 4.0], &mut state, &spec).unwrap();
        // Gradient norm 5 clipped to 1 -> step along (-0.6, -0.8).
        assert!((params[0] + 0.6).abs() < 1e-12);
        assert!((params[1] + 0.8).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn adam_first_step_is_bounded_and_opposes_gradient(
            g in prop_oneof![(-1e3f64..-1e-6), (1e-6f64..1e3)],
            lr in 1e-5f64..0.1,
        ) {
            let spec = OptimizerSpec::adam(lr);
            let mut params = vec![0.0];
            let mut state = OptimizerState::new(&spec, 1);
            optimizer_step(&mut params, &[g], &mut state, &spec).unwrap();
            let dp = params[0];
            prop_assert!(dp.abs() > 0.0 && dp.abs() <= lr + 1e-15);
            prop_assert!(dp.signum() == -g.signum());
        }

        #[test]
        fn deterministic_updates(g in -10.0f64..10.0) {
            let spec = OptimizerSpec::adam(1e-3);
            let mut a = vec![0.25];
            let mut b = vec![0.25];
            let mut sa = OptimizerState::new(&spec, 1);
            let mut sb = OptimizerState::new(&spec, 1);
            for _ in 0..5 {
                optimizer_step(&mut a, &[g], &mut sa, &spec).unwrap();
                optimizer_step(&mut b, &[g], &mut sb, &spec).unwrap();
            }
            prop_assert_eq!(a, b);
        }
    }
}
