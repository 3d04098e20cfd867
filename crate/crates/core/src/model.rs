//! The stacked multi-task forecaster: an input window runs through two (by
//! default) recurrent or dense hidden layers and a linear output layer with
//! one head per station. This module owns the forward pass, the loss, full
//! backpropagation through time, dropout, the training loop and the flat
//! parameter view used by optimizers and checkpoints.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::cells::{
    cell_step, cell_step_backward, ffnn_step, CellKind, CellParams, CellState, GateGrads, StepCache,
};
use crate::data::WindowedDataset;
use crate::numerics::{
    matvec_add, matvec_transpose_add, outer_add, Activation, InitScheme, Matrix2D, SeededRng,
    Vector1D,
};
use crate::optim::{optimizer_step, OptimizerSpec, OptimizerState};
use crate::{Error, Result};

/// Activation of dense hidden layers in the feed-forward variant. The
/// recurrent kinds fix their own activations.
pub const FFNN_HIDDEN_ACTIVATION: Activation = Activation::Tanh;

/// Architecture and training-shape configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub cell_kind: CellKind,
    pub hidden_size: usize,
    pub num_recurrent_layers: usize,
    pub num_stations: usize,
    pub lookback: usize,
    /// Steps ahead this model predicts (direct multi-step: one model per
    /// horizon).
    pub horizon: usize,
    pub dropout_ratio: f64,
    pub input_channels: usize,
    pub seed: u64,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        fn positive(value: usize, field: &str) -> Result<()> {
            if value == 0 {
                return Err(Error::Config(format!("{field} must be at least 1")));
            }
            Ok(())
        }
        positive(self.hidden_size, "hidden_size")?;
        positive(self.num_recurrent_layers, "num_recurrent_layers")?;
        positive(self.num_stations, "num_stations")?;
        positive(self.lookback, "lookback")?;
        positive(self.horizon, "horizon")?;
        positive(self.input_channels, "input_channels")?;
        if !(0.0..1.0).contains(&self.dropout_ratio) {
            return Err(Error::Config(format!(
                "dropout_ratio must lie in [0, 1), got {}",
                self.dropout_ratio
            )));
        }
        Ok(())
    }

    /// Input width of hidden layer `index`. Dense variants consume the
    /// flattened window in the first layer.
    fn layer_input_size(&self, index: usize) -> usize {
        if index > 0 {
            self.hidden_size
        } else if self.cell_kind == CellKind::Ffnn {
            self.lookback * self.input_channels
        } else {
            self.input_channels
        }
    }

    pub fn window_len(&self) -> usize {
        self.lookback * self.input_channels
    }
}

/// Parameters of the full network.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    config: ModelConfig,
    layers: Vec<CellParams>,
    output_weight: Matrix2D,
    output_bias: Vector1D,
}

impl Model {
    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn layers(&self) -> &[CellParams] {
        &self.layers
    }

    pub fn output_weight(&self) -> &Matrix2D {
        &self.output_weight
    }

    pub fn output_bias(&self) -> &Vector1D {
        &self.output_bias
    }

    /// Rebuilds a model from explicit parts, checking that layer shapes
    /// chain correctly for the config.
    pub fn from_parts(
        config: ModelConfig,
        layers: Vec<CellParams>,
        output_weight: Matrix2D,
        output_bias: Vector1D,
    ) -> Result<Self> {
        config.validate()?;
        if layers.len() != config.num_recurrent_layers {
            return Err(Error::Shape(format!(
                "config expects {} hidden layers, got {}",
                config.num_recurrent_layers,
                layers.len()
            )));
        }
        for (i, layer) in layers.iter().enumerate() {
            if layer.kind() != config.cell_kind {
                return Err(Error::Config(format!(
                    "layer {i} is {}, config says {}",
                    layer.kind().label(),
                    config.cell_kind.label()
                )));
            }
            let want_in = config.layer_input_size(i);
            if layer.input_size() != want_in || layer.hidden_size() != config.hidden_size {
                return Err(Error::Shape(format!(
                    "layer {i} is {}x{}, config expects {}x{}",
                    layer.hidden_size(),
                    layer.input_size(),
                    config.hidden_size,
                    want_in
                )));
            }
        }
        if output_weight.rows() != config.num_stations
            || output_weight.cols() != config.hidden_size
            || output_bias.len() != config.num_stations
        {
            return Err(Error::Shape(format!(
                "output layer is {}x{} with bias[{}], config expects {}x{} with bias[{}]",
                output_weight.rows(),
                output_weight.cols(),
                output_bias.len(),
                config.num_stations,
                config.hidden_size,
                config.num_stations
            )));
        }
        Ok(Model { config, layers, output_weight, output_bias })
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.param_count()).sum::<usize>()
            + self.output_weight.rows() * self.output_weight.cols()
            + self.output_bias.len()
    }

    /// Canonical flat parameter order: layers in depth order, gates in kind
    /// order, weight then bias, then the output weight and bias. Optimizer
    /// state and checkpoints both align to this layout.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            for gate in layer.gates() {
                out.extend_from_slice(gate.weight.values());
                out.extend_from_slice(gate.bias.values());
            }
        }
        out.extend_from_slice(self.output_weight.values());
        out.extend_from_slice(self.output_bias.values());
        out
    }

    /// Writes a flat vector produced by [`Model::flatten`] back into the
    /// structured parameters.
    pub fn unflatten(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::Shape(format!(
                "flat parameter vector has {} entries, model has {}",
                flat.len(),
                self.param_count()
            )));
        }
        let mut cursor = 0;
        let mut take = |n: usize| {
            let s = &flat[cursor..cursor + n];
            cursor += n;
            s
        };
        for layer in &mut self.layers {
            for gate in layer.gates_mut() {
                let w = gate.weight.rows() * gate.weight.cols();
                gate.weight.values_mut().copy_from_slice(take(w));
                let b = gate.bias.len();
                gate.bias.values_mut().copy_from_slice(take(b));
            }
        }
        let w = self.output_weight.rows() * self.output_weight.cols();
        self.output_weight.values_mut().copy_from_slice(take(w));
        let b = self.output_bias.len();
        self.output_bias.values_mut().copy_from_slice(take(b));
        Ok(())
    }
}

/// Builds a model with fan-in-uniform weights drawn deterministically from
/// `config.seed`; biases start at zero.
pub fn build_model(config: &ModelConfig) -> Result<Model> {
    config.validate()?;
    let mut rng = SeededRng::new(config.seed);
    let mut layers = Vec::with_capacity(config.num_recurrent_layers);
    for i in 0..config.num_recurrent_layers {
        layers.push(CellParams::init(
            config.cell_kind,
            config.layer_input_size(i),
            config.hidden_size,
            &mut rng,
            InitScheme::UniformFanIn,
        )?);
    }
    let output_weight = crate::numerics::init_params(
        config.num_stations,
        config.hidden_size,
        &mut rng,
        InitScheme::UniformFanIn,
    )?;
    let output_bias = Vector1D::zeros(config.num_stations);
    Model::from_parts(config.clone(), layers, output_weight, output_bias)
}

/// Everything the backward pass needs from one training-mode forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Per layer, per time step (dense variant: one pseudo-step).
    layer_caches: Vec<Vec<StepCache>>,
    /// Dropout keep/scale factors applied to the top hidden vector,
    /// replayed in the backward pass. None when dropout is off.
    dropout_factors: Option<Vec<f64>>,
    /// Top hidden vector after dropout — the dense layer's input.
    dense_input: Vec<f64>,
}

/// Runs the network over one flattened `lookback x input_channels` window.
///
/// Recurrent layers iterate over the window from zero initial state; the
/// final top hidden vector passes through dropout (training mode only) and
/// the linear output layer. The dense variant flattens the window and runs
/// it through the hidden layers directly. Outputs live in scaled space and
/// are deliberately unclamped.
pub fn forward(
    model: &Model,
    window: &[f64],
    training: bool,
    mut rng: Option<&mut SeededRng>,
) -> Result<(Vector1D, Option<ForwardCache>)> {
    let cfg = &model.config;
    if window.len() != cfg.window_len() {
        return Err(Error::Shape(format!(
            "window has {} values, config expects {} ({} steps x {} channels)",
            window.len(),
            cfg.window_len(),
            cfg.lookback,
            cfg.input_channels
        )));
    }
    let mut layer_caches: Vec<Vec<StepCache>> = vec![Vec::new(); model.layers.len()];

    let top_hidden: Vec<f64> = if cfg.cell_kind == CellKind::Ffnn {
        let mut activations = window.to_vec();
        for (l, layer) in model.layers.iter().enumerate() {
            let (next, cache) = ffnn_step(&activations, layer, FFNN_HIDDEN_ACTIVATION, training)?;
            if let Some(c) = cache {
                layer_caches[l].push(c);
            }
            activations = next.into_values();
        }
        activations
    } else {
        let mut states: Vec<CellState> = model
            .layers
            .iter()
            .map(|_| CellState::zeros(cfg.cell_kind, cfg.hidden_size))
            .collect();
        for step in window.chunks_exact(cfg.input_channels) {
            let mut input = step.to_vec();
            for (l, layer) in model.layers.iter().enumerate() {
                let (next, cache) = cell_step(layer, &input, &states[l], training)?;
                if let Some(c) = cache {
                    layer_caches[l].push(c);
                }
                input = next.h.values().to_vec();
                states[l] = next;
            }
        }
        states.pop().expect("at least one layer").h.into_values()
    };

    let (dense_input, dropout_factors) = if training && cfg.dropout_ratio > 0.0 {
        let rng = rng.as_deref_mut().ok_or_else(|| {
            Error::InvalidArgument("training-mode forward with dropout needs an rng".into())
        })?;
        let factors = dropout_factors(top_hidden.len(), cfg.dropout_ratio, rng);
        let dropped: Vec<f64> =
            top_hidden.iter().zip(&factors).map(|(v, f)| v * f).collect();
        (dropped, Some(factors))
    } else {
        (top_hidden, None)
    };

    let mut prediction = model.output_bias.values().to_vec();
    matvec_add(&model.output_weight, &dense_input, &mut prediction);

    let cache = training.then_some(ForwardCache { layer_caches, dropout_factors, dense_input });
    Ok((Vector1D::from(prediction), cache))
}

/// Per-component keep/scale factors for inverted dropout: a dropped
/// component gets 0, a survivor gets `1 / (1 - ratio)`.
fn dropout_factors(len: usize, ratio: f64, rng: &mut SeededRng) -> Vec<f64> {
    let keep_scale = 1.0 / (1.0 - ratio);
    (0..len).map(|_| if rng.next_f64() < ratio { 0.0 } else { keep_scale }).collect()
}

/// Inverted dropout over a vector: training mode zeroes each component with
/// probability `ratio` and rescales survivors; evaluation mode is identity.
pub fn apply_dropout(
    v: &Vector1D,
    ratio: f64,
    rng: &mut SeededRng,
    training: bool,
) -> Result<Vector1D> {
    if !(0.0..1.0).contains(&ratio) {
        return Err(Error::InvalidArgument(format!(
            "dropout ratio must lie in [0, 1), got {ratio}"
        )));
    }
    if !training || ratio == 0.0 {
        return Ok(v.clone());
    }
    let factors = dropout_factors(v.len(), ratio, rng);
    Ok(Vector1D::from(v.values().iter().zip(&factors).map(|(x, f)| x * f).collect::<Vec<_>>()))
}

/// Mean squared error over stations and its gradient in the prediction.
pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    if pred.len() != target.len() {
        return Err(Error::Shape(format!(
            "prediction[{}] against target[{}]",
            pred.len(),
            target.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::InvalidArgument("mse of empty vectors".into()));
    }
    let n = pred.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(pred.len());
    for (p, t) in pred.iter().zip(target) {
        let d = p - t;
        loss += d * d;
        grad.push(2.0 * d / n);
    }
    Ok((loss / n, grad))
}

/// Gradients aligned with [`Model::flatten`]'s layout.
#[derive(Debug, Clone)]
pub struct ModelGrads {
    layers: Vec<Vec<GateGrads>>,
    output_weight: Matrix2D,
    output_bias: Vec<f64>,
}

impl ModelGrads {
    fn zeros(model: &Model) -> Self {
        let layers = model
            .layers
            .iter()
            .map(|layer| {
                layer
                    .gates()
                    .iter()
                    .map(|g| GateGrads {
                        weight: Matrix2D::zeros(g.weight.rows(), g.weight.cols()),
                        bias: vec![0.0; g.bias.len()],
                    })
                    .collect()
            })
            .collect();
        ModelGrads {
            layers,
            output_weight: Matrix2D::zeros(
                model.output_weight.rows(),
                model.output_weight.cols(),
            ),
            output_bias: vec![0.0; model.output_bias.len()],
        }
    }

    fn add_gate(&mut self, layer: usize, gate: usize, grads: &GateGrads) {
        let dst = &mut self.layers[layer][gate];
        for (d, s) in dst.weight.values_mut().iter_mut().zip(grads.weight.values()) {
            *d += s;
        }
        for (d, s) in dst.bias.iter_mut().zip(&grads.bias) {
            *d += s;
        }
    }

    fn scale(&mut self, factor: f64) {
        for layer in &mut self.layers {
            for gate in layer {
                for v in gate.weight.values_mut() {
                    *v *= factor;
                }
                for v in &mut gate.bias {
                    *v *= factor;
                }
            }
        }
        for v in self.output_weight.values_mut() {
            *v *= factor;
        }
        for v in &mut self.output_bias {
            *v *= factor;
        }
    }

    /// Same canonical order as [`Model::flatten`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.layers {
            for gate in layer {
                out.extend_from_slice(gate.weight.values());
                out.extend_from_slice(&gate.bias);
            }
        }
        out.extend_from_slice(self.output_weight.values());
        out.extend_from_slice(&self.output_bias);
        out
    }
}

/// Mean loss over `samples` and the exact gradient of that mean with
/// respect to every parameter, accumulated backward through all lookback
/// steps and every layer. Dropout masks drawn in the forward pass are
/// replayed in the backward pass.
pub fn bptt(
    model: &Model,
    samples: &[(&[f64], &[f64])],
    rng: &mut SeededRng,
) -> Result<(f64, ModelGrads)> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("bptt on an empty batch".into()));
    }
    let cfg = &model.config;
    let mut grads = ModelGrads::zeros(model);
    let mut total_loss = 0.0;

    for &(window, target) in samples {
        if target.len() != cfg.num_stations {
            return Err(Error::Shape(format!(
                "target[{}] against {} stations",
                target.len(),
                cfg.num_stations
            )));
        }
        let (pred, cache) = forward(model, window, true, Some(rng))?;
        let cache = cache.expect("training forward returns a cache");
        let (loss, grad_pred) = mse_loss(pred.values(), target)?;
        total_loss += loss;

        // Output layer.
        outer_add(&mut grads.output_weight, &grad_pred, &cache.dense_input);
        for (b, g) in grads.output_bias.iter_mut().zip(&grad_pred) {
            *b += g;
        }
        let mut grad_top = vec![0.0; cfg.hidden_size];
        matvec_transpose_add(&model.output_weight, &grad_pred, &mut grad_top);
        if let Some(factors) = &cache.dropout_factors {
            for (g, f) in grad_top.iter_mut().zip(factors) {
                *g *= f;
            }
        }

        let num_layers = model.layers.len();
        if cfg.cell_kind == CellKind::Ffnn {
            let mut grad_out = grad_top;
            for l in (0..num_layers).rev() {
                let step = cell_step_backward(
                    &cache.layer_caches[l][0],
                    &grad_out,
                    None,
                    &model.layers[l],
                )?;
                for (gi, gate) in step.gates.iter().enumerate() {
                    grads.add_gate(l, gi, gate);
                }
                grad_out = step.grad_input;
            }
        } else {
            let steps = cfg.lookback;
            let mut carry_h: Vec<Vec<f64>> = vec![vec![0.0; cfg.hidden_size]; num_layers];
            let mut carry_c: Vec<Option<Vec<f64>>> = (0..num_layers)
                .map(|_| (cfg.cell_kind == CellKind::Lstm).then(|| vec![0.0; cfg.hidden_size]))
                .collect();
            // The loss touches only the top layer's final hidden vector;
            // every other contribution arrives through the carries.
            let mut inject_top = Some(grad_top);
            for t in (0..steps).rev() {
                let mut from_above: Option<Vec<f64>> = None;
                for l in (0..num_layers).rev() {
                    let mut grad_h = core::mem::take(&mut carry_h[l]);
                    if l == num_layers - 1 {
                        if let Some(inj) = inject_top.take() {
                            for (g, i) in grad_h.iter_mut().zip(&inj) {
                                *g += i;
                            }
                        }
                    }
                    if let Some(above) = from_above.take() {
                        for (g, a) in grad_h.iter_mut().zip(&above) {
                            *g += a;
                        }
                    }
                    let step = cell_step_backward(
                        &cache.layer_caches[l][t],
                        &grad_h,
                        carry_c[l].as_deref(),
                        &model.layers[l],
                    )?;
                    for (gi, gate) in step.gates.iter().enumerate() {
                        grads.add_gate(l, gi, gate);
                    }
                    carry_h[l] = step.grad_hidden_prev;
                    carry_c[l] = step.grad_cell_prev;
                    if l > 0 {
                        from_above = Some(step.grad_input);
                    }
                }
            }
        }
    }

    let inv = 1.0 / samples.len() as f64;
    grads.scale(inv);
    Ok((total_loss * inv, grads))
}

/// Mean evaluation-mode loss over a dataset.
pub fn dataset_loss(model: &Model, dataset: &WindowedDataset) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::Empty("loss of an empty dataset".into()));
    }
    let mut total = 0.0;
    for i in 0..dataset.len() {
        let (pred, _) = forward(model, dataset.window(i), false, None)?;
        let (loss, _) = mse_loss(pred.values(), dataset.target(i))?;
        total += loss;
    }
    Ok(total / dataset.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxEpochs,
    EarlyStop,
}

/// Outcome of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub train_losses: Vec<f64>,
    pub val_losses: Vec<f64>,
    pub epochs_run: usize,
    pub stop_reason: StopReason,
    pub wall_secs: f64,
}

/// Mini-batch training with per-epoch shuffling and early stopping on
/// validation loss.
///
/// Batches are rebuilt from a fresh shuffle every epoch; `patience`
/// consecutive epochs without validation improvement stop the run early
/// (`patience == 0` disables early stopping). The best-validation
/// parameters are restored before returning, and the whole procedure is
/// deterministic for a fixed `rng` seed.
pub fn fit(
    model: &mut Model,
    train: &WindowedDataset,
    val: &WindowedDataset,
    optimizer: &OptimizerSpec,
    epochs: usize,
    batch_size: usize,
    patience: usize,
    rng: &mut SeededRng,
) -> Result<TrainReport> {
    optimizer.validate()?;
    if batch_size == 0 {
        return Err(Error::Config("batch_size must be at least 1".into()));
    }
    for (name, ds) in [("train", train), ("val", val)] {
        if ds.is_empty() {
            return Err(Error::Empty(format!("{name} dataset is empty")));
        }
        if ds.lookback() != model.config.lookback
            || ds.input_channels() != model.config.input_channels
            || ds.num_stations() != model.config.num_stations
        {
            return Err(Error::Config(format!(
                "{name} dataset shape ({} steps x {} channels -> {} stations) does not match \
                 model config ({} x {} -> {})",
                ds.lookback(),
                ds.input_channels(),
                ds.num_stations(),
                model.config.lookback,
                model.config.input_channels,
                model.config.num_stations
            )));
        }
    }

    #[cfg(feature = "std")]
    let started = std::time::Instant::now();

    let mut report = TrainReport {
        train_losses: Vec::new(),
        val_losses: Vec::new(),
        epochs_run: 0,
        stop_reason: StopReason::MaxEpochs,
        wall_secs: 0.0,
    };

    let mut params = model.flatten();
    let mut opt_state = OptimizerState::new(optimizer, params.len());
    let mut best_val = f64::INFINITY;
    let mut best_params = params.clone();
    let mut stale_epochs = 0usize;
    let mut indices: Vec<usize> = (0..train.len()).collect();

    for _epoch in 0..epochs {
        // Fisher-Yates shuffle driven by the caller's rng.
        for i in (1..indices.len()).rev() {
            let j = rng.next_below(i + 1);
            indices.swap(i, j);
        }

        let mut epoch_loss = 0.0;
        for batch in indices.chunks(batch_size) {
            let samples: Vec<(&[f64], &[f64])> =
                batch.iter().map(|&i| (train.window(i), train.target(i))).collect();
            let (loss, grads) = bptt(model, &samples, rng)?;
            if !loss.is_finite() {
                return Err(Error::InvalidState(format!(
                    "training diverged: batch loss became {loss}"
                )));
            }
            epoch_loss += loss * batch.len() as f64;
            optimizer_step(&mut params, &grads.flatten(), &mut opt_state, optimizer)?;
            model.unflatten(&params)?;
        }
        report.train_losses.push(epoch_loss / train.len() as f64);

        let val_loss = dataset_loss(model, val)?;
        if !val_loss.is_finite() {
            return Err(Error::InvalidState(format!(
                "training diverged: validation loss became {val_loss}"
            )));
        }
        report.val_losses.push(val_loss);
        report.epochs_run += 1;

        if val_loss < best_val {
            best_val = val_loss;
            best_params.copy_from_slice(&params);
            stale_epochs = 0;
        } else {
            stale_epochs += 1;
            if patience > 0 && stale_epochs >= patience {
                report.stop_reason = StopReason::EarlyStop;
                break;
            }
        }
    }

    if report.epochs_run > 0 {
        model.unflatten(&best_params)?;
    }

    #[cfg(feature = "std")]
    {
        report.wall_secs = started.elapsed().as_secs_f64();
    }
    Ok(report)
}
