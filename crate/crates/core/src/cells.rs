//! Forward and backward step computations for the four unit types the
//! engine compares: a dense feed-forward layer, a vanilla recurrent cell,
//! and the LSTM / GRU gated cells.
//!
//! Recurrent kinds use one weight matrix per gate over the concatenation
//! `[x_t, h_prev]`, shared across time steps. The backward passes are
//! hand-derived and checked against central finite differences in the
//! test suite; there is no autodiff engine behind them.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::numerics::{
    self, activation_grad_from_output, matvec_add, matvec_transpose_add, outer_add, sigmoid, tanh,
    Activation, InitScheme, Matrix2D, SeededRng, Vector1D,
};
use crate::{Error, Result};

/// Unit type of a hidden layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    Ffnn,
    Rnn,
    Lstm,
    Gru,
}

impl CellKind {
    /// Number of (weight, bias) pairs the kind carries.
    pub fn gate_count(self) -> usize {
        match self {
            CellKind::Ffnn | CellKind::Rnn => 1,
            CellKind::Lstm => 4,
            CellKind::Gru => 3,
        }
    }

    /// Stable gate labels, used for parameter naming in checkpoints.
    pub fn gate_names(self) -> &'static [&'static str] {
        match self {
            CellKind::Ffnn | CellKind::Rnn => &["linear"],
            CellKind::Lstm => &["input_gate", "forget_gate", "output_gate", "cell_candidate"],
            CellKind::Gru => &["update_gate", "reset_gate", "candidate"],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            CellKind::Ffnn => "ffnn",
            CellKind::Rnn => "rnn",
            CellKind::Lstm => "lstm",
            CellKind::Gru => "gru",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ffnn" => Ok(CellKind::Ffnn),
            "rnn" => Ok(CellKind::Rnn),
            "lstm" => Ok(CellKind::Lstm),
            "gru" => Ok(CellKind::Gru),
            other => Err(Error::InvalidArgument(format!("unknown cell kind `{other}`"))),
        }
    }
}

/// One gate: a weight matrix and its bias.
#[derive(Debug, Clone, PartialEq)]
pub struct GateParams {
    pub weight: Matrix2D,
    pub bias: Vector1D,
}

/// Parameters of one layer of a given kind.
///
/// Feed-forward layers hold a single `hidden x input` matrix; recurrent
/// kinds hold `hidden x (input + hidden)` matrices over `[x_t, h_prev]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellParams {
    kind: CellKind,
    input_size: usize,
    hidden_size: usize,
    gates: Vec<GateParams>,
}

impl CellParams {
    /// Width each gate matrix must have for this kind.
    fn expected_cols(kind: CellKind, input_size: usize, hidden_size: usize) -> usize {
        match kind {
            CellKind::Ffnn => input_size,
            _ => input_size + hidden_size,
        }
    }

    pub fn new(
        kind: CellKind,
        input_size: usize,
        hidden_size: usize,
        gates: Vec<GateParams>,
    ) -> Result<Self> {
        if input_size == 0 || hidden_size == 0 {
            return Err(Error::InvalidArgument(format!(
                "cell sizes must be positive, got input {input_size}, hidden {hidden_size}"
            )));
        }
        if gates.len() != kind.gate_count() {
            return Err(Error::Shape(format!(
                "{} cell expects {} gates, got {}",
                kind.label(),
                kind.gate_count(),
                gates.len()
            )));
        }
        let cols = Self::expected_cols(kind, input_size, hidden_size);
        for (g, name) in gates.iter().zip(kind.gate_names()) {
            if g.weight.rows() != hidden_size || g.weight.cols() != cols || g.bias.len() != hidden_size {
                return Err(Error::Shape(format!(
                    "{} gate `{name}` expects weight {hidden_size}x{cols} and bias[{hidden_size}], \
                     got weight {}x{} and bias[{}]",
                    kind.label(),
                    g.weight.rows(),
                    g.weight.cols(),
                    g.bias.len()
                )));
            }
        }
        Ok(CellParams { kind, input_size, hidden_size, gates })
    }

    /// Fresh parameters drawn from `rng` (biases start at zero).
    pub fn init(
        kind: CellKind,
        input_size: usize,
        hidden_size: usize,
        rng: &mut SeededRng,
        scheme: InitScheme,
    ) -> Result<Self> {
        let cols = Self::expected_cols(kind, input_size, hidden_size);
        let gates = (0..kind.gate_count())
            .map(|_| {
                Ok(GateParams {
                    weight: numerics::init_params(hidden_size, cols, rng, scheme)?,
                    bias: Vector1D::zeros(hidden_size),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(kind, input_size, hidden_size, gates)
    }

    pub fn zeros(kind: CellKind, input_size: usize, hidden_size: usize) -> Self {
        let cols = Self::expected_cols(kind, input_size, hidden_size);
        let gates = (0..kind.gate_count())
            .map(|_| GateParams { weight: Matrix2D::zeros(hidden_size, cols), bias: Vector1D::zeros(hidden_size) })
            .collect();
        CellParams { kind, input_size, hidden_size, gates }
    }

    pub fn kind(&self) -> CellKind {
        self.kind
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden_size
    }

    pub fn gates(&self) -> &[GateParams] {
        &self.gates
    }

    pub fn gates_mut(&mut self) -> &mut [GateParams] {
        &mut self.gates
    }

    /// Total number of scalar parameters.
    pub fn param_count(&self) -> usize {
        self.gates
            .iter()
            .map(|g| g.weight.rows() * g.weight.cols() + g.bias.len())
            .sum()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_size {
            return Err(Error::Shape(format!(
                "{} cell expects input[{}], got input[{}]",
                self.kind.label(),
                self.input_size,
                x.len()
            )));
        }
        Ok(())
    }

    fn check_hidden(&self, h: &[f64]) -> Result<()> {
        if h.len() != self.hidden_size {
            return Err(Error::Shape(format!(
                "{} cell expects hidden[{}], got hidden[{}]",
                self.kind.label(),
                self.hidden_size,
                h.len()
            )));
        }
        Ok(())
    }
}

/// Hidden state carried between time steps. The memory cell `c` is present
/// only for LSTM layers.
#[derive(Debug, Clone, PartialEq)]
pub struct CellState {
    pub h: Vector1D,
    pub c: Option<Vector1D>,
}

impl CellState {
    pub fn zeros(kind: CellKind, hidden_size: usize) -> Self {
        CellState {
            h: Vector1D::zeros(hidden_size),
            c: (kind == CellKind::Lstm).then(|| Vector1D::zeros(hidden_size)),
        }
    }

    fn check_finite(&self) -> Result<()> {
        let bad_h = self.h.values().iter().any(|v| !v.is_finite());
        let bad_c = self
            .c
            .as_ref()
            .map(|c| c.values().iter().any(|v| !v.is_finite()))
            .unwrap_or(false);
        if bad_h || bad_c {
            return Err(Error::InvalidState("cell state contains non-finite values".into()));
        }
        Ok(())
    }
}

/// Intermediate values recorded by a training-mode forward step, consumed by
/// [`cell_step_backward`].
#[derive(Debug, Clone)]
pub enum StepCache {
    Ffnn {
        input: Vec<f64>,
        output: Vec<f64>,
        act: Activation,
    },
    Rnn {
        /// `[x_t, h_prev]`
        joined: Vec<f64>,
        output: Vec<f64>,
    },
    Lstm {
        joined: Vec<f64>,
        input_gate: Vec<f64>,
        forget_gate: Vec<f64>,
        output_gate: Vec<f64>,
        candidate: Vec<f64>,
        cell_prev: Vec<f64>,
        cell_new: Vec<f64>,
    },
    Gru {
        joined: Vec<f64>,
        update_gate: Vec<f64>,
        reset_gate: Vec<f64>,
        /// `r ∘ h_prev`, the gated recurrent input of the candidate.
        gated_hidden: Vec<f64>,
        candidate: Vec<f64>,
    },
}

impl StepCache {
    fn kind(&self) -> CellKind {
        match self {
            StepCache::Ffnn { .. } => CellKind::Ffnn,
            StepCache::Rnn { .. } => CellKind::Rnn,
            StepCache::Lstm { .. } => CellKind::Lstm,
            StepCache::Gru { .. } => CellKind::Gru,
        }
    }
}

/// Gradients produced by one backward step. `gates` aligns with
/// `CellParams::gates`; recurrent grads are accumulated by the caller.
#[derive(Debug, Clone)]
pub struct StepGrads {
    pub gates: Vec<GateGrads>,
    pub grad_input: Vec<f64>,
    pub grad_hidden_prev: Vec<f64>,
    pub grad_cell_prev: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct GateGrads {
    pub weight: Matrix2D,
    pub bias: Vec<f64>,
}

fn join(x: &[f64], h: &[f64]) -> Vec<f64> {
    let mut u = Vec::with_capacity(x.len() + h.len());
    u.extend_from_slice(x);
    u.extend_from_slice(h);
    u
}

/// Pre-activation of one gate: `W·u + b`.
fn gate_preact(gate: &GateParams, u: &[f64]) -> Vec<f64> {
    let mut out = gate.bias.values().to_vec();
    matvec_add(&gate.weight, u, &mut out);
    out
}

fn map_inplace(v: &mut [f64], f: impl Fn(f64) -> f64) {
    for x in v.iter_mut() {
        *x = f(*x);
    }
}

/// Dense layer: `act(W·x + b)`.
pub fn ffnn_forward(x: &[f64], params: &CellParams, act: Activation) -> Result<Vector1D> {
    let (out, _) = ffnn_step(x, params, act, false)?;
    Ok(out)
}

/// Dense layer step with an optional backward cache.
pub fn ffnn_step(
    x: &[f64],
    params: &CellParams,
    act: Activation,
    training: bool,
) -> Result<(Vector1D, Option<StepCache>)> {
    expect_kind(params, CellKind::Ffnn)?;
    params.check_input(x)?;
    let mut out = gate_preact(&params.gates[0], x);
    map_inplace(&mut out, |v| numerics::apply_activation(v, act));
    let cache = training.then(|| StepCache::Ffnn { input: x.to_vec(), output: out.clone(), act });
    Ok((Vector1D::from(out), cache))
}

/// Vanilla recurrent step: `h_t = tanh(W·[x_t, h_prev] + b)`.
pub fn rnn_step(
    x: &[f64],
    h_prev: &[f64],
    params: &CellParams,
    training: bool,
) -> Result<(Vector1D, Option<StepCache>)> {
    expect_kind(params, CellKind::Rnn)?;
    params.check_input(x)?;
    params.check_hidden(h_prev)?;
    let u = join(x, h_prev);
    let mut h = gate_preact(&params.gates[0], &u);
    map_inplace(&mut h, tanh);
    let cache = training.then(|| StepCache::Rnn { joined: u, output: h.clone() });
    Ok((Vector1D::from(h), cache))
}

/// LSTM step. Sigmoid input/forget/output gates modulate a tanh candidate
/// into the memory cell; the hidden output is the gated tanh of the cell.
pub fn lstm_step(
    x: &[f64],
    state: &CellState,
    params: &CellParams,
    training: bool,
) -> Result<(CellState, Option<StepCache>)> {
    expect_kind(params, CellKind::Lstm)?;
    params.check_input(x)?;
    params.check_hidden(state.h.values())?;
    state.check_finite()?;
    let c_prev = state
        .c
        .as_ref()
        .ok_or_else(|| Error::InvalidState("lstm step requires a memory cell in the state".into()))?;
    params.check_hidden(c_prev.values())?;

    let u = join(x, state.h.values());
    let mut i = gate_preact(&params.gates[0], &u);
    let mut f = gate_preact(&params.gates[1], &u);
    let mut o = gate_preact(&params.gates[2], &u);
    let mut g = gate_preact(&params.gates[3], &u);
    map_inplace(&mut i, sigmoid);
    map_inplace(&mut f, sigmoid);
    map_inplace(&mut o, sigmoid);
    map_inplace(&mut g, tanh);

    let n = params.hidden_size;
    let mut c = vec![0.0; n];
    let mut h = vec![0.0; n];
    for k in 0..n {
        c[k] = f[k] * c_prev.values()[k] + i[k] * g[k];
        h[k] = o[k] * tanh(c[k]);
    }

    let cache = training.then(|| StepCache::Lstm {
        joined: u,
        input_gate: i,
        forget_gate: f,
        output_gate: o,
        candidate: g,
        cell_prev: c_prev.values().to_vec(),
        cell_new: c.clone(),
    });
    Ok((CellState { h: Vector1D::from(h), c: Some(Vector1D::from(c)) }, cache))
}

/// GRU step. The update gate interpolates between the candidate and the
/// previous hidden state, with the gate weighting the candidate side:
/// `h_t = z ∘ h~ + (1 - z) ∘ h_prev`.
pub fn gru_step(
    x: &[f64],
    h_prev: &[f64],
    params: &CellParams,
    training: bool,
) -> Result<(Vector1D, Option<StepCache>)> {
    expect_kind(params, CellKind::Gru)?;
    params.check_input(x)?;
    params.check_hidden(h_prev)?;

    let u = join(x, h_prev);
    let mut z = gate_preact(&params.gates[0], &u);
    let mut r = gate_preact(&params.gates[1], &u);
    map_inplace(&mut z, sigmoid);
    map_inplace(&mut r, sigmoid);

    let rh: Vec<f64> = r.iter().zip(h_prev).map(|(rv, hv)| rv * hv).collect();
    let u_h = join(x, &rh);
    let mut cand = gate_preact(&params.gates[2], &u_h);
    map_inplace(&mut cand, tanh);

    let h: Vec<f64> = z
        .iter()
        .zip(&cand)
        .zip(h_prev)
        .map(|((zv, cv), hv)| zv * cv + (1.0 - zv) * hv)
        .collect();

    let cache = training.then(|| StepCache::Gru {
        joined: u,
        update_gate: z,
        reset_gate: r,
        gated_hidden: rh,
        candidate: cand,
    });
    Ok((Vector1D::from(h), cache))
}

/// Kind-dispatched step over a [`CellState`], as used by the stacked model.
pub fn cell_step(
    params: &CellParams,
    x: &[f64],
    state: &CellState,
    training: bool,
) -> Result<(CellState, Option<StepCache>)> {
    match params.kind() {
        CellKind::Rnn => {
            let (h, cache) = rnn_step(x, state.h.values(), params, training)?;
            Ok((CellState { h, c: None }, cache))
        }
        CellKind::Gru => {
            let (h, cache) = gru_step(x, state.h.values(), params, training)?;
            Ok((CellState { h, c: None }, cache))
        }
        CellKind::Lstm => lstm_step(x, state, params, training),
        CellKind::Ffnn => Err(Error::InvalidArgument(
            "ffnn layers are not stepped over time; use ffnn_step".into(),
        )),
    }
}

fn expect_kind(params: &CellParams, kind: CellKind) -> Result<()> {
    if params.kind != kind {
        return Err(Error::InvalidArgument(format!(
            "expected {} params, got {}",
            kind.label(),
            params.kind.label()
        )));
    }
    Ok(())
}

/// Backpropagates one step.
///
/// `grad_hidden` is dL/dh_t; `grad_cell` is dL/dc_t and is only accepted for
/// LSTM caches (None is treated as zero). Returns exact analytic gradients
/// with respect to every gate parameter, the step input, and the previous
/// state. Accumulation across time steps is the caller's job.
pub fn cell_step_backward(
    cache: &StepCache,
    grad_hidden: &[f64],
    grad_cell: Option<&[f64]>,
    params: &CellParams,
) -> Result<StepGrads> {
    if cache.kind() != params.kind() {
        return Err(Error::InvalidArgument(format!(
            "cache kind {} does not match params kind {}",
            cache.kind().label(),
            params.kind().label()
        )));
    }
    if grad_hidden.len() != params.hidden_size {
        return Err(Error::Shape(format!(
            "grad_hidden[{}] does not match hidden size {}",
            grad_hidden.len(),
            params.hidden_size
        )));
    }
    if grad_cell.is_some() && params.kind() != CellKind::Lstm {
        return Err(Error::InvalidArgument(format!(
            "grad_cell is only meaningful for lstm, got {}",
            params.kind().label()
        )));
    }

    let n = params.hidden_size;
    let in_n = params.input_size;
    match cache {
        StepCache::Ffnn { input, output, act } => {
            let d_a: Vec<f64> = grad_hidden
                .iter()
                .zip(output)
                .map(|(g, y)| g * activation_grad_from_output(*y, *act))
                .collect();
            let mut gw = Matrix2D::zeros(n, in_n);
            outer_add(&mut gw, &d_a, input);
            let mut grad_input = vec![0.0; in_n];
            matvec_transpose_add(&params.gates[0].weight, &d_a, &mut grad_input);
            Ok(StepGrads {
                gates: vec![GateGrads { weight: gw, bias: d_a }],
                grad_input,
                grad_hidden_prev: Vec::new(),
                grad_cell_prev: None,
            })
        }
        StepCache::Rnn { joined, output } => {
            let d_a: Vec<f64> = grad_hidden
                .iter()
                .zip(output)
                .map(|(g, h)| g * (1.0 - h * h))
                .collect();
            let mut gw = Matrix2D::zeros(n, in_n + n);
            outer_add(&mut gw, &d_a, joined);
            let mut grad_joined = vec![0.0; in_n + n];
            matvec_transpose_add(&params.gates[0].weight, &d_a, &mut grad_joined);
            let grad_hidden_prev = grad_joined.split_off(in_n);
            Ok(StepGrads {
                gates: vec![GateGrads { weight: gw, bias: d_a }],
                grad_input: grad_joined,
                grad_hidden_prev,
                grad_cell_prev: None,
            })
        }
        StepCache::Lstm {
            joined,
            input_gate: i,
            forget_gate: f,
            output_gate: o,
            candidate: g,
            cell_prev,
            cell_new,
        } => {
            let zero;
            let gc: &[f64] = match grad_cell {
                Some(gc) => {
                    if gc.len() != n {
                        return Err(Error::Shape(format!(
                            "grad_cell[{}] does not match hidden size {n}",
                            gc.len()
                        )));
                    }
                    gc
                }
                None => {
                    zero = vec![0.0; n];
                    &zero
                }
            };
            let mut d_ai = vec![0.0; n];
            let mut d_af = vec![0.0; n];
            let mut d_ao = vec![0.0; n];
            let mut d_ag = vec![0.0; n];
            let mut grad_cell_prev = vec![0.0; n];
            for k in 0..n {
                let tc = tanh(cell_new[k]);
                let d_c = gc[k] + grad_hidden[k] * o[k] * (1.0 - tc * tc);
                d_ao[k] = grad_hidden[k] * tc * o[k] * (1.0 - o[k]);
                d_af[k] = d_c * cell_prev[k] * f[k] * (1.0 - f[k]);
                d_ai[k] = d_c * g[k] * i[k] * (1.0 - i[k]);
                d_ag[k] = d_c * i[k] * (1.0 - g[k] * g[k]);
                grad_cell_prev[k] = d_c * f[k];
            }
            let mut grad_joined = vec![0.0; in_n + n];
            let mut gates = Vec::with_capacity(4);
            for (d_a, gate) in [&d_ai, &d_af, &d_ao, &d_ag].into_iter().zip(params.gates.iter()) {
                let mut gw = Matrix2D::zeros(n, in_n + n);
                outer_add(&mut gw, d_a, joined);
                matvec_transpose_add(&gate.weight, d_a, &mut grad_joined);
                gates.push(GateGrads { weight: gw, bias: d_a.clone() });
            }
            let grad_hidden_prev = grad_joined.split_off(in_n);
            Ok(StepGrads {
                gates,
                grad_input: grad_joined,
                grad_hidden_prev,
                grad_cell_prev: Some(grad_cell_prev),
            })
        }
        StepCache::Gru { joined, update_gate: z, reset_gate: r, gated_hidden, candidate } => {
            let h_prev = &joined[in_n..];
            let mut d_az = vec![0.0; n];
            let mut d_ac = vec![0.0; n];
            for k in 0..n {
                d_az[k] = grad_hidden[k] * (candidate[k] - h_prev[k]) * z[k] * (1.0 - z[k]);
                d_ac[k] = grad_hidden[k] * z[k] * (1.0 - candidate[k] * candidate[k]);
            }

            // Candidate gate runs over [x, r ∘ h_prev].
            let u_h = join(&joined[..in_n], gated_hidden);
            let mut gw_c = Matrix2D::zeros(n, in_n + n);
            outer_add(&mut gw_c, &d_ac, &u_h);
            let mut grad_uh = vec![0.0; in_n + n];
            matvec_transpose_add(&params.gates[2].weight, &d_ac, &mut grad_uh);
            let grad_gated = grad_uh.split_off(in_n);
            let grad_x_cand = grad_uh;

            let mut d_ar = vec![0.0; n];
            for k in 0..n {
                d_ar[k] = grad_gated[k] * h_prev[k] * r[k] * (1.0 - r[k]);
            }

            let mut grad_joined = vec![0.0; in_n + n];
            let mut gw_z = Matrix2D::zeros(n, in_n + n);
            outer_add(&mut gw_z, &d_az, joined);
            matvec_transpose_add(&params.gates[0].weight, &d_az, &mut grad_joined);
            let mut gw_r = Matrix2D::zeros(n, in_n + n);
            outer_add(&mut gw_r, &d_ar, joined);
            matvec_transpose_add(&params.gates[1].weight, &d_ar, &mut grad_joined);

            let mut grad_hidden_prev = grad_joined.split_off(in_n);
            let mut grad_input = grad_joined;
            for k in 0..in_n {
                grad_input[k] += grad_x_cand[k];
            }
            for k in 0..n {
                grad_hidden_prev[k] += grad_hidden[k] * (1.0 - z[k]) + grad_gated[k] * r[k];
            }

            Ok(StepGrads {
                gates: vec![
                    GateGrads { weight: gw_z, bias: d_az },
                    GateGrads { weight: gw_r, bias: d_ar },
                    GateGrads { weight: gw_c, bias: d_ac },
                ],
                grad_input,
                grad_hidden_prev,
                grad_cell_prev: None,
            })
        }
    }
}
