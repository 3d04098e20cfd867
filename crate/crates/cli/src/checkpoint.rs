//! Self-describing text checkpoints. One file carries the model config,
//! the fitted scaler, the lag spec and every parameter array, so a
//! checkpoint alone is enough to forecast against fresh telemetry.
//!
//! Values are written in shortest exact decimal form and parse back to the
//! identical bits; saving and loading round-trips a model bit-for-bit.
//! The grammar is strict: sections in a fixed order, no unknown fields,
//! an explicit `end` marker so truncation is always detected. Parse errors
//! report the byte offset of the offending line.

use std::path::Path;

use sewercast_core::cells::{CellKind, CellParams, GateParams};
use sewercast_core::data::{LagSpec, ScalerParams};
use sewercast_core::model::{Model, ModelConfig};
use sewercast_core::numerics::{Matrix2D, Vector1D};

use crate::error::{CliError, Result};

pub const FORMAT_TAG: &str = "sewercast-checkpoint";
pub const VERSION: u32 = 1;

/// Everything a trained run needs to be reused.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: Model,
    pub scaler: ScalerParams,
    pub lag_spec: LagSpec,
}

pub fn encode(checkpoint: &Checkpoint) -> String {
    let mut out = String::new();
    let cfg = checkpoint.model.config();
    out.push_str(&format!("format {FORMAT_TAG}\n"));
    out.push_str(&format!("version {VERSION}\n"));
    out.push_str(&format!("config.cell_kind {}\n", cfg.cell_kind.label()));
    out.push_str(&format!("config.hidden_size {}\n", cfg.hidden_size));
    out.push_str(&format!("config.num_recurrent_layers {}\n", cfg.num_recurrent_layers));
    out.push_str(&format!("config.num_stations {}\n", cfg.num_stations));
    out.push_str(&format!("config.lookback {}\n", cfg.lookback));
    out.push_str(&format!("config.horizon {}\n", cfg.horizon));
    out.push_str(&format!("config.dropout_ratio {}\n", cfg.dropout_ratio));
    out.push_str(&format!("config.input_channels {}\n", cfg.input_channels));
    out.push_str(&format!("config.seed {}\n", cfg.seed));
    for (id, min, max) in checkpoint.scaler.entries() {
        out.push_str(&format!("scaler {id} {min} {max}\n"));
    }
    for (id, lags) in checkpoint.lag_spec.entries() {
        let lags: Vec<String> = lags.iter().map(|l| l.to_string()).collect();
        out.push_str(&format!("lag_spec {id} {}\n", lags.join(",")));
    }
    for (name, values, rows, cols) in named_params(&checkpoint.model) {
        out.push_str(&format!("param {name} {rows} {cols}\n"));
        let mut first = true;
        for v in values {
            if !first {
                out.push(' ');
            }
            out.push_str(&format!("{v}"));
            first = false;
        }
        out.push('\n');
    }
    out.push_str("end\n");
    out
}

/// Canonical parameter naming: `layer<i>.<gate>.{weight,bias}` in depth and
/// gate order, then `output.{weight,bias}`.
fn named_params(model: &Model) -> Vec<(String, &[f64], usize, usize)> {
    let mut out = Vec::new();
    for (i, layer) in model.layers().iter().enumerate() {
        for (gate, name) in layer.gates().iter().zip(layer.kind().gate_names()) {
            out.push((
                format!("layer{i}.{name}.weight"),
                gate.weight.values(),
                gate.weight.rows(),
                gate.weight.cols(),
            ));
            out.push((format!("layer{i}.{name}.bias"), gate.bias.values(), gate.bias.len(), 1));
        }
    }
    let w = model.output_weight();
    out.push(("output.weight".to_string(), w.values(), w.rows(), w.cols()));
    let b = model.output_bias();
    out.push(("output.bias".to_string(), b.values(), b.len(), 1));
    out
}

struct Cursor<'a> {
    text: &'a str,
    offset: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn error(&self, offset: usize, message: impl Into<String>) -> CliError {
        CliError::Checkpoint { path: self.path.to_path_buf(), offset, message: message.into() }
    }

    /// Next line and the byte offset where it starts.
    fn next_line(&mut self) -> Option<(usize, &'a str)> {
        if self.offset >= self.text.len() {
            return None;
        }
        let start = self.offset;
        let rest = &self.text[start..];
        let (line, consumed) = match rest.find('\n') {
            Some(pos) => (&rest[..pos], pos + 1),
            None => (rest, rest.len()),
        };
        self.offset += consumed;
        Some((start, line))
    }

    fn expect_line(&mut self, what: &str) -> Result<(usize, &'a str)> {
        let eof = self.text.len();
        self.next_line().ok_or_else(|| {
            self.truncated(eof, what)
        })
    }

    fn truncated(&self, offset: usize, what: &str) -> CliError {
        self.error(offset, format!("file truncated: expected {what}"))
    }
}

pub fn decode(text: &str, path: &Path) -> Result<Checkpoint> {
    let mut cur = Cursor { text, offset: 0, path };

    let (off, line) = cur.expect_line("format line")?;
    if line != format!("format {FORMAT_TAG}") {
        return Err(cur.error(off, format!("expected `format {FORMAT_TAG}`, got `{line}`")));
    }
    let (off, line) = cur.expect_line("version line")?;
    let version: u32 = line
        .strip_prefix("version ")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| cur.error(off, format!("expected `version <n>`, got `{line}`")))?;
    if version != VERSION {
        return Err(cur.error(off, format!("unsupported version {version}, this build reads {VERSION}")));
    }

    // Fixed-order config block.
    fn field(cur: &mut Cursor, name: &str) -> Result<(usize, String)> {
        let (off, line) = cur.expect_line("config field")?;
        let prefix = format!("config.{name} ");
        match line.strip_prefix(&prefix) {
            Some(v) => Ok((off, v.to_string())),
            None => Err(cur.error(off, format!("expected `config.{name} <value>`, got `{line}`"))),
        }
    }
    fn parse_num<T: core::str::FromStr>(
        cur: &Cursor,
        name: &str,
        (off, v): (usize, String),
    ) -> Result<T> {
        v.parse().map_err(|_| cur.error(off, format!("config.{name}: bad value `{v}`")))
    }
    let (kind_off, kind_text) = field(&mut cur, "cell_kind")?;
    let cell_kind =
        CellKind::parse(&kind_text).map_err(|e| cur.error(kind_off, format!("{e}")))?;
    let hidden_size = field(&mut cur, "hidden_size")?;
    let num_layers = field(&mut cur, "num_recurrent_layers")?;
    let num_stations = field(&mut cur, "num_stations")?;
    let lookback = field(&mut cur, "lookback")?;
    let horizon = field(&mut cur, "horizon")?;
    let dropout = field(&mut cur, "dropout_ratio")?;
    let input_channels = field(&mut cur, "input_channels")?;
    let seed = field(&mut cur, "seed")?;
    let config = ModelConfig {
        cell_kind,
        hidden_size: parse_num(&cur, "hidden_size", hidden_size)?,
        num_recurrent_layers: parse_num(&cur, "num_recurrent_layers", num_layers)?,
        num_stations: parse_num(&cur, "num_stations", num_stations)?,
        lookback: parse_num(&cur, "lookback", lookback)?,
        horizon: parse_num(&cur, "horizon", horizon)?,
        dropout_ratio: parse_num(&cur, "dropout_ratio", dropout)?,
        input_channels: parse_num(&cur, "input_channels", input_channels)?,
        seed: parse_num(&cur, "seed", seed)?,
    };

    // Scaler entries, then lag_spec entries, then params, then `end`.
    let mut scaler_entries = Vec::new();
    let mut lag_entries: Vec<(String, Vec<usize>)> = Vec::new();
    let mut params: Vec<(String, Vec<f64>, usize, usize)> = Vec::new();

    #[derive(PartialEq, PartialOrd)]
    enum Section {
        Scaler,
        Lags,
        Params,
    }
    let mut section = Section::Scaler;

    loop {
        let (off, line) = cur.expect_line("`end` marker")?;
        if line == "end" {
            break;
        }
        if let Some(rest) = line.strip_prefix("scaler ") {
            if section > Section::Scaler {
                return Err(cur.error(off, "scaler entry after a later section"));
            }
            let parts: Vec<&str> = rest.split(' ').collect();
            if parts.len() != 3 {
                return Err(cur.error(off, format!("expected `scaler <id> <min> <max>`, got `{line}`")));
            }
            let min: f64 = parts[1]
                .parse()
                .map_err(|_| cur.error(off, format!("scaler `{}`: bad min `{}`", parts[0], parts[1])))?;
            let max: f64 = parts[2]
                .parse()
                .map_err(|_| cur.error(off, format!("scaler `{}`: bad max `{}`", parts[0], parts[2])))?;
            scaler_entries.push((parts[0].to_string(), min, max));
        } else if let Some(rest) = line.strip_prefix("lag_spec ") {
            if section > Section::Lags {
                return Err(cur.error(off, "lag_spec entry after the parameter section"));
            }
            section = Section::Lags;
            let (id, lags) = rest
                .split_once(' ')
                .ok_or_else(|| cur.error(off, format!("expected `lag_spec <id> <lags>`, got `{line}`")))?;
            let lags: Vec<usize> = lags
                .split(',')
                .map(|l| l.parse().map_err(|_| cur.error(off, format!("lag_spec `{id}`: bad lag `{l}`"))))
                .collect::<Result<_>>()?;
            lag_entries.push((id.to_string(), lags));
        } else if let Some(rest) = line.strip_prefix("param ") {
            section = Section::Params;
            let parts: Vec<&str> = rest.split(' ').collect();
            if parts.len() != 3 {
                return Err(cur.error(off, format!("expected `param <name> <rows> <cols>`, got `{line}`")));
            }
            let rows: usize = parts[1]
                .parse()
                .map_err(|_| cur.error(off, format!("param `{}`: bad rows `{}`", parts[0], parts[1])))?;
            let cols: usize = parts[2]
                .parse()
                .map_err(|_| cur.error(off, format!("param `{}`: bad cols `{}`", parts[0], parts[2])))?;
            let (voff, vline) = cur.expect_line("parameter values")?;
            let mut values = Vec::with_capacity(rows * cols);
            for field in vline.split(' ') {
                let v: f64 = field
                    .parse()
                    .map_err(|_| cur.error(voff, format!("param `{}`: bad value `{field}`", parts[0])))?;
                values.push(v);
            }
            if values.len() != rows * cols {
                return Err(cur.error(voff, format!(
                    "param `{}`: expected {} values, found {}",
                    parts[0],
                    rows * cols,
                    values.len()
                )));
            }
            params.push((parts[0].to_string(), values, rows, cols));
        } else {
            return Err(cur.error(off, format!("unknown field `{line}`")));
        }
    }
    if let Some((off, line)) = cur.next_line() {
        if !line.is_empty() || cur.next_line().is_some() {
            return Err(cur.error(off, "trailing content after `end`"));
        }
    }

    let scaler = ScalerParams::from_entries(scaler_entries).map_err(CliError::from)?;
    let lag_spec = LagSpec::from_entries(lag_entries).map_err(CliError::from)?;
    let model = assemble_model(config, params).map_err(|m| cur.error(text.len(), m))?;
    Ok(Checkpoint { model, scaler, lag_spec })
}

type ParamMap = std::collections::BTreeMap<String, (Vec<f64>, usize, usize)>;

fn take_matrix(by_name: &mut ParamMap, name: &str) -> std::result::Result<Matrix2D, String> {
    let (values, rows, cols) =
        by_name.remove(name).ok_or_else(|| format!("missing parameter `{name}`"))?;
    Matrix2D::from_values(rows, cols, values).map_err(|e| format!("parameter `{name}`: {e}"))
}

fn take_vector(by_name: &mut ParamMap, name: &str) -> std::result::Result<Vector1D, String> {
    let (values, _, cols) =
        by_name.remove(name).ok_or_else(|| format!("missing parameter `{name}`"))?;
    if cols != 1 {
        return Err(format!("parameter `{name}` should be a vector"));
    }
    Vector1D::from_values(values).map_err(|e| format!("parameter `{name}`: {e}"))
}

fn assemble_model(
    config: ModelConfig,
    params: Vec<(String, Vec<f64>, usize, usize)>,
) -> std::result::Result<Model, String> {
    let mut by_name: ParamMap = params
        .into_iter()
        .map(|(name, values, rows, cols)| (name, (values, rows, cols)))
        .collect();

    let mut layers = Vec::with_capacity(config.num_recurrent_layers);
    for i in 0..config.num_recurrent_layers {
        let mut gates = Vec::new();
        for gate in config.cell_kind.gate_names() {
            let weight = take_matrix(&mut by_name, &format!("layer{i}.{gate}.weight"))?;
            let bias = take_vector(&mut by_name, &format!("layer{i}.{gate}.bias"))?;
            gates.push(GateParams { weight, bias });
        }
        let input_size = gates[0].weight.cols()
            - if config.cell_kind == CellKind::Ffnn { 0 } else { config.hidden_size };
        let layer = CellParams::new(config.cell_kind, input_size, config.hidden_size, gates)
            .map_err(|e| format!("layer {i}: {e}"))?;
        layers.push(layer);
    }
    let output_weight = take_matrix(&mut by_name, "output.weight")?;
    let output_bias = take_vector(&mut by_name, "output.bias")?;
    if let Some(name) = by_name.keys().next() {
        return Err(format!("unexpected parameter `{name}`"));
    }
    Model::from_parts(config, layers, output_weight, output_bias).map_err(|e| format!("{e}"))
}

pub fn save_checkpoint(path: &Path, checkpoint: &Checkpoint) -> Result<()> {
    std::fs::write(path, encode(checkpoint)).map_err(|e| CliError::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    decode(&text, path)
}
