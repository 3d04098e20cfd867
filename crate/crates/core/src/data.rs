//! Preparation of multi-station telemetry: grid-aligned frames, gap
//! handling, min-max scaling, lag selection by auto/cross-correlation,
//! supervised windowing and the chronological train/test split.
//!
//! Frames live on a fixed time grid; missing observations are carried as
//! NaN entries and every consumer treats them explicitly. CSV ingestion and
//! serialization live in the companion crate; this module works on frames
//! already in memory.

use alloc::format;
use alloc::string::{String, ToString};

use alloc::vec::Vec;
use core::ops::Range;

use crate::metrics::pearson;
use crate::{Error, Result};

/// What a channel measures. Inferred from the id prefix in the CSV schema:
/// `rain_*` is a rain gauge, anything else is a station water level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKind {
    Level,
    Rain,
}

impl ChannelKind {
    pub fn infer(channel_id: &str) -> ChannelKind {
        if channel_id.starts_with("rain_") {
            ChannelKind::Rain
        } else {
            ChannelKind::Level
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMeta {
    pub id: String,
    pub kind: ChannelKind,
}

/// Timestamped multivariate series on a fixed grid. Instant `t` maps to
/// `start_unix + t * step_seconds` (UTC seconds); entry NaN means missing.
#[derive(Debug, Clone)]
pub struct TimeSeriesFrame {
    start_unix: i64,
    step_seconds: u32,
    channels: Vec<ChannelMeta>,
    values: Vec<Vec<f64>>,
    len: usize,
}

/// Bitwise value equality, so missing entries compare equal and equality
/// means byte-identical content.
impl PartialEq for TimeSeriesFrame {
    fn eq(&self, other: &Self) -> bool {
        self.start_unix == other.start_unix
            && self.step_seconds == other.step_seconds
            && self.channels == other.channels
            && self.values.len() == other.values.len()
            && self.values.iter().zip(&other.values).all(|(a, b)| {
                a.len() == b.len()
                    && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            })
    }
}

pub const DEFAULT_STEP_SECONDS: u32 = 600;

impl TimeSeriesFrame {
    pub fn new(
        start_unix: i64,
        step_seconds: u32,
        channels: Vec<ChannelMeta>,
        values: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if step_seconds == 0 {
            return Err(Error::InvalidArgument("frame step must be positive".into()));
        }
        if channels.is_empty() || channels.len() != values.len() {
            return Err(Error::Shape(format!(
                "{} channel descriptors against {} value arrays",
                channels.len(),
                values.len()
            )));
        }
        let len = values[0].len();
        for (meta, column) in channels.iter().zip(&values) {
            if column.len() != len {
                return Err(Error::Shape(format!(
                    "channel `{}` has {} entries, expected {len}",
                    meta.id,
                    column.len()
                )));
            }
            for (row, v) in column.iter().enumerate() {
                if v.is_nan() {
                    continue;
                }
                if !v.is_finite() {
                    return Err(Error::Ingestion {
                        row,
                        message: format!("channel `{}` holds a non-finite value", meta.id),
                    });
                }
                if meta.kind == ChannelKind::Level && *v < 0.0 {
                    return Err(Error::Ingestion {
                        row,
                        message: format!("channel `{}` holds a negative level {v}", meta.id),
                    });
                }
            }
        }
        let mut ids: Vec<&str> = channels.iter().map(|c| c.id.as_str()).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("duplicate channel id".into()));
        }
        Ok(TimeSeriesFrame { start_unix, step_seconds, channels, values, len })
    }

    /// Internal constructor for frames in scaled space, where the
    /// nonnegative-level rule no longer applies.
    pub(crate) fn from_parts_unchecked(
        start_unix: i64,
        step_seconds: u32,
        channels: Vec<ChannelMeta>,
        values: Vec<Vec<f64>>,
    ) -> Self {
        let len = values[0].len();
        TimeSeriesFrame { start_unix, step_seconds, channels, values, len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn start_unix(&self) -> i64 {
        self.start_unix
    }

    pub fn step_seconds(&self) -> u32 {
        self.step_seconds
    }

    pub fn timestamp_at(&self, index: usize) -> i64 {
        self.start_unix + index as i64 * self.step_seconds as i64
    }

    /// Grid index of a UTC timestamp, if it lies exactly on the grid.
    pub fn index_of(&self, unix: i64) -> Option<usize> {
        let delta = unix - self.start_unix;
        if delta < 0 || delta % self.step_seconds as i64 != 0 {
            return None;
        }
        let idx = (delta / self.step_seconds as i64) as usize;
        (idx < self.len).then_some(idx)
    }

    pub fn channels(&self) -> &[ChannelMeta] {
        &self.channels
    }

    pub fn channel_index(&self, id: &str) -> Option<usize> {
        self.channels.iter().position(|c| c.id == id)
    }

    pub fn column(&self, channel: usize) -> &[f64] {
        &self.values[channel]
    }

    pub fn level_channels(&self) -> impl Iterator<Item = (usize, &ChannelMeta)> {
        self.channels.iter().enumerate().filter(|(_, c)| c.kind == ChannelKind::Level)
    }

    pub fn rain_channels(&self) -> impl Iterator<Item = (usize, &ChannelMeta)> {
        self.channels.iter().enumerate().filter(|(_, c)| c.kind == ChannelKind::Rain)
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().flatten().filter(|v| v.is_nan()).count()
    }
}

/// Forward-fills missing runs of at most `max_gap` steps per channel.
/// Longer runs (and leading gaps with no predecessor) stay missing and are
/// later excluded by windowing.
pub fn fill_gaps(frame: &TimeSeriesFrame, max_gap: usize) -> TimeSeriesFrame {
    let mut values = frame.values.clone();
    for column in values.iter_mut() {
        let mut t = 0;
        while t < column.len() {
            if !column[t].is_nan() {
                t += 1;
                continue;
            }
            let run_start = t;
            while t < column.len() && column[t].is_nan() {
                t += 1;
            }
            let run_len = t - run_start;
            if run_start > 0 && run_len <= max_gap {
                let fill = column[run_start - 1];
                for v in &mut column[run_start..t] {
                    *v = fill;
                }
            }
        }
    }
    TimeSeriesFrame {
        start_unix: frame.start_unix,
        step_seconds: frame.step_seconds,
        channels: frame.channels.clone(),
        values,
        len: frame.len,
    }
}

/// Per-channel min/max fitted on training rows only.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalerParams {
    entries: Vec<(String, f64, f64)>,
}

impl ScalerParams {
    pub fn from_entries(entries: Vec<(String, f64, f64)>) -> Result<Self> {
        for (id, min, max) in &entries {
            if !(max > min) {
                return Err(Error::Degenerate(format!(
                    "scaler channel `{id}` has max {max} <= min {min}"
                )));
            }
        }
        Ok(ScalerParams { entries })
    }

    pub fn entries(&self) -> &[(String, f64, f64)] {
        &self.entries
    }

    pub fn bounds(&self, channel_id: &str) -> Option<(f64, f64)> {
        self.entries.iter().find(|(id, _, _)| id == channel_id).map(|&(_, lo, hi)| (lo, hi))
    }
}

/// Fits per-channel min/max over the training rows.
pub fn fit_scaler(frame: &TimeSeriesFrame, train_range: Range<usize>) -> Result<ScalerParams> {
    if train_range.is_empty() || train_range.end > frame.len() {
        return Err(Error::InvalidArgument(format!(
            "train range {}..{} invalid for frame of length {}",
            train_range.start,
            train_range.end,
            frame.len()
        )));
    }
    let mut entries = Vec::with_capacity(frame.channels.len());
    for (c, meta) in frame.channels.iter().enumerate() {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &v in &frame.values[c][train_range.clone()] {
            if v.is_nan() {
                continue;
            }
            min = min.min(v);
            max = max.max(v);
        }
        if !min.is_finite() {
            return Err(Error::Degenerate(format!(
                "channel `{}` has no observations on the training range",
                meta.id
            )));
        }
        if !(max > min) {
            return Err(Error::Degenerate(format!(
                "channel `{}` is constant on the training range",
                meta.id
            )));
        }
        entries.push((meta.id.clone(), min, max));
    }
    ScalerParams::from_entries(entries)
}

/// Maps every observation to `(x - min) / (max - min)`. Values outside the
/// fitted range land outside `[0, 1]`; nothing is clamped.
pub fn scale(frame: &TimeSeriesFrame, scaler: &ScalerParams) -> Result<TimeSeriesFrame> {
    let mut values = Vec::with_capacity(frame.channels.len());
    for (c, meta) in frame.channels.iter().enumerate() {
        let (min, max) = scaler.bounds(&meta.id).ok_or_else(|| {
            Error::InvalidArgument(format!("scaler has no entry for channel `{}`", meta.id))
        })?;
        let span = max - min;
        values.push(frame.values[c].iter().map(|v| (v - min) / span).collect());
    }
    Ok(TimeSeriesFrame::from_parts_unchecked(
        frame.start_unix,
        frame.step_seconds,
        frame.channels.clone(),
        values,
    ))
}

/// Inverse of [`scale`] for one channel's values.
pub fn unscale(values: &[f64], scaler: &ScalerParams, channel_id: &str) -> Result<Vec<f64>> {
    let (min, max) = scaler.bounds(channel_id).ok_or_else(|| {
        Error::InvalidArgument(format!("scaler has no entry for channel `{channel_id}`"))
    })?;
    let span = max - min;
    Ok(values.iter().map(|v| min + v * span).collect())
}

/// Collects `(x[t - lag], x[t])` pairs with missing entries excluded
/// pairwise, then correlates them.
fn lagged_correlation(lead: &[f64], follow: &[f64], lag: usize) -> Result<f64> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for t in lag..follow.len() {
        let x = lead[t - lag];
        let y = follow[t];
        if x.is_nan() || y.is_nan() {
            continue;
        }
        xs.push(x);
        ys.push(y);
    }
    if xs.len() < 3 {
        return Err(Error::Degenerate(format!("only {} complete pairs at lag {lag}", xs.len())));
    }
    pearson(&xs, &ys)
}

/// Autocorrelation at lags `0..=max_lag`.
pub fn autocorrelation(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if series.len() <= max_lag + 2 {
        return Err(Error::InvalidArgument(format!(
            "series of length {} cannot support lag {max_lag}",
            series.len()
        )));
    }
    (0..=max_lag).map(|lag| lagged_correlation(series, series, lag)).collect()
}

/// Cross-correlation of `a` leading `b`, at lags `0..=max_lag`: entry `l`
/// correlates `a[t - l]` with `b[t]`, so a delayed copy peaks at its delay.
pub fn cross_correlation(a: &[f64], b: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!("series lengths {} and {} differ", a.len(), b.len())));
    }
    if a.len() <= max_lag + 2 {
        return Err(Error::InvalidArgument(format!(
            "series of length {} cannot support lag {max_lag}",
            a.len()
        )));
    }
    (0..=max_lag).map(|lag| lagged_correlation(a, b, lag)).collect()
}

/// Knobs of the lag-selection procedure. All defaults are overridable from
/// the CLI config.
#[derive(Debug, Clone, PartialEq)]
pub struct LagPolicy {
    /// A level channel keeps lags `0..=L` where `L` is the largest lag whose
    /// autocorrelation still reaches this threshold.
    pub acf_threshold: f64,
    /// Hard cap on any selected lag; the lookback never exceeds `cap + 1`.
    pub lookback_cap: usize,
    /// How many significant cross-correlation lags each rain channel keeps
    /// per target station.
    pub rain_top: usize,
}

impl Default for LagPolicy {
    fn default() -> Self {
        // 1/e threshold; 24 steps = 4 h at 10-min resolution.
        LagPolicy { acf_threshold: 1.0 / core::f64::consts::E, lookback_cap: 24, rain_top: 3 }
    }
}

/// Per-channel selected input lags. The lookback window length is
/// `1 + max(selected lag)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LagSpec {
    entries: Vec<(String, Vec<usize>)>,
}

impl LagSpec {
    pub fn from_entries(entries: Vec<(String, Vec<usize>)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Empty("lag spec selects no channels".into()));
        }
        for (id, lags) in &entries {
            if lags.is_empty() {
                return Err(Error::InvalidArgument(format!("channel `{id}` selects no lags")));
            }
            if lags.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidArgument(format!(
                    "channel `{id}` lags must be strictly ascending"
                )));
            }
        }
        Ok(LagSpec { entries })
    }

    pub fn entries(&self) -> &[(String, Vec<usize>)] {
        &self.entries
    }

    pub fn lags_for(&self, channel_id: &str) -> Option<&[usize]> {
        self.entries.iter().find(|(id, _)| id == channel_id).map(|(_, l)| l.as_slice())
    }

    pub fn channel_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(id, _)| id.as_str())
    }

    pub fn lookback(&self) -> usize {
        1 + self.entries.iter().flat_map(|(_, lags)| lags.iter().copied()).max().unwrap_or(0)
    }
}

/// Selects input channels and lags on the training range.
///
/// Level channels keep the contiguous prefix of lags whose autocorrelation
/// stays at or above the policy threshold (capped). Rain channels keep, per
/// station, the strongest lags whose |cross-correlation| clears the
/// 1.96/sqrt(N) significance bound; a rain channel with no significant lag
/// against any station is dropped. Ties prefer the smaller lag.
pub fn select_lags(
    frame: &TimeSeriesFrame,
    train_range: Range<usize>,
    policy: &LagPolicy,
) -> Result<LagSpec> {
    if train_range.is_empty() || train_range.end > frame.len() {
        return Err(Error::InvalidArgument(format!(
            "train range {}..{} invalid for frame of length {}",
            train_range.start,
            train_range.end,
            frame.len()
        )));
    }
    let n = train_range.len();
    if n <= policy.lookback_cap + 2 {
        return Err(Error::InvalidArgument(format!(
            "training range of {n} rows cannot support lookback cap {}",
            policy.lookback_cap
        )));
    }
    let significance = 1.96 / crate::numerics::real::sqrt(n as f64);

    let mut entries = Vec::new();
    for (c, meta) in frame.channels.iter().enumerate() {
        let series = &frame.values[c][train_range.clone()];
        match meta.kind {
            ChannelKind::Level => {
                let acf = autocorrelation(series, policy.lookback_cap)?;
                let largest = acf
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| **v >= policy.acf_threshold)
                    .map(|(lag, _)| lag)
                    .max()
                    .unwrap_or(0);
                entries.push((meta.id.clone(), (0..=largest).collect()));
            }
            ChannelKind::Rain => {
                let mut selected: Vec<usize> = Vec::new();
                for (s, _) in frame.level_channels() {
                    let target = &frame.values[s][train_range.clone()];
                    let ccf = cross_correlation(series, target, policy.lookback_cap)?;
                    let mut candidates: Vec<(usize, f64)> = ccf
                        .iter()
                        .enumerate()
                        .filter(|(_, v)| v.abs() > significance)
                        .map(|(lag, v)| (lag, v.abs()))
                        .collect();
                    candidates.sort_by(|a, b| {
                        b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0))
                    });
                    for (lag, _) in candidates.into_iter().take(policy.rain_top) {
                        if !selected.contains(&lag) {
                            selected.push(lag);
                        }
                    }
                }
                if !selected.is_empty() {
                    selected.sort_unstable();
                    entries.push((meta.id.clone(), selected));
                }
            }
        }
    }
    if entries.is_empty() {
        return Err(Error::Empty("no channel passed lag selection".into()));
    }
    LagSpec::from_entries(entries)
}

/// Supervised samples: dense lookback windows against per-station targets
/// at a fixed horizon. Window rows are time steps, columns follow the lag
/// spec's channel order; `anchors` keeps each sample's source index `t`
/// (the last input row).
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset {
    inputs: Vec<f64>,
    targets: Vec<f64>,
    anchors: Vec<usize>,
    lookback: usize,
    horizon: usize,
    input_channel_ids: Vec<String>,
    target_channel_ids: Vec<String>,
}

impl WindowedDataset {
    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    pub fn lookback(&self) -> usize {
        self.lookback
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn input_channels(&self) -> usize {
        self.input_channel_ids.len()
    }

    pub fn num_stations(&self) -> usize {
        self.target_channel_ids.len()
    }

    pub fn input_channel_ids(&self) -> &[String] {
        &self.input_channel_ids
    }

    pub fn target_channel_ids(&self) -> &[String] {
        &self.target_channel_ids
    }

    pub fn anchors(&self) -> &[usize] {
        &self.anchors
    }

    /// Flattened `lookback x input_channels` window of sample `i`.
    pub fn window(&self, i: usize) -> &[f64] {
        let w = self.lookback * self.input_channel_ids.len();
        &self.inputs[i * w..(i + 1) * w]
    }

    pub fn target(&self, i: usize) -> &[f64] {
        let s = self.target_channel_ids.len();
        &self.targets[i * s..(i + 1) * s]
    }

    fn slice(&self, range: Range<usize>) -> WindowedDataset {
        let w = self.lookback * self.input_channel_ids.len();
        let s = self.target_channel_ids.len();
        WindowedDataset {
            inputs: self.inputs[range.start * w..range.end * w].to_vec(),
            targets: self.targets[range.start * s..range.end * s].to_vec(),
            anchors: self.anchors[range.clone()].to_vec(),
            lookback: self.lookback,
            horizon: self.horizon,
            input_channel_ids: self.input_channel_ids.clone(),
            target_channel_ids: self.target_channel_ids.clone(),
        }
    }
}

/// Builds supervised windows from a (typically scaled, gap-handled) frame.
/// A sample exists at index `t` when every input channel is fully observed
/// over `[t - lookback + 1, t]` and every target channel is observed at
/// `t + horizon`.
pub fn make_windows(
    frame: &TimeSeriesFrame,
    lag_spec: &LagSpec,
    horizon: usize,
    target_channels: &[String],
) -> Result<WindowedDataset> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    if target_channels.is_empty() {
        return Err(Error::InvalidArgument("at least one target channel is required".into()));
    }
    let lookback = lag_spec.lookback();
    let input_indices: Vec<usize> = lag_spec
        .channel_ids()
        .map(|id| {
            frame
                .channel_index(id)
                .ok_or_else(|| Error::InvalidArgument(format!("frame lacks input channel `{id}`")))
        })
        .collect::<Result<_>>()?;
    let target_indices: Vec<usize> = target_channels
        .iter()
        .map(|id| {
            frame
                .channel_index(id)
                .ok_or_else(|| Error::InvalidArgument(format!("frame lacks target channel `{id}`")))
        })
        .collect::<Result<_>>()?;

    let channels = input_indices.len();
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    let mut anchors = Vec::new();
    if frame.len() > horizon {
        'sample: for t in (lookback - 1)..(frame.len() - horizon) {
            for &c in &input_indices {
                if frame.values[c][t + 1 - lookback..=t].iter().any(|v| v.is_nan()) {
                    continue 'sample;
                }
            }
            for &c in &target_indices {
                if frame.values[c][t + horizon].is_nan() {
                    continue 'sample;
                }
            }
            for step in t + 1 - lookback..=t {
                for &c in &input_indices {
                    inputs.push(frame.values[c][step]);
                }
            }
            for &c in &target_indices {
                targets.push(frame.values[c][t + horizon]);
            }
            anchors.push(t);
        }
    }
    if anchors.is_empty() {
        return Err(Error::Empty(format!(
            "no eligible windows (frame length {}, lookback {lookback}, horizon {horizon})",
            frame.len()
        )));
    }
    let _ = channels;
    Ok(WindowedDataset {
        inputs,
        targets,
        anchors,
        lookback,
        horizon,
        input_channel_ids: lag_spec.channel_ids().map(|s| s.to_string()).collect(),
        target_channel_ids: target_channels.to_vec(),
    })
}

/// Splits samples chronologically: the first `floor(n * fraction)` go to
/// the training side, the rest to the test side.
pub fn chrono_split(
    dataset: &WindowedDataset,
    train_fraction: f64,
) -> Result<(WindowedDataset, WindowedDataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction must lie strictly between 0 and 1, got {train_fraction}"
        )));
    }
    let n = dataset.len();
    let n_train = ((n as f64) * train_fraction) as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::Empty(format!(
            "chronological split of {n} samples at fraction {train_fraction} leaves one side empty"
        )));
    }
    Ok((dataset.slice(0..n_train), dataset.slice(n_train..n)))
}
