//! Evaluation metrics for forecast quality — correlation coefficient, root
//! mean squared error and Nash–Sutcliffe efficiency — plus the per-station
//! report the CLI emits.
//!
//! Degenerate inputs (zero variance, constant observations) raise errors
//! rather than returning sentinels; a silent NaN would corrupt every later
//! comparison in the tuner.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::data::{unscale, ScalerParams, WindowedDataset};
use crate::model::{forward, Model};
use crate::numerics::real;
use crate::{Error, Result};

/// Pearson correlation, two-pass for numerical stability.
pub(crate) fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!("series lengths {} and {} differ", a.len(), b.len())));
    }
    if a.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "correlation needs at least 2 points, got {}",
            a.len()
        )));
    }
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let dx = x - mean_a;
        let dy = y - mean_b;
        cov += dx * dy;
        var_a += dx * dx;
        var_b += dy * dy;
    }
    if var_a == 0.0 || var_b == 0.0 {
        return Err(Error::Degenerate("correlation of a zero-variance series".into()));
    }
    Ok((cov / (real::sqrt(var_a) * real::sqrt(var_b))).clamp(-1.0, 1.0))
}

/// Correlation coefficient between observed and simulated series.
pub fn cc(obs: &[f64], sim: &[f64]) -> Result<f64> {
    pearson(sim, obs)
}

/// Root mean squared error, in the units of the inputs.
pub fn rmse(obs: &[f64], sim: &[f64]) -> Result<f64> {
    if obs.len() != sim.len() {
        return Err(Error::Shape(format!("series lengths {} and {} differ", obs.len(), sim.len())));
    }
    if obs.is_empty() {
        return Err(Error::InvalidArgument("rmse of empty series".into()));
    }
    let sum: f64 = obs.iter().zip(sim).map(|(o, s)| (o - s) * (o - s)).sum();
    Ok(real::sqrt(sum / obs.len() as f64))
}

/// Nash–Sutcliffe efficiency: 1 is a perfect fit, 0 matches the mean
/// predictor, negative values do worse than the mean.
pub fn nse(obs: &[f64], sim: &[f64]) -> Result<f64> {
    if obs.len() != sim.len() {
        return Err(Error::Shape(format!("series lengths {} and {} differ", obs.len(), sim.len())));
    }
    if obs.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "nse needs at least 2 points, got {}",
            obs.len()
        )));
    }
    let mean = obs.iter().sum::<f64>() / obs.len() as f64;
    let residual: f64 = obs.iter().zip(sim).map(|(o, s)| (o - s) * (o - s)).sum();
    let spread: f64 = obs.iter().map(|o| (o - mean) * (o - mean)).sum();
    if spread == 0.0 {
        return Err(Error::Degenerate("nse of constant observations".into()));
    }
    Ok(1.0 - residual / spread)
}

/// Metric triple for one station.
#[derive(Debug, Clone, PartialEq)]
pub struct StationMetrics {
    pub cc: f64,
    pub rmse: f64,
    pub nse: f64,
}

/// One row of the report: either the metric triple or the error that
/// prevented it, never both.
#[derive(Debug, Clone, PartialEq)]
pub struct StationEntry {
    pub station_id: String,
    pub n: usize,
    pub outcome: core::result::Result<StationMetrics, String>,
}

/// Per-station metrics for one model at one horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub model_label: String,
    pub horizon: usize,
    pub stations: Vec<StationEntry>,
}

impl MetricsReport {
    /// Mean NSE over the stations that produced metrics.
    pub fn mean_nse(&self) -> Option<f64> {
        let values: Vec<f64> =
            self.stations.iter().filter_map(|s| s.outcome.as_ref().ok().map(|m| m.nse)).collect();
        if values.is_empty() {
            None
        } else {
            Some(values.iter().sum::<f64>() / values.len() as f64)
        }
    }

    pub fn station(&self, id: &str) -> Option<&StationEntry> {
        self.stations.iter().find(|s| s.station_id == id)
    }
}

/// Builds the per-station report from paired observed/simulated series in
/// physical units. Degenerate stations are recorded in place; the rest of
/// the report is unaffected.
pub fn report_from_series(
    model_label: &str,
    horizon: usize,
    stations: &[(String, Vec<f64>, Vec<f64>)],
) -> MetricsReport {
    let entries = stations
        .iter()
        .map(|(id, obs, sim)| {
            let outcome = cc(obs, sim).and_then(|cc_v| {
                Ok(StationMetrics { cc: cc_v, rmse: rmse(obs, sim)?, nse: nse(obs, sim)? })
            });
            StationEntry {
                station_id: id.clone(),
                n: obs.len(),
                outcome: outcome.map_err(|e| format!("{e}")),
            }
        })
        .collect();
    MetricsReport { model_label: model_label.into(), horizon, stations: entries }
}

/// Runs the model over a windowed dataset and reports per-station metrics
/// in physical units (both forecasts and targets are unscaled first).
pub fn evaluate(model: &Model, dataset: &WindowedDataset, scaler: &ScalerParams) -> Result<MetricsReport> {
    if dataset.horizon() != model.config().horizon {
        return Err(Error::Config(format!(
            "dataset horizon {} does not match model horizon {}",
            dataset.horizon(),
            model.config().horizon
        )));
    }
    if dataset.is_empty() {
        return Err(Error::Empty("cannot evaluate on an empty dataset".into()));
    }
    let stations = dataset.num_stations();
    let mut sim_scaled: Vec<Vec<f64>> = alloc::vec![Vec::with_capacity(dataset.len()); stations];
    let mut obs_scaled: Vec<Vec<f64>> = alloc::vec![Vec::with_capacity(dataset.len()); stations];
    for i in 0..dataset.len() {
        let (pred, _) = forward(model, dataset.window(i), false, None)?;
        for s in 0..stations {
            sim_scaled[s].push(pred.values()[s]);
            obs_scaled[s].push(dataset.target(i)[s]);
        }
    }
    let mut series = Vec::with_capacity(stations);
    for (s, id) in dataset.target_channel_ids().iter().enumerate() {
        let obs = unscale(&obs_scaled[s], scaler, id)?;
        let sim = unscale(&sim_scaled[s], scaler, id)?;
        series.push((id.clone(), obs, sim));
    }
    Ok(report_from_series(model.config().cell_kind.label(), model.config().horizon, &series))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn self_correlation_is_one() {
        let a = [1.0, 2.0, 5.0, 3.0];
        assert!((cc(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reversed_ramp_is_perfectly_anticorrelated() {
        assert!((cc(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn cc_matches_independent_single_pass_computation() {
        let obs = [1.0, 2.0, 3.0, 4.0];
        let sim = [1.0, 2.0, 4.0, 3.0];
        // Naive single-pass raw-moment form, structured differently from
        // the implementation's centered two-pass.
        let n = obs.len() as f64;
        let (sx, sy, sxy, sxx, syy) = obs.iter().zip(&sim).fold(
            (0.0, 0.0, 0.0, 0.0, 0.0),
            |(sx, sy, sxy, sxx, syy), (&x, &y)| {
                (sx + x, sy + y, sxy + x * y, sxx + x * x, syy + y * y)
            },
        );
        let expected = (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt());
        assert!((cc(&obs, &sim).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn zero_variance_input_is_an_error_not_a_sentinel() {
        assert!(matches!(cc(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(Error::Degenerate(_))));
        assert!(matches!(cc(&[1.0, 2.0, 3.0], &[4.0, 4.0, 4.0]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn rmse_of_identical_series_is_zero() {
        assert_eq!(rmse(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn rmse_hand_case() {
        let v = rmse(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap();
        assert!((v - 0.5773502691896258).abs() < 1e-15);
    }

    #[test]
    fn rmse_is_translation_invariant() {
        let a = [1.0, 5.0, 2.0];
        let b = [0.5, 4.0, 3.0];
        let shifted_a: Vec<f64> = a.iter().map(|v| v + 7.25).collect();
        let shifted_b: Vec<f64> = b.iter().map(|v| v + 7.25).collect();
        let lhs = rmse(&a, &b).unwrap();
        let rhs = rmse(&shifted_a, &shifted_b).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn nse_boundaries() {
        let obs = [1.0, 2.0, 3.0];
        assert!((nse(&obs, &obs).unwrap() - 1.0).abs() < 1e-12);
        let mean = [2.0, 2.0, 2.0];
        assert!(nse(&obs, &mean).unwrap().abs() < 1e-12);
    }

    #[test]
    fn nse_hand_case() {
        assert!((nse(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn constant_observations_are_degenerate() {
        assert!(matches!(nse(&[2.0, 2.0], &[1.0, 3.0]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn report_records_per_station_errors_without_spoiling_others() {
        let report = report_from_series(
            "gru",
            1,
            &[
                ("good".into(), alloc::vec![1.0, 2.0, 3.0], alloc::vec![1.0, 2.0, 3.5]),
                ("flat".into(), alloc::vec![2.0, 2.0, 2.0], alloc::vec![1.0, 2.0, 3.0]),
            ],
        );
        assert!(report.station("good").unwrap().outcome.is_ok());
        assert!(report.station("flat").unwrap().outcome.is_err());
        assert!(report.mean_nse().is_some());
    }

    fn series_pair(seed: u64, n: usize) -> (Vec<f64>, Vec<f64>) {
        let mut rng = crate::numerics::SeededRng::new(seed);
        let a: Vec<f64> = (0..n).map(|_| rng.uniform(-3.0, 3.0)).collect();
        let b: Vec<f64> = a.iter().map(|v| 0.7 * v + rng.uniform(-1.0, 1.0)).collect();
        (a, b)
    }

    proptest! {
        #[test]
        fn cc_is_symmetric_and_affine_equivariant(seed in 0u64..500, alpha in 0.1f64..5.0, beta in -4.0f64..4.0) {
            let (a, b) = series_pair(seed, 64);
            let base = cc(&a, &b).unwrap();
            prop_assert!((cc(&b, &a).unwrap() - base).abs() < 1e-10);
            let pos: Vec<f64> = b.iter().map(|v| alpha * v + beta).collect();
            prop_assert!((cc(&a, &pos).unwrap() - base).abs() < 1e-10);
            let neg: Vec<f64> = b.iter().map(|v| -alpha * v + beta).collect();
            prop_assert!((cc(&a, &neg).unwrap() + base).abs() < 1e-10);
        }

        #[test]
        fn nse_never_exceeds_one_and_survives_common_rescaling(seed in 0u64..500, alpha in prop_oneof![(-5.0f64..-0.1), (0.1f64..5.0)], beta in -4.0f64..4.0) {
            let (a, b) = series_pair(seed, 64);
            let base = nse(&a, &b).unwrap();
            prop_assert!(base <= 1.0 + 1e-12);
            let a2: Vec<f64> = a.iter().map(|v| alpha * v + beta).collect();
            let b2: Vec<f64> = b.iter().map(|v| alpha * v + beta).collect();
            prop_assert!((nse(&a2, &b2).unwrap() - base).abs() < 1e-10);
        }

        #[test]
        fn rmse_symmetry_and_triangle(seed in 0u64..500) {
            let (a, b) = series_pair(seed, 48);
            let (c, _) = series_pair(seed.wrapping_add(9999), 48);
            let ab = rmse(&a, &b).unwrap();
            prop_assert!((ab - rmse(&b, &a).unwrap()).abs() < 1e-12);
            prop_assert!(ab >= 0.0);
            let ac = rmse(&a, &c).unwrap();
            let bc = rmse(&b, &c).unwrap();
            prop_assert!(ac <= ab + bc + 1e-10);
        }

        #[test]
        fn metrics_relate_across_scaled_and_physical_space(seed in 0u64..300, span in 0.5f64..20.0, min in -5.0f64..5.0) {
            // cc and nse are unchanged by a common affine unscaling; rmse
            // scales by (max - min).
            let (a, b) = series_pair(seed, 64);
            let ua: Vec<f64> = a.iter().map(|v| min + v * span).collect();
            let ub: Vec<f64> = b.iter().map(|v| min + v * span).collect();
            prop_assert!((cc(&a, &b).unwrap() - cc(&ua, &ub).unwrap()).abs() < 1e-9);
            prop_assert!((nse(&a, &b).unwrap() - nse(&ua, &ub).unwrap()).abs() < 1e-9);
            prop_assert!((rmse(&ua, &ub).unwrap() - span * rmse(&a, &b).unwrap()).abs() < 1e-9);
        }
    }
}
