// Scratch probe for desk-scale training budgets (temporary).
use sewercast_core::cells::CellKind;
use sewercast_core::data::{chrono_split, fit_scaler, make_windows, scale, LagPolicy, select_lags};
use sewercast_core::metrics::evaluate;
use sewercast_core::model::{build_model, fit, ModelConfig};
use sewercast_core::numerics::SeededRng;
use sewercast_core::optim::OptimizerSpec;
use sewercast_core::synth::{baseline_evaluate, baseline_fit, generate, BaselineKind, BaselineSpec, CatchmentConfig};
use std::time::Instant;

fn main() {
    let horizon: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let kind = match std::env::args().nth(2).as_deref() {
        Some("lstm") => CellKind::Lstm,
        Some("rnn") => CellKind::Rnn,
        Some("ffnn") => CellKind::Ffnn,
        _ => CellKind::Gru,
    };
    let epochs: usize = std::env::args().nth(3).and_then(|s| s.parse().ok()).unwrap_or(20);
    let cap: usize = std::env::args().nth(4).and_then(|s| s.parse().ok()).unwrap_or(11);
    let hidden: usize = std::env::args().nth(5).and_then(|s| s.parse().ok()).unwrap_or(32);
    let lr: f64 = std::env::args().nth(6).and_then(|s| s.parse().ok()).unwrap_or(1e-3);

    let t0 = Instant::now();
    let config = CatchmentConfig::default();
    let frame = generate(&config).unwrap();
    println!("generate: {:.2}s, {} rows", t0.elapsed().as_secs_f64(), frame.len());

    let train_rows = (frame.len() as f64 * 0.8) as usize;
    let policy = LagPolicy { lookback_cap: cap, ..LagPolicy::default() };
    let lag_spec = select_lags(&frame, 0..train_rows, &policy).unwrap();
    println!("lag spec: lookback {}, channels {:?}",
        lag_spec.lookback(),
        lag_spec.entries().iter().map(|(id, l)| format!("{id}:{}", l.len())).collect::<Vec<_>>());
    let scaler = fit_scaler(&frame, 0..train_rows).unwrap();
    let scaled = scale(&frame, &scaler).unwrap();
    let targets = config.station_ids();
    let ds = make_windows(&scaled, &lag_spec, horizon, &targets).unwrap();
    let (train, test) = chrono_split(&ds, 0.8).unwrap();
    let (train, val) = chrono_split(&train, 0.85).unwrap();
    println!("windows: train {}, val {}, test {}", train.len(), val.len(), test.len());

    let mc = ModelConfig {
        cell_kind: kind,
        hidden_size: hidden,
        num_recurrent_layers: 2,
        num_stations: targets.len(),
        lookback: lag_spec.lookback(),
        horizon,
        dropout_ratio: 0.0,
        input_channels: ds.input_channels(),
        seed: 7,
    };
    let mut model = build_model(&mc).unwrap();
    let t1 = Instant::now();
    let report = fit(&mut model, &train, &val, &OptimizerSpec::adam(lr), epochs, 512, 5, &mut SeededRng::new(7)).unwrap();
    println!("fit: {:.1}s, {} epochs, stop {:?}", t1.elapsed().as_secs_f64(), report.epochs_run, report.stop_reason);
    println!("val losses: {:?}", report.val_losses.iter().map(|v| (v * 1e6).round() / 1e6).collect::<Vec<_>>());

    let rep = evaluate(&model, &test, &scaler).unwrap();
    let per: Vec<String> = rep.stations.iter().map(|s| {
        match &s.outcome {
            Ok(m) => format!("{}={:.3}", s.station_id, m.nse),
            Err(e) => format!("{}=ERR({e})", s.station_id),
        }
    }).collect();
    println!("{} h{}: mean NSE {:.4} | {}", kind.label(), horizon, rep.mean_nse().unwrap(), per.join(" "));

    let bl = baseline_fit(&train, &BaselineSpec { kind: BaselineKind::LinearAr, lag_order: 6, ridge: 1e-6 }).unwrap();
    let blrep = baseline_evaluate(&bl, &test, &scaler).unwrap();
    let bper: Vec<String> = blrep.stations.iter().map(|s| {
        match &s.outcome {
            Ok(m) => format!("{}={:.3}", s.station_id, m.nse),
            Err(e) => format!("{}=ERR({e})", s.station_id),
        }
    }).collect();
    println!("linear_ar h{}: mean NSE {:.4} | {}", horizon, blrep.mean_nse().unwrap(), bper.join(" "));
    println!("total: {:.1}s", t0.elapsed().as_secs_f64());
}
