//! Forecasting engine for multi-station sewer telemetry.
//!
//! One shared recurrent (or feed-forward) representation is trained against
//! every monitored overflow chamber at once: the network reads a lookback
//! window of water levels plus rain-gauge channels and emits one forecast
//! per station at a fixed horizon. The crate also carries the surrounding
//! machinery: min-max scaling, lag selection by auto/cross-correlation,
//! supervised windowing, chronological splitting, evaluation metrics, a
//! deterministic synthetic catchment for desk-scale verification, and a
//! one-axis-at-a-time hyperparameter search.
//!
//! Everything is `f64`, seeded, and bit-deterministic: the same inputs and
//! seed reproduce the same parameters, forecasts and reports. The crate is
//! `no_std`-compatible (`alloc` required); disable the default `std` feature
//! and enable `libm` for freestanding targets. File formats, CSV ingestion
//! and the CLI live in the companion `sewercast` crate.

#![cfg_attr(not(feature = "std"), no_std)]

#[cfg(not(any(feature = "std", feature = "libm")))]
compile_error!("enable either the `std` or the `libm` feature");

extern crate alloc;

pub mod cells;
pub mod data;
mod error;
pub mod metrics;
pub mod model;
pub mod numerics;
pub mod optim;
pub mod synth;
pub mod tuner;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
