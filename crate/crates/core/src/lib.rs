#![forbid(unsafe_code)]

//! Distribution-free uncertainty quantification for continuously observed
//! quality scores.
//!
//! The crate is organized around a simple flow: [`simgen`] produces seeded
//! mean-reverting score streams, [`forecast`] fits the base point predictor,
//! [`conformal`] wraps it with split-conformal, adaptive, Mondrian, and
//! bootstrap intervals, [`ranking`] turns pairwise score differences into
//! abstention-aware rankings with FDR control, [`pipeline`] propagates stage
//! uncertainties through compositions, and [`scorekit`] covers composite
//! score construction and weight-sensitivity analyses.
//!
//! Everything randomized takes an explicit seed and runs on the ChaCha12
//! generator with per-index sub-seeds, so results are reproducible bit for
//! bit whether or not the `parallel` feature (rayon) is enabled.

pub mod conformal;
pub mod exec;
pub mod forecast;
pub mod pipeline;
pub mod ranking;
pub mod scorekit;
pub mod simgen;
mod stats;
pub mod types;

pub use types::{Interval, IntervalMethod, ScoreSeries, SeriesError};
