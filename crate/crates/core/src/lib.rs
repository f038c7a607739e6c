//! Estimation of time-varying own- and cross-price elasticities of
//! electricity demand.
//!
//! The crate bundles four pieces that together form an estimation and
//! validation workbench:
//!
//! - [`nn`] — a minimal sequence-learning engine: a single-cell LSTM with a
//!   dense head, hand-derived backpropagation through time, weighted losses,
//!   an Adam optimizer, and finite-difference gradient checking.
//! - [`data`] — 15-minute period records, min-max scaling, and construction
//!   of leakage-free training windows anchored at day-time periods.
//! - [`sim`] — a rolling-decision market simulator: synthetic price/weather
//!   processes, a spike-aware price forecaster, several price-responsive
//!   consumer models, and a ground-truth elasticity oracle obtained by
//!   re-running the simulation under perturbed prices.
//! - [`estimator`] — the two-stage Siamese pipeline: a price-response
//!   network, a secant-line generator plus reliability filter for synthetic
//!   elasticity targets, and a second network with frozen shared cell
//!   weights that maps encodings to elasticity vectors.
//! - [`baselines`] — local linear regression, a Kalman-filter estimator
//!   with random-walk coefficients, and a two-stage dense-network variant.
//! - [`metrics`] — RMSE/MAE with own/cross and spike/normal breakdowns.
//!
//! Everything here is pure computation over arrays; parsing, file formats,
//! and the command-line pipeline live in the companion `elastiq` crate.
//! The crate is `no_std`-compatible (with `alloc`) when built without the
//! `std` feature; enable the `libm` feature in that configuration.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("either the `std` or the `libm` feature must be enabled");

pub mod baselines;
pub mod data;
pub mod estimator;
pub mod linalg;
pub mod metrics;
pub mod nn;
pub mod sim;

mod numeric;

pub use linalg::Mat;
