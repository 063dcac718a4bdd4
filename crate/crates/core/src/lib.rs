//! Calibration, simulation and evaluation of Markov-modulated price models
//! for illiquid daily stock prices.
//!
//! A two-state chain decides each day whether a price repeats (no trade) or
//! moves; moves follow either geometric Brownian motion or the exponential
//! Ornstein-Uhlenbeck process. The crate covers the data transforms applied
//! before calibration, the calibrators, seeded path simulation and
//! forecasting, evaluation metrics, and the correlation-attenuation study.
//!
//! The crate is `no_std` and needs only `alloc`; file formats, the command
//! line and parallel drivers live in the `illiquid` crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod attenuation;
pub mod markov;
mod math;
pub mod regime;
pub mod rng;
pub mod sde;
pub mod stats;
pub mod timeseries;

pub use attenuation::{AttenuationReport, ShockPolicy, StudyConfig};
pub use markov::{State, SteadyState, TransitionMatrix};
pub use regime::{CalibratedModel, ForecastOptions, ForecastResult, ModelKind, SdeParams};
pub use sde::{GbmParams, XouParams};
pub use timeseries::{Observation, PriceSeries};
