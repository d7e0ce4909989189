//! Hourly price forecasting with Merton jump-diffusion Monte Carlo.
//!
//! The crate turns exchange kline dumps into rolling drift and volatility
//! features ([`features`]), forecasts those terms with linear, polynomial and
//! boosted-tree regressors ([`regress`]) and GJR-GARCH ([`garch`]), simulates
//! next-hour prices under a jump-diffusion ([`jumpsim`]) and scores every
//! drift × volatility pairing on hourly and change-point metrics
//! ([`backtest`]). [`pipeline`] strings these together the way the `mjd`
//! binary does.

// `!(x > 0.0)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod backtest;
pub mod config;
mod error;
pub mod features;
pub mod garch;
pub mod ingest;
pub mod jumpsim;
pub mod optim;
pub mod pipeline;
pub mod regress;
pub mod rng;
pub mod synth;

pub use config::RunConfig;
pub use error::Error;
