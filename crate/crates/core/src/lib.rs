//! Cost-balanced robust risk measurement and risk-forecast backtesting.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod backtest;
pub mod cli;
pub mod distributions;
pub mod empirical;
pub mod error;
pub mod garch;
pub mod riskmeasures;
pub mod robust;

mod quad;

pub use error::{Error, Result};
