#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod backtest;
pub mod cluster;
pub mod error;
pub mod market;
pub mod matrix;
pub mod metrics;
pub mod optimizer;
pub mod rng;

mod math;

pub use error::{Error, Result};
