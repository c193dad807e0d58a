//! Black-box model inversion attribute inference (MIAI) on tabular classifiers.
//!
//! The crate trains target models, exposes them through a query-counted
//! black-box facade, runs the attack suite against it and scores the
//! results with imbalance-robust metrics.

pub mod analysis;
pub mod attacks;
pub mod data;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod models;

pub use error::{Error, Result};
