//! Gradient boosted regression trees and a benchmark harness for tabular
//! regression, with a synthetic generator for seismic drift data.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod boosting;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod par;
pub mod rng;
pub mod tree;

pub use error::{Error, Result};
