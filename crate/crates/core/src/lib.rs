//! Device activity detection for grant-free random access in the presence of
//! out-of-cell interference.
//!
//! The crate estimates which of `N` in-cell devices are active from the
//! sample covariance of the received pilot block, jointly with per-dimension
//! interference powers. Three coordinate-descent estimators are provided:
//!
//! * joint ML over activities and interference powers,
//! * joint MAP, adding a Bernoulli activity prior and a Gaussian
//!   shot-noise prior on the interference powers,
//! * an interference-blind ML baseline (interference frozen at zero).
//!
//! Around them sit a stochastic-geometry scenario generator, the prior
//! moments with a Monte Carlo check, and a thresholding/Monte Carlo
//! evaluation harness.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate self as grantfree;

pub mod cli;
pub mod config;
pub mod error;
pub mod estimators;
pub mod eval;
pub mod exec;
pub mod model;
pub mod numerics;
pub mod prior;
pub mod scenario;

#[cfg(test)]
#[path = "../tests/common/oracle.rs"]
pub(crate) mod oracle;

pub use error::{Error, Result};
