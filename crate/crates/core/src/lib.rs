//! Skill testing for multivariate proxy reconstructions of a target time
//! series.
//!
//! The pieces, in pipeline order:
//!
//! - [`data`]: year-indexed target series and masked proxy networks, CSV
//!   I/O, duplicate-column removal, standardization and holdout splits.
//! - [`noise`]: AR1 fitting and seeded pseudoproxy generation (white,
//!   fixed-coefficient AR1, empirical AR1).
//! - [`reconstruct`]: intercept, lasso and principal-components regression.
//! - [`skill`]: holdout RMSE and RE over every contiguous holdout window.
//! - [`nullbench`]: Monte-Carlo RE null distributions, percentile
//!   benchmarks and significance verdicts.
//! - [`consistency`]: per-year calibration-consistency sets.
//! - [`cli`]: the command-line driver.
//! - [`synthetic`]: seeded synthetic networks for experiments.

pub mod cli;
pub mod consistency;
pub mod data;
pub mod error;
pub mod noise;
pub mod nullbench;
pub mod reconstruct;
pub mod skill;
pub mod stats;
pub mod synthetic;

pub use error::{Error, ErrorClass, Result};
