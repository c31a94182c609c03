//! Online stochastic mirror descent and mirror-descent Thompson sampling.

// `!(x > 0.0)` style tests are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod engine;
pub mod environments;
pub mod error;
pub mod estimators;
pub mod graph;
pub mod mirror;
pub mod mts;
pub mod potentials;
pub mod runner;
pub mod seeding;
pub mod suites;

pub use error::{Error, Result};
