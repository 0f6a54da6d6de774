//! Transfer-learning search-space design for hyperparameter optimization.
//!
//! Given tuning histories from source tasks, the `transfer` module designs a
//! compact, promising candidate subset for a new target task by combining
//! per-source promising-region classifiers through similarity-weighted
//! sampling and voting. The `optimizer` module provides GP-based Bayesian
//! optimization and random search drivers over any designed space, and
//! `benchmark` is a tabular harness that measures the resulting speedup under
//! a leave-one-out protocol.

pub mod benchmark;
pub mod cli;
pub mod error;
pub mod gp;
pub mod gpc;
pub mod kernel;
pub mod optimizer;
pub mod seed;
pub mod space;
pub mod transfer;

pub use error::{Error, Result};
