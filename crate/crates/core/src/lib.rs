//! Trotter-error profiling for small spin chains: Pauli algebra, a
//! statevector simulator, product formulas, error profiling with its fit,
//! multi-product baselines and an experiment driver.

// NaN has to fail every range check, hence `!(x > 0.0)` style guards.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod formula;
mod linalg;
pub mod mpf;
pub mod pauli;
pub mod profiling;
pub mod simulator;
pub mod table;

pub use error::{Error, Result};
pub use linalg::{chebyshev_nodes, geometric_grid};
