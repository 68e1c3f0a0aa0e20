//! Boundary-trace simulation and fractional-order recovery for multi-term
//! time-fractional diffusion.
//!
//! The crate is organised bottom-up:
//!
//! - [`specfun`]: Gamma, Mittag-Leffler functions and the per-mode solution
//!   kernels, evaluated both by series expansions and by contour quadrature.
//! - [`forward`]: spectral forward model producing boundary time traces.
//! - [`models`]: fractional-polynomial and rational regressors with exact
//!   gradients and the map to physical parameters.
//! - [`fit`]: box-constrained limited-memory quasi-Newton least-squares
//!   recovery of orders, weights and amplitudes.
//! - [`cli`]: batch experiment runner and the invariant check suite.

pub mod cli;
pub mod error;
pub mod fit;
pub mod forward;
pub mod models;
pub mod specfun;

use serde::{Deserialize, Serialize};

pub use error::{Error, Result};

/// Which datum drives the problem: nonzero initial state or a nonzero source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    InitialData,
    Source,
}

impl std::fmt::Display for Case {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Case::InitialData => f.write_str("initial_data"),
            Case::Source => f.write_str("source"),
        }
    }
}
