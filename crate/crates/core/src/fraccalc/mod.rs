//! Fractional-calculus kernel: special functions, power-law kernel
//! quadrature, the L1 Caputo derivative, and a PECE solver for Caputo
//! systems of order β ∈ (0, 2).

mod quadrature;
mod solver;
mod special;

pub use quadrature::{
    caputo_derivative, fractional_integral, fractional_integral_all, riemann_liouville_derivative,
    SampledFunction, UNIFORM_GRID_TOL,
};
pub use solver::{fde_solve, volterra_residual, FdeConfig, Field, Route};
pub use special::{gamma, ln_gamma, mittag_leffler, mittag_leffler_two};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FracError {
    #[error("{what} out of domain: {value}")]
    Domain { what: &'static str, value: f64 },
    #[error("fractional order {beta} out of range")]
    OrderOutOfRange { beta: f64 },
    #[error("index {index} out of range for grid of {len} nodes")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("node {index} has insufficient history (need at least {needed} prior nodes)")]
    InsufficientHistory { index: usize, needed: usize },
    #[error("series did not converge within {terms} terms")]
    NonConvergence { terms: usize },
    #[error("non-finite field value at node {node}, component {component}")]
    NonFinite { node: usize, component: usize },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
}
