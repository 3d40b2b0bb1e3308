//! Numerical engine for scalar reflected stochastic differential equations
//! driven by an ambiguous-volatility Brownian motion, with nonlinear
//! resistance: the drift coefficients may depend on the accumulated
//! reflection process itself.
//!
//! The pipeline is: sample volatility-control scenarios ([`scenario`]),
//! solve each one by a Picard iteration around the discrete Skorokhod map
//! ([`solver`], [`reflection`]), aggregate worst-case Monte Carlo means
//! into upper expectations ([`expectation`]), and evaluate the analytic
//! bounds and theorem-level checks that certify the results ([`analysis`],
//! [`harness`]). The remaining modules are configuration, caching, and the
//! CLI commands.

pub mod analysis;
pub mod cache;
pub mod coeffs;
pub mod commands;
pub mod config;
pub mod error;
pub mod expectation;
pub mod grid;
pub mod harness;
pub mod reflection;
pub mod scenario;
pub mod solver;
