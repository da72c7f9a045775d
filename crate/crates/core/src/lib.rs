//! Pathwise Taylor expansions for functionals of Brownian paths.
//!
//! The crate evaluates forward and backward Taylor expansions of adapted
//! path functionals `u(t, ω)` and random fields `u(t, x, ω)` in terms of
//! path derivatives `D^θ u` and iterated Stratonovich integrals `I^θ`, and
//! provides the Monte Carlo harnesses used to check the remainder scaling
//! laws and the exact discrete identities behind them.
//!
//! Layout:
//! - [`paths`]: uniform grids, Brownian sample paths, bridge refinement.
//! - [`indices`]: temporal and spatial multi-indices and their weights.
//! - [`integrals`]: iterated integrals, step-2 signatures, discrete identities.
//! - [`functionals`]: the functional and field interfaces plus a catalog of
//!   examples with closed-form derivatives.
//! - [`taylor`]: the expansion engine and independent remainder oracles.
//! - [`spde`]: expansion coefficients of solutions of Stratonovich SPDEs.
//! - [`experiments`]: configuration, identity suites, scaling regressions,
//!   norm estimators and report writers.

pub mod error;
pub mod experiments;
pub mod functionals;
pub mod indices;
pub mod integrals;
pub mod paths;
pub mod spde;
pub mod stats;
pub mod taylor;

pub use error::{Error, Result};
