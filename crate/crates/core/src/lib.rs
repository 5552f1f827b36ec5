//! Binary log-linear learning in potential games with lossy communication links.
//!
//! Modules:
//! - [`game`]: finite games, potentials and constrained move sets.
//! - [`comm`]: link models, realizations and partial utilities.
//! - [`dynamics`]: Monte Carlo simulation of the learning rule.
//! - [`chain`]: exact transition matrices, stationary distributions,
//!   resistances and stochastic potentials.
//! - [`experiments`]: spec-file parsing, sweeps, thresholds and the analysis report.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod comm;
pub mod dynamics;
pub mod experiments;
pub mod fixtures;
pub mod game;
