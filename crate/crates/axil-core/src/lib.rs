//! Runtime-mode selection for resource-constrained application sets.
//!
//! A vehicle (or any constrained platform) hosts applications that each offer
//! a nominal mode plus progressively degraded fallbacks. Every mode has a
//! resource demand and an experience-priority value; shared budgets and
//! mode-dependency edges constrain which combinations can run. This crate
//! models those instances and selects the assignment that preserves the most
//! experience priority:
//!
//! - [`model`]: instances, candidates, scoring, feasibility;
//! - [`axil`]: the discrete priority-grading table and its numeric mapping;
//! - [`heuristic`]: fast greedy upgrade solver, always feasible;
//! - [`genetic`]: population-based stochastic solver;
//! - [`exact`]: branch-and-bound reference solver with optimality proof;
//! - [`generator`]: reproducible random instances over a star network;
//! - [`io`]: JSON serialization of instances, candidates, and reports.

pub mod axil;
pub mod error;
pub mod exact;
pub mod generator;
pub mod genetic;
pub mod heuristic;
pub mod io;
pub mod model;

pub use error::{Error, Result};
pub use model::{
    Candidate, ModeBounds, ProblemInstance, ResourceVector, SolveOptions, SolveReport, SolveStatus,
    RESOURCE_EPSILON,
};
