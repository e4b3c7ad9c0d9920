//! Global optimisation over random low-dimensional affine subspaces.
//!
//! The [`solar`] driver repeatedly restricts the problem to a random affine
//! subspace through the best points found so far, solves the restriction with
//! a short Nelder-Mead run ([`inner_solver`]) and keeps the result when it
//! improves the record. Around it live the reference baselines, the test
//! problems and an experiment harness that writes seeded convergence traces.

pub mod baselines;
pub mod best_store;
pub mod error;
pub mod harness;
pub mod inner_solver;
pub mod oracle;
pub mod solar;
pub mod subspace;
pub mod testbed;
pub mod trace;

pub use best_store::BestStore;
pub use error::{Error, Result};
pub use inner_solver::NMConfig;
pub use oracle::{BoxSet, ExtendedValue, Function, Objective};
pub use solar::{solar_run, SolarConfig, SolarResult};
pub use subspace::{BetaMode, SamplingVariant};
pub use trace::{Trace, TraceRecord};
