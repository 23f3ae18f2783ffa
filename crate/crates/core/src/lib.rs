//! Numerical verification of Hyers–Ulam stability for additive-quadratic
//! functional equations in modular spaces.
//!
//! The crate evaluates modulars and their Δ₂ constants, represents points as
//! exact dyadic vectors, computes the control series with certified tails, and
//! runs the scale-up and scale-down direct-method iterations against the
//! resulting stability bounds.

pub mod cli;
pub mod config;
pub mod control;
pub mod direct;
pub mod dyadic;
pub mod equation;
pub mod error;
pub mod experiment;
pub mod hypothesis;
pub mod modular;
pub mod perturbation;

pub use config::ExperimentConfig;
pub use control::{stability_bound, ControlFunction, Regime, SeriesKind, SeriesResult};
pub use direct::{solve_grid, solve_point, BranchKind, Slot, SolverConfig, StabilityReport};
pub use dyadic::{Dyadic, DyadicVector};
pub use equation::{EquationForm, MapEvaluator, TensorMap, TwoSlotMap};
pub use error::{Error, Result};
pub use experiment::{run_experiment, ExperimentOutcome};
pub use modular::{eval_modular, ModularSpec, ValueVector};
