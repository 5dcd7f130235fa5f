//! Simulation laboratory for ergodic averages of the Euler-Maruyama scheme.
//!
//! The crate simulates dissipative SDEs with the Euler-Maruyama recursion,
//! solves the associated Stein (Poisson) equation for test observables,
//! computes normalized and self-normalized statistics of the ergodic
//! average, and runs replicated Monte Carlo experiments that compare the
//! empirical tails against closed-form envelopes (tail ratios, Berry-Esseen
//! distances, moderate-deviation rates, martingale concentration bounds).

pub mod bounds;
pub mod cli;
pub mod harness;
pub mod integrator;
pub mod models;
pub mod numerics;
pub mod rng;
pub mod stats;
pub mod stein;

pub use harness::{ExperimentResult, ExperimentSpec};
pub use integrator::Trajectory;
pub use models::Model;
pub use stats::StatBundle;
pub use stein::SteinSolution;
