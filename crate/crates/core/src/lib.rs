//! Exact analysis of finite discrete-time Markov chains.
//!
//! The crate computes invariant distributions by three independent methods,
//! expected hitting and return times, and the sensitivity of the return time
//! to coupled row perturbations that shift probability mass toward a target
//! state.  On top of those primitives it offers finite perturbation tooling
//! (elementary two-column moves, monotone-condition checks, decomposition of
//! a compliant pair into elementary moves), seeded Monte Carlo estimators as
//! empirical oracles, and a randomized verification harness that checks the
//! central monotonicity property end to end: moving mass toward a state
//! strictly increases that state's invariant probability.
//!
//! ```
//! use pilift::{TransitionMatrix, stationary_linear, expected_return_time};
//!
//! let m = TransitionMatrix::validate(&[vec![0.5, 0.5], vec![0.25, 0.75]], 1e-9).unwrap();
//! let pi = stationary_linear(&m).unwrap();
//! let mu = expected_return_time(&m, 0).unwrap();
//! assert!((pi.get(0) * mu - 1.0).abs() < 1e-10);
//! ```

pub mod chain;
pub mod error;
pub mod hitting;
pub mod io;
pub mod linalg;
pub mod montecarlo;
pub mod perturbation;
pub mod rng;
pub mod sensitivity;
pub mod sigfig;
pub mod stationary;
pub mod verify;

pub use chain::{require_ergodic, structure, StructureReport, TransitionMatrix};
pub use error::{Error, Result};
pub use hitting::{expected_hitting_times, expected_return_time, HittingProfile};
pub use montecarlo::{
    simulate_hitting_time, simulate_occupancy, simulate_return_time, SimulationEstimate,
};
pub use perturbation::{
    apply_elementary, check_theorem_conditions, decompose, ElementaryPerturbation,
    TheoremConditionReport,
};
pub use rng::SplitMix64;
pub use sensitivity::{
    coupled_derivative_direct, coupled_derivative_series, finite_difference_check, CouplingSpec,
    SensitivityVector,
};
pub use stationary::{
    stationary_linear, stationary_power, stationary_via_return_time, Distribution,
};
pub use verify::{
    random_ergodic_chain, random_feasible_perturbation, run_suite, run_trial, TrialConfig,
    TrialOutcome, VerificationReport,
};
