//! Selecting computations in Bayesian selection problems.
//!
//! The crate models "which simulation to run next, and when to stop" as a
//! metalevel Markov decision process and provides:
//!
//! * [`model`]: a finite metalevel MDP with an exact backward-induction solver,
//!   a seeded Monte Carlo policy evaluator and the perfect-information bound on
//!   the expected number of computations.
//! * [`bernoulli`]: Beta-Bernoulli posterior arithmetic and the flat belief state.
//! * [`policies`]: myopic, exact one-armed, blinkered and UCB1-based policies.
//! * [`voi`]: distribution-free upper bounds on the value of information, the
//!   matching stopping rule and the VOI sampling policies.
//! * [`counterexamples`]: executable non-indexability, unbounded-computation and
//!   context-interval demonstrations.
//! * [`mcts`]: UCT and the VOI-at-the-root hybrid search on synthetic game trees.
//! * [`bench`]: regret experiments with paired trials and CSV reporting.

pub mod bench;
pub mod bernoulli;
pub mod counterexamples;
pub mod mcts;
pub mod model;
pub mod policies;
pub mod rng;
pub mod stats;
pub mod voi;

/// Absolute tolerance used by every argmax before the stop-biased tie-break.
pub const TIE_TOLERANCE: f64 = 1e-12;
