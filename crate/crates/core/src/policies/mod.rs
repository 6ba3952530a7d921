//! Bayesian sampling policies on the flat Bernoulli belief state.
//!
//! All policies share one tie-breaking rule: stopping beats sampling when the
//! two are within [`TIE_TOLERANCE`](crate::TIE_TOLERANCE), and among sampling
//! actions the lowest arm index wins.

mod blinkered;
mod one_armed;
mod ucb;

pub use blinkered::{BlinkeredIndex, ExactBlinkered, DEFAULT_GRID_POINTS};
pub use one_armed::{n_max, solve_one_armed, OneArmedAction, OneArmedTable, TABLE_FORMAT_HEADER};
pub use ucb::{ucb1_choose, GatedUcb1, DEFAULT_EXPLORATION};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bernoulli::FlatState;
use crate::model::Action;
use crate::TIE_TOLERANCE;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("cost must be positive and finite, got {0}")]
    InvalidCost(f64),
    #[error("lambda must lie in [0, 1], got {0}")]
    InvalidLambda(f64),
    #[error("grid needs at least two points, got {0}")]
    GridTooSmall(usize),
    #[error("malformed table dump at line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Stop deliberating, or sample one arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MetaAction {
    Stop,
    Sample(usize),
}

impl From<MetaAction> for Action {
    fn from(a: MetaAction) -> Action {
        match a {
            MetaAction::Stop => Action::Stop,
            MetaAction::Sample(i) => Action::Compute(i),
        }
    }
}

/// A stationary metalevel policy over flat Bernoulli states.
pub trait MetaPolicy {
    fn decide(&self, state: &FlatState) -> MetaAction;
}

/// One-step lookahead value of `action`.
///
/// Sampling is valued by enumerating both outcomes with their predictive
/// probabilities and stopping right after.
pub fn myopic_q(state: &FlatState, action: MetaAction, cost: f64) -> f64 {
    match action {
        MetaAction::Stop => state.best_mean(),
        MetaAction::Sample(i) => {
            let arm = state.arm(i);
            let other = state.best_other_mean(i);
            let p = arm.predictive_success();
            let up = arm.with_success().posterior_mean().max(other);
            let down = arm.with_failure().posterior_mean().max(other);
            p * up + (1.0 - p) * down - cost
        }
    }
}

/// Argmax of [`myopic_q`] over stopping and every arm.
pub fn myopic_policy(state: &FlatState, cost: f64) -> MetaAction {
    let stop = myopic_q(state, MetaAction::Stop, cost);
    pick(stop, (0..state.k()).map(|i| myopic_q(state, MetaAction::Sample(i), cost)))
}

/// Stop-biased argmax over per-arm sampling values.
pub(crate) fn pick(stop: f64, sample_q: impl Iterator<Item = f64>) -> MetaAction {
    let q: Vec<f64> = sample_q.collect();
    let best = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if best <= stop + TIE_TOLERANCE {
        return MetaAction::Stop;
    }
    let arm = q.iter().position(|&v| v >= best - TIE_TOLERANCE).expect("nonempty");
    MetaAction::Sample(arm)
}

/// The myopic policy at a fixed cost.
#[derive(Debug, Clone, Copy)]
pub struct Myopic {
    pub cost: f64,
}

impl MetaPolicy for Myopic {
    fn decide(&self, state: &FlatState) -> MetaAction {
        myopic_policy(state, self.cost)
    }
}

impl<P: MetaPolicy + ?Sized> MetaPolicy for &P {
    fn decide(&self, state: &FlatState) -> MetaAction {
        (**self).decide(state)
    }
}

#[cfg(test)]
mod tests;
