//! Beta-Bernoulli posterior arithmetic and the flat Bernoulli belief state.
//!
//! Every arm has an unknown success rate with a uniform prior. After `s`
//! successes and `f` failures the posterior is `Beta(s + 1, f + 1)`, the next
//! simulated outcome succeeds with probability `(s + 1) / (s + f + 2)`, and the
//! same fraction is the expected utility of selecting the arm.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BernoulliError {
    #[error("arm {arm} out of range for {k} arms")]
    ArmOutOfRange { arm: usize, k: usize },
    #[error("a flat state needs at least one arm")]
    NoArms,
}

/// Success/failure tallies of one arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct BetaCounts {
    pub successes: u64,
    pub failures: u64,
}

impl BetaCounts {
    pub const fn new(successes: u64, failures: u64) -> Self {
        BetaCounts { successes, failures }
    }

    pub fn n(&self) -> u64 {
        self.successes + self.failures
    }

    /// Posterior mean `(s + 1) / (n + 2)`.
    pub fn posterior_mean(&self) -> f64 {
        (self.successes as f64 + 1.0) / (self.n() as f64 + 2.0)
    }

    /// Probability that the next simulated sample of this arm succeeds.
    pub fn predictive_success(&self) -> f64 {
        self.posterior_mean()
    }

    pub fn with_success(self) -> Self {
        BetaCounts::new(self.successes + 1, self.failures)
    }

    pub fn with_failure(self) -> Self {
        BetaCounts::new(self.successes, self.failures + 1)
    }

    pub fn with_outcome(self, success: bool) -> Self {
        if success {
            self.with_success()
        } else {
            self.with_failure()
        }
    }
}

/// Free-function form of [`BetaCounts::posterior_mean`].
pub fn posterior_mean(counts: BetaCounts) -> f64 {
    counts.posterior_mean()
}

/// Free-function form of [`BetaCounts::predictive_success`].
pub fn predictive_success(counts: BetaCounts) -> f64 {
    counts.predictive_success()
}

/// Belief state of the flat Bernoulli selection problem.
///
/// `samples_used` counts simulated samples only; counts present when the state
/// was created (pseudo-count priors) are not included.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FlatState {
    arms: Vec<BetaCounts>,
    samples_used: u64,
}

impl FlatState {
    /// `k` arms with no observations.
    pub fn uniform(k: usize) -> Result<Self, BernoulliError> {
        Self::with_prior(vec![BetaCounts::default(); k])
    }

    /// Starts from pre-seeded counts, treated as prior pseudo-observations.
    pub fn with_prior(arms: Vec<BetaCounts>) -> Result<Self, BernoulliError> {
        if arms.is_empty() {
            return Err(BernoulliError::NoArms);
        }
        Ok(FlatState { arms, samples_used: 0 })
    }

    pub fn k(&self) -> usize {
        self.arms.len()
    }

    pub fn arms(&self) -> &[BetaCounts] {
        &self.arms
    }

    pub fn arm(&self, i: usize) -> BetaCounts {
        self.arms[i]
    }

    pub fn samples_used(&self) -> u64 {
        self.samples_used
    }

    pub fn means(&self) -> Vec<f64> {
        self.arms.iter().map(BetaCounts::posterior_mean).collect()
    }

    pub fn best_mean(&self) -> f64 {
        self.arms.iter().map(BetaCounts::posterior_mean).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Arm with the highest posterior mean, lowest index on ties.
    pub fn best_arm(&self) -> usize {
        argmax_lowest(self.arms.iter().map(BetaCounts::posterior_mean))
    }

    /// `max_{j != i} mu_j`, or 0 when there is no other arm.
    pub fn best_other_mean(&self, i: usize) -> f64 {
        self.arms
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, a)| a.posterior_mean())
            .fold(0.0, f64::max)
    }

    /// Records the outcome of one sample of `arm`.
    pub fn apply_outcome(&self, arm: usize, success: bool) -> Result<FlatState, BernoulliError> {
        if arm >= self.k() {
            return Err(BernoulliError::ArmOutOfRange { arm, k: self.k() });
        }
        let mut next = self.clone();
        next.arms[arm] = next.arms[arm].with_outcome(success);
        next.samples_used += 1;
        Ok(next)
    }

    /// In-place variant of [`FlatState::apply_outcome`] for hot loops.
    pub fn record(&mut self, arm: usize, success: bool) {
        self.arms[arm] = self.arms[arm].with_outcome(success);
        self.samples_used += 1;
    }
}

/// Index of the largest value; the lowest index wins exact ties.
pub(crate) fn argmax_lowest(values: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, v) in values.enumerate() {
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}

/// `k` latent success rates drawn iid from Uniform[0, 1].
pub fn sample_truth(k: usize, seed: u64) -> Vec<f64> {
    let mut r = rng::stream(seed, 0);
    (0..k).map(|_| r.random::<f64>()).collect()
}

/// Which utilities enter the regret of a selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegretConvention {
    /// Latent success rates.
    #[default]
    Latent,
    /// Realized Bernoulli utilities drawn from the latent rates.
    Realized,
}

/// `max_i truth_i - truth_selected + c * n` on latent rates.
pub fn regret(truth: &[f64], selected: usize, n: u64, c: f64) -> f64 {
    let best = truth.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    best - truth[selected] + c * n as f64
}

/// Regret on realized utilities `U_i ~ Bernoulli(truth_i)`.
pub fn realized_regret<R: Rng + ?Sized>(
    truth: &[f64],
    selected: usize,
    n: u64,
    c: f64,
    rng: &mut R,
) -> f64 {
    let u: Vec<f64> = truth.iter().map(|&p| if rng.random::<f64>() < p { 1.0 } else { 0.0 }).collect();
    regret(&u, selected, n, c)
}

/// Simulated Bernoulli arms with common random numbers.
///
/// The j-th sample of arm i is decided by the j-th uniform of stream `i`, so
/// two policies that sample an arm the same number of times observe the same
/// outcomes from it.
#[derive(Debug, Clone)]
pub struct BernoulliArms {
    truth: Vec<f64>,
    streams: Vec<rng::StreamRng>,
}

impl BernoulliArms {
    pub fn new(truth: Vec<f64>, seed: u64) -> Self {
        let streams = (0..truth.len()).map(|i| rng::stream(seed, i as u64 + 1)).collect();
        BernoulliArms { truth, streams }
    }

    pub fn truth(&self) -> &[f64] {
        &self.truth
    }

    pub fn k(&self) -> usize {
        self.truth.len()
    }

    pub fn pull(&mut self, arm: usize) -> bool {
        self.streams[arm].random::<f64>() < self.truth[arm]
    }
}
