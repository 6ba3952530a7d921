//! Distribution-free bounds on the value of information of sampling an arm.
//!
//! Only sample means and counts are used. Arm `alpha` has the highest sample
//! mean and `beta` the second highest. Sampling `alpha` pays off only if its
//! mean drops below `beta`'s; sampling any other arm pays off only if its mean
//! climbs above `alpha`'s. Hoeffding's inequality bounds both probabilities.

pub mod oracle;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;
use thiserror::Error;

use crate::bernoulli::{BernoulliArms, BetaCounts};

/// `8 (sqrt 2 - 1)^2 = 24 - 16 sqrt 2`, the exponent constant of the bounds.
pub const PHI: f64 = 24.0 - 16.0 * std::f64::consts::SQRT_2;

#[derive(Debug, Error, PartialEq)]
pub enum VoiError {
    #[error("arm {0} has no samples; initialize every arm first")]
    Unsampled(usize),
    #[error("sample mean {mean} of arm {arm} is outside [0, 1]")]
    InvalidMean { arm: usize, mean: f64 },
    #[error("VOI bounds need at least two arms, got {0}")]
    TooFewArms(usize),
    #[error("budget {budget} is smaller than the arm count {k}")]
    BudgetTooSmall { budget: u64, k: usize },
    #[error("oracle horizon {0} exceeds the enumeration limit")]
    HorizonTooLarge(u64),
    #[error("threshold {0} is not a probability")]
    InvalidThreshold(f64),
}

/// Sample count and sample mean of one arm.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ArmStats {
    pub n: u64,
    pub mean: f64,
}

impl ArmStats {
    /// Empirical statistics of a success/failure tally (no prior).
    pub fn from_counts(c: BetaCounts) -> Self {
        let n = c.n();
        let mean = if n == 0 { 0.0 } else { c.successes as f64 / n as f64 };
        ArmStats { n, mean }
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.mean += (x - self.mean) / self.n as f64;
    }
}

/// Validated statistics with the leading arms identified.
#[derive(Debug, Clone, PartialEq)]
pub struct VoiContext {
    stats: Vec<ArmStats>,
    alpha: usize,
    beta: usize,
    budget: u64,
}

impl VoiContext {
    /// `budget` is the number `N` of further samples the bounds are stated for.
    /// Ties in the sample means go to the lowest index for `alpha`, then `beta`.
    pub fn new(stats: Vec<ArmStats>, budget: u64) -> Result<VoiContext, VoiError> {
        if stats.len() < 2 {
            return Err(VoiError::TooFewArms(stats.len()));
        }
        for (i, s) in stats.iter().enumerate() {
            if s.n == 0 {
                return Err(VoiError::Unsampled(i));
            }
            if !(0.0..=1.0).contains(&s.mean) {
                return Err(VoiError::InvalidMean { arm: i, mean: s.mean });
            }
        }
        let alpha = leader(&stats, None);
        let beta = leader(&stats, Some(alpha));
        Ok(VoiContext { stats, alpha, beta, budget })
    }

    pub fn stats(&self) -> &[ArmStats] {
        &self.stats
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    pub fn beta(&self) -> usize {
        self.beta
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn k(&self) -> usize {
        self.stats.len()
    }
}

pub(crate) fn leader(stats: &[ArmStats], skip: Option<usize>) -> usize {
    let mut best = usize::MAX;
    for (i, s) in stats.iter().enumerate() {
        if Some(i) == skip {
            continue;
        }
        if best == usize::MAX || s.mean > stats[best].mean {
            best = i;
        }
    }
    best
}

/// Per-sample Hoeffding bound for `arm`: the value of [`voi_bound_hoeffding`]
/// with the budget factor divided out.
fn hoeffding_unit(ctx: &VoiContext, arm: usize) -> f64 {
    let a = ctx.stats[ctx.alpha];
    if arm == ctx.alpha {
        let b = ctx.stats[ctx.beta];
        let gap = a.mean - b.mean;
        2.0 * b.mean / a.n as f64 * (-PHI * gap * gap * a.n as f64).exp()
    } else {
        let s = ctx.stats[arm];
        let gap = a.mean - s.mean;
        2.0 * (1.0 - a.mean) / s.n as f64 * (-PHI * gap * gap * s.n as f64).exp()
    }
}

/// Hoeffding upper bound on the value of sampling `arm` `N` more times:
///
/// * `alpha`: `2 N mean_beta / n_alpha * exp(-phi (mean_alpha - mean_beta)^2 n_alpha)`
/// * others: `2 N (1 - mean_alpha) / n_i * exp(-phi (mean_alpha - mean_i)^2 n_i)`
pub fn voi_bound_hoeffding(ctx: &VoiContext, arm: usize) -> f64 {
    ctx.budget as f64 * hoeffding_unit(ctx, arm)
}

/// Refined bound integrating the Hoeffding tail over the possible gain:
///
/// * others: `N sqrt(pi) / (n_i sqrt(n_i)) [erf((1 - mean_i) sqrt(n_i / pi)) - erf((mean_alpha - mean_i) sqrt(n_i / pi))]`
/// * `alpha`: `N sqrt(pi) / (n_a sqrt(n_a)) [erf(mean_alpha sqrt(n_a / pi)) - erf((mean_alpha - mean_beta) sqrt(n_a / pi))]`
pub fn voi_bound_erf(ctx: &VoiContext, arm: usize) -> f64 {
    let a = ctx.stats[ctx.alpha];
    let pi = std::f64::consts::PI;
    let (n, upper, gap) = if arm == ctx.alpha {
        let b = ctx.stats[ctx.beta];
        (a.n as f64, a.mean, a.mean - b.mean)
    } else {
        let s = ctx.stats[arm];
        (s.n as f64, 1.0 - s.mean, a.mean - s.mean)
    };
    let scale = (n / pi).sqrt();
    let bracket = erf(upper * scale) - erf(gap * scale);
    (ctx.budget as f64 * pi.sqrt() / (n * n.sqrt()) * bracket).max(0.0)
}

/// Which bound drives the sampling decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VoiVariant {
    /// Hoeffding bound.
    #[serde(rename = "VOI")]
    Voi,
    /// erf-refined bound.
    #[serde(rename = "VOI+")]
    VoiPlus,
}

impl VoiVariant {
    pub fn name(self) -> &'static str {
        match self {
            VoiVariant::Voi => "VOI",
            VoiVariant::VoiPlus => "VOI+",
        }
    }

    pub fn bound(self, ctx: &VoiContext, arm: usize) -> f64 {
        match self {
            VoiVariant::Voi => voi_bound_hoeffding(ctx, arm),
            VoiVariant::VoiPlus => voi_bound_erf(ctx, arm),
        }
    }
}

/// Arm with the largest bound; lowest index on ties.
pub fn voi_select(ctx: &VoiContext, variant: VoiVariant) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for i in 0..ctx.k() {
        let v = variant.bound(ctx, i);
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}

/// Stop when no arm's per-sample VOI bound exceeds the sample cost.
///
/// The budget cancels: both sides of `max_i bound_i <= c N` scale with `N`.
pub fn should_stop(ctx: &VoiContext, cost: f64) -> bool {
    (0..ctx.k()).all(|i| hoeffding_unit(ctx, i) <= cost)
}

/// Outcome of one run of a VOI sampling policy.
#[derive(Debug, Clone, PartialEq)]
pub struct VoiRun {
    pub selected: usize,
    pub samples_used: u64,
    /// Arms in the order they were sampled.
    pub trace: Vec<usize>,
    pub stats: Vec<ArmStats>,
}

/// Samples every arm once, then the arm with the largest VOI bound (with `N`
/// the remaining budget) until the budget is spent, or until [`should_stop`]
/// fires when a positive `cost` is given. Selects the highest sample mean.
///
/// Rewards come from [`BernoulliArms`] seeded with `seed`.
pub fn run_voi_policy(
    truth: &[f64],
    budget: u64,
    variant: VoiVariant,
    seed: u64,
    cost: Option<f64>,
) -> Result<VoiRun, VoiError> {
    let k = truth.len();
    if k < 2 {
        return Err(VoiError::TooFewArms(k));
    }
    if budget < k as u64 {
        return Err(VoiError::BudgetTooSmall { budget, k });
    }
    let mut arms = BernoulliArms::new(truth.to_vec(), seed);
    let mut stats = vec![ArmStats::default(); k];
    let mut trace = Vec::with_capacity(budget as usize);
    for i in 0..k {
        stats[i].push(f64::from(u8::from(arms.pull(i))));
        trace.push(i);
    }
    let mut used = k as u64;
    while used < budget {
        let ctx = VoiContext::new(stats.clone(), budget - used)?;
        if let Some(c) = cost.filter(|&c| c > 0.0) {
            if should_stop(&ctx, c) {
                break;
            }
        }
        let i = voi_select(&ctx, variant);
        stats[i].push(f64::from(u8::from(arms.pull(i))));
        trace.push(i);
        used += 1;
    }
    let selected = leader(&stats, None);
    Ok(VoiRun { selected, samples_used: used, trace, stats })
}
