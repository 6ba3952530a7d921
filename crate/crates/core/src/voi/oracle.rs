//! Exact crossing probabilities under the Beta-Binomial predictive.
//!
//! Used to check the direction of the Hoeffding-based bounds: with a uniform
//! prior, `N` further samples of an arm with tallies `(s, f)` follow a Polya
//! urn, so the distribution of the final sample mean can be enumerated.

use super::VoiError;
use crate::bernoulli::BetaCounts;

/// Largest horizon the oracle enumerates.
pub const MAX_ORACLE_HORIZON: u64 = 20;

const MEAN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tail {
    /// `P(mean <= threshold)`.
    AtMost,
    /// `P(mean >= threshold)`.
    AtLeast,
}

/// Distribution of the number of successes in `horizon` further samples.
pub fn predictive_successes(counts: BetaCounts, horizon: u64) -> Vec<f64> {
    let mut dist = vec![1.0];
    for m in 0..horizon {
        let mut next = vec![0.0; dist.len() + 1];
        for (y, &w) in dist.iter().enumerate() {
            let p = (counts.successes as f64 + 1.0 + y as f64) / (counts.n() as f64 + 2.0 + m as f64);
            next[y + 1] += w * p;
            next[y] += w * (1.0 - p);
        }
        dist = next;
    }
    dist
}

/// Probability that the sample mean after `horizon` more samples lies on the
/// given side of `threshold` (boundary included).
pub fn exact_tail_oracle(counts: BetaCounts, threshold: f64, horizon: u64, tail: Tail) -> Result<f64, VoiError> {
    if horizon > MAX_ORACLE_HORIZON {
        return Err(VoiError::HorizonTooLarge(horizon));
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(VoiError::InvalidThreshold(threshold));
    }
    let total = (counts.n() + horizon) as f64;
    let p = predictive_successes(counts, horizon)
        .iter()
        .enumerate()
        .filter(|&(y, _)| {
            let mean = if total == 0.0 { 0.0 } else { (counts.successes + y as u64) as f64 / total };
            match tail {
                Tail::AtMost => mean <= threshold + MEAN_TOLERANCE,
                Tail::AtLeast => mean >= threshold - MEAN_TOLERANCE,
            }
        })
        .map(|(_, &w)| w)
        .sum::<f64>();
    Ok(p.min(1.0))
}

/// The probability-weighted gain terms with their crossing probabilities
/// computed exactly, with sample means `s_i / n_i`. The Hoeffding bound
/// replaces only the probability, so it must dominate these values.
pub fn exact_crossing_terms(arms: &[BetaCounts], horizon: u64) -> Result<Vec<f64>, VoiError> {
    let stats: Vec<super::ArmStats> = arms.iter().map(|&c| super::ArmStats::from_counts(c)).collect();
    let ctx = super::VoiContext::new(stats, horizon)?;
    let (alpha, beta) = (ctx.alpha(), ctx.beta());
    let a = ctx.stats()[alpha];
    let n = horizon as f64;
    (0..arms.len())
        .map(|i| {
            if i == alpha {
                let b = ctx.stats()[beta];
                let p = exact_tail_oracle(arms[i], b.mean, horizon, Tail::AtMost)?;
                Ok(n * b.mean / a.n as f64 * p)
            } else {
                let s = ctx.stats()[i];
                let p = exact_tail_oracle(arms[i], a.mean, horizon, Tail::AtLeast)?;
                Ok(n * (1.0 - a.mean) / s.n as f64 * p)
            }
        })
        .collect()
}

/// Exact value of information of sampling each arm `horizon` more times:
/// the expected improvement of the selected sample mean, `E[(mean_beta -
/// new mean_alpha)^+]` for the leader and `E[(new mean_i - mean_alpha)^+]`
/// for the others.
pub fn exact_voi(arms: &[BetaCounts], horizon: u64) -> Result<Vec<f64>, VoiError> {
    if horizon > MAX_ORACLE_HORIZON {
        return Err(VoiError::HorizonTooLarge(horizon));
    }
    let stats: Vec<super::ArmStats> = arms.iter().map(|&c| super::ArmStats::from_counts(c)).collect();
    let ctx = super::VoiContext::new(stats, horizon)?;
    let (alpha, beta) = (ctx.alpha(), ctx.beta());
    let a = ctx.stats()[alpha].mean;
    let b = ctx.stats()[beta].mean;
    Ok(arms
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let total = (c.n() + horizon) as f64;
            predictive_successes(c, horizon)
                .iter()
                .enumerate()
                .map(|(y, &w)| {
                    let mean = (c.successes + y as u64) as f64 / total;
                    let gain = if i == alpha { b - mean } else { mean - a };
                    w * gain.max(0.0)
                })
                .sum()
        })
        .collect())
}
