use super::{MetaAction, MetaPolicy};
use crate::bernoulli::FlatState;
use crate::voi::ArmStats;

/// Exploration constant `a` of the bonus `sqrt(a ln t / n_i)`.
pub const DEFAULT_EXPLORATION: f64 = 2.0;

/// UCB1 arm choice. Unsampled arms come first (lowest index); otherwise the
/// argmax of `mean_i + sqrt(exploration * ln t / n_i)`, lowest index on ties.
pub fn ucb1_choose(stats: &[ArmStats], t: u64, exploration: f64) -> usize {
    if let Some(i) = stats.iter().position(|s| s.n == 0) {
        return i;
    }
    let ln_t = (t.max(1) as f64).ln();
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, s) in stats.iter().enumerate() {
        let v = s.mean + (exploration * ln_t / s.n as f64).sqrt();
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}

/// UCB1 sampling gated by another policy's stopping decision: stops exactly
/// when `stop_rule` stops, otherwise samples the UCB1 arm.
///
/// With the blinkered index as the rule this is UCB1-B; with the myopic
/// policy it is UCB1-b.
#[derive(Debug, Clone)]
pub struct GatedUcb1<P> {
    pub stop_rule: P,
    pub exploration: f64,
}

impl<P: MetaPolicy> GatedUcb1<P> {
    pub fn new(stop_rule: P) -> Self {
        GatedUcb1 { stop_rule, exploration: DEFAULT_EXPLORATION }
    }
}

impl<P: MetaPolicy> MetaPolicy for GatedUcb1<P> {
    fn decide(&self, state: &FlatState) -> MetaAction {
        if self.stop_rule.decide(state) == MetaAction::Stop {
            return MetaAction::Stop;
        }
        let stats: Vec<ArmStats> = state.arms().iter().map(|a| ArmStats::from_counts(*a)).collect();
        let t = stats.iter().map(|s| s.n).sum();
        MetaAction::Sample(ucb1_choose(&stats, t, self.exploration))
    }
}
