use std::collections::HashMap;

use super::{FiniteMetaMdp, MdpBuilder, ModelError};
use crate::bernoulli::{BetaCounts, FlatState};

/// Flat Bernoulli selection problem enumerated as a finite metalevel MDP.
///
/// States reachable from `initial` with at most `max_samples` further samples
/// are enumerated; states on the sample limit only allow stopping. Computation
/// `i` samples arm `i`. With a `context` value the stop reward becomes
/// `max(context, max_i mu_i)`, i.e. an extra arm of known value.
#[derive(Debug, Clone)]
pub struct FlatMdp {
    pub mdp: FiniteMetaMdp,
    pub states: Vec<FlatState>,
    index: HashMap<Vec<BetaCounts>, usize>,
}

impl FlatMdp {
    pub fn build(initial: &FlatState, cost: f64, max_samples: u64, context: Option<f64>) -> Result<FlatMdp, ModelError> {
        let mut builder = MdpBuilder::new(cost);
        let mut states: Vec<FlatState> = Vec::new();
        let mut depth: Vec<u64> = Vec::new();
        let mut index: HashMap<Vec<BetaCounts>, usize> = HashMap::new();
        let stop_reward = |s: &FlatState| {
            let m = s.best_mean();
            context.map_or(m, |l| l.max(m))
        };

        let root = builder.add_state(stop_reward(initial));
        states.push(initial.clone());
        depth.push(0);
        index.insert(initial.arms().to_vec(), root);

        let mut cursor = 0;
        while cursor < states.len() {
            let s = states[cursor].clone();
            let d = depth[cursor];
            if d < max_samples {
                for arm in 0..s.k() {
                    let p = s.arm(arm).predictive_success();
                    let mut targets = [0usize; 2];
                    for (slot, outcome) in [true, false].into_iter().enumerate() {
                        let next = s.apply_outcome(arm, outcome).expect("arm in range");
                        let id = match index.get(next.arms()) {
                            Some(&id) => id,
                            None => {
                                let id = builder.add_state(stop_reward(&next));
                                index.insert(next.arms().to_vec(), id);
                                states.push(next);
                                depth.push(d + 1);
                                id
                            }
                        };
                        targets[slot] = id;
                    }
                    builder.add_computation(cursor, arm, vec![(targets[0], p), (targets[1], 1.0 - p)]);
                }
            }
            cursor += 1;
        }
        let mdp = builder.build(root)?;
        Ok(FlatMdp { mdp, states, index })
    }

    pub fn state_id(&self, arms: &[BetaCounts]) -> Option<usize> {
        self.index.get(arms).copied()
    }
}
