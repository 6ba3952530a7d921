//! Finite metalevel MDPs.
//!
//! A state carries the reward of stopping (the best expected utility
//! available from it) and a list of computations, each with a distribution
//! over successor states. Every computation costs the same `cost`. Stopping is
//! always available and ends the episode.

mod flat;
mod vpi;

pub use flat::FlatMdp;
pub use vpi::{vpi_bound, vpi_exact, VpiEstimate};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;
use crate::TIE_TOLERANCE;

/// Tolerance on the row sums of transition distributions.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// Default per-trial step cap for Monte Carlo evaluation.
pub const DEFAULT_STEP_CAP: u64 = 10_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("cost must be positive and finite, got {0}")]
    InvalidCost(f64),
    #[error("state {0} does not exist")]
    UnknownState(usize),
    #[error("stop reward of state {state} is not finite")]
    NonFiniteReward { state: usize },
    #[error("computation {action} in state {state} has negative probability {p}")]
    NegativeProbability { state: usize, action: usize, p: f64 },
    #[error("transitions of computation {action} in state {state} sum to {sum}, not 1")]
    NotNormalized { state: usize, action: usize, sum: f64 },
    #[error("computation {action} declared twice in state {state}")]
    DuplicateAction { state: usize, action: usize },
    #[error("transition graph has a cycle through state {0}; supply a finite horizon")]
    Cyclic(usize),
    #[error("horizon must be positive")]
    ZeroHorizon,
    #[error("trial count must be positive")]
    NoTrials,
    #[error("policy is undefined in state {0}")]
    PolicyUndefined(usize),
    #[error("policy chose computation {action} which is not available in state {state}")]
    UnavailableAction { state: usize, action: usize },
    #[error("trial exceeded the cap of {0} computations")]
    StepCapExceeded(u64),
    #[error("Monte Carlo sample count must be positive")]
    NoMonteCarloSamples,
}

/// Metalevel action: stop and act, or run computation `id`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    Stop,
    Compute(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Computation {
    pub action: usize,
    pub transitions: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
struct StateSpec {
    stop_reward: f64,
    computations: Vec<Computation>,
}

/// Incrementally assembled [`FiniteMetaMdp`].
#[derive(Debug, Clone)]
pub struct MdpBuilder {
    cost: f64,
    states: Vec<StateSpec>,
}

impl MdpBuilder {
    pub fn new(cost: f64) -> Self {
        MdpBuilder { cost, states: Vec::new() }
    }

    pub fn add_state(&mut self, stop_reward: f64) -> usize {
        self.states.push(StateSpec { stop_reward, computations: Vec::new() });
        self.states.len() - 1
    }

    pub fn add_computation(&mut self, state: usize, action: usize, transitions: Vec<(usize, f64)>) -> &mut Self {
        self.states[state].computations.push(Computation { action, transitions });
        self
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    /// Validates and freezes the model; `initial` is the start state.
    pub fn build(self, initial: usize) -> Result<FiniteMetaMdp, ModelError> {
        if !(self.cost > 0.0 && self.cost.is_finite()) {
            return Err(ModelError::InvalidCost(self.cost));
        }
        let n = self.states.len();
        if initial >= n {
            return Err(ModelError::UnknownState(initial));
        }
        for (s, spec) in self.states.iter().enumerate() {
            if !spec.stop_reward.is_finite() {
                return Err(ModelError::NonFiniteReward { state: s });
            }
            let mut seen: Vec<usize> = Vec::with_capacity(spec.computations.len());
            for comp in &spec.computations {
                if seen.contains(&comp.action) {
                    return Err(ModelError::DuplicateAction { state: s, action: comp.action });
                }
                seen.push(comp.action);
                let mut sum = 0.0;
                for &(t, p) in &comp.transitions {
                    if t >= n {
                        return Err(ModelError::UnknownState(t));
                    }
                    if p < 0.0 || !p.is_finite() {
                        return Err(ModelError::NegativeProbability { state: s, action: comp.action, p });
                    }
                    sum += p;
                }
                if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
                    return Err(ModelError::NotNormalized { state: s, action: comp.action, sum });
                }
            }
        }
        Ok(FiniteMetaMdp { cost: self.cost, initial, states: self.states })
    }
}

/// Validated finite metalevel MDP. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetaMdp {
    cost: f64,
    initial: usize,
    states: Vec<StateSpec>,
}

impl FiniteMetaMdp {
    pub fn cost(&self) -> f64 {
        self.cost
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn stop_reward(&self, s: usize) -> f64 {
        self.states[s].stop_reward
    }

    pub fn computations(&self, s: usize) -> &[Computation] {
        &self.states[s].computations
    }

    /// Available actions, `Stop` first.
    pub fn actions(&self, s: usize) -> Vec<Action> {
        std::iter::once(Action::Stop)
            .chain(self.states[s].computations.iter().map(|c| Action::Compute(c.action)))
            .collect()
    }

    pub fn computation(&self, s: usize, action: usize) -> Option<&Computation> {
        self.states[s].computations.iter().find(|c| c.action == action)
    }

    /// Topological order (parents before children), or the first state found on a cycle.
    fn topological_order(&self) -> Result<Vec<usize>, ModelError> {
        let n = self.states.len();
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut mark = vec![0u8; n];
        let mut post = Vec::with_capacity(n);
        for root in 0..n {
            if mark[root] != 0 {
                continue;
            }
            let mut stack: Vec<(usize, usize, usize)> = vec![(root, 0, 0)];
            mark[root] = 1;
            while let Some(&mut (s, ref mut ci, ref mut ti)) = stack.last_mut() {
                let comps = &self.states[s].computations;
                if *ci >= comps.len() {
                    mark[s] = 2;
                    post.push(s);
                    stack.pop();
                    continue;
                }
                let trans = &comps[*ci].transitions;
                if *ti >= trans.len() {
                    *ci += 1;
                    *ti = 0;
                    continue;
                }
                let (t, _) = trans[*ti];
                *ti += 1;
                match mark[t] {
                    0 => {
                        mark[t] = 1;
                        stack.push((t, 0, 0));
                    }
                    1 => return Err(ModelError::Cyclic(t)),
                    _ => {}
                }
            }
        }
        post.reverse();
        Ok(post)
    }
}

/// How far backward induction looks ahead.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Horizon {
    /// Exact solve; the computation graph must be acyclic.
    Acyclic,
    /// At most this many further computations from any state.
    Steps(u32),
}

/// Exact values, Q-values and policy of a [`FiniteMetaMdp`].
#[derive(Debug, Clone, PartialEq)]
pub struct SolvedMdp {
    pub optimal_value: Vec<f64>,
    pub optimal_action: Vec<Action>,
    /// Per state, `Stop` first and then computations in declaration order.
    pub q_values: Vec<Vec<(Action, f64)>>,
}

impl SolvedMdp {
    pub fn q(&self, s: usize, action: Action) -> Option<f64> {
        self.q_values[s].iter().find(|(a, _)| *a == action).map(|&(_, q)| q)
    }

    /// `Q(s, a) - Q(s, Stop)`.
    pub fn q_gap(&self, s: usize, action: Action) -> Option<f64> {
        Some(self.q(s, action)? - self.q(s, Action::Stop)?)
    }
}

/// Stop-biased argmax: stop unless some computation beats it by more than
/// [`TIE_TOLERANCE`]; among near-best computations take the lowest id.
pub fn choose_action(q: &[(Action, f64)]) -> (Action, f64) {
    let best = q.iter().map(|&(_, v)| v).fold(f64::NEG_INFINITY, f64::max);
    let stop = q.iter().find(|(a, _)| *a == Action::Stop).map(|&(_, v)| v);
    if let Some(v) = stop {
        if v >= best - TIE_TOLERANCE {
            return (Action::Stop, best);
        }
    }
    let action = q
        .iter()
        .filter(|&&(a, v)| a != Action::Stop && v >= best - TIE_TOLERANCE)
        .map(|&(a, _)| a)
        .min()
        .expect("nonempty action set");
    (action, best)
}

fn backup(mdp: &FiniteMetaMdp, s: usize, next: &[f64]) -> Vec<(Action, f64)> {
    let spec = &mdp.states[s];
    let mut q = Vec::with_capacity(spec.computations.len() + 1);
    q.push((Action::Stop, spec.stop_reward));
    for comp in &spec.computations {
        let ev: f64 = comp.transitions.iter().map(|&(t, p)| p * next[t]).sum();
        q.push((Action::Compute(comp.action), ev - mdp.cost));
    }
    q
}

/// Backward induction for the optimal values, Q-values and policy.
pub fn solve_exact(mdp: &FiniteMetaMdp, horizon: Horizon) -> Result<SolvedMdp, ModelError> {
    let n = mdp.states.len();
    match horizon {
        Horizon::Acyclic => {
            let order = mdp.topological_order()?;
            let mut value = vec![0.0; n];
            let mut action = vec![Action::Stop; n];
            let mut q_values = vec![Vec::new(); n];
            for &s in order.iter().rev() {
                let q = backup(mdp, s, &value);
                let (a, v) = choose_action(&q);
                value[s] = v;
                action[s] = a;
                q_values[s] = q;
            }
            Ok(SolvedMdp { optimal_value: value, optimal_action: action, q_values })
        }
        Horizon::Steps(0) => Err(ModelError::ZeroHorizon),
        Horizon::Steps(h) => {
            let mut value: Vec<f64> = mdp.states.iter().map(|s| s.stop_reward).collect();
            let mut action = vec![Action::Stop; n];
            let mut q_values = vec![Vec::new(); n];
            for _ in 0..h {
                let mut next_value = vec![0.0; n];
                for s in 0..n {
                    let q = backup(mdp, s, &value);
                    let (a, v) = choose_action(&q);
                    next_value[s] = v;
                    action[s] = a;
                    q_values[s] = q;
                }
                value = next_value;
            }
            Ok(SolvedMdp { optimal_value: value, optimal_action: action, q_values })
        }
    }
}

/// Monte Carlo estimate of a policy's value from the initial state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyEvaluation {
    pub mean_reward: f64,
    pub std_error: f64,
    pub mean_computations: f64,
    pub computations_std_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalOptions {
    pub trials: u64,
    pub seed: u64,
    pub step_cap: u64,
}

impl EvalOptions {
    pub fn new(trials: u64, seed: u64) -> Self {
        EvalOptions { trials, seed, step_cap: DEFAULT_STEP_CAP }
    }
}

/// Simulates `policy` from the initial state. Trial `t` draws from stream `t`
/// of `seed`, so the estimate does not depend on the thread count.
pub fn evaluate_policy<P>(mdp: &FiniteMetaMdp, policy: P, opts: EvalOptions) -> Result<PolicyEvaluation, ModelError>
where
    P: Fn(usize) -> Option<Action> + Sync,
{
    if opts.trials == 0 {
        return Err(ModelError::NoTrials);
    }
    let runs: Vec<(f64, u64)> = (0..opts.trials)
        .into_par_iter()
        .map(|t| run_trial(mdp, &policy, opts.seed, t, opts.step_cap))
        .collect::<Result<_, _>>()?;
    let rewards: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let counts: Vec<f64> = runs.iter().map(|r| r.1 as f64).collect();
    let r = crate::stats::MeanSe::of(&rewards).expect("nonempty");
    let c = crate::stats::MeanSe::of(&counts).expect("nonempty");
    Ok(PolicyEvaluation {
        mean_reward: r.mean,
        std_error: r.se_or_zero(),
        mean_computations: c.mean,
        computations_std_error: c.se_or_zero(),
    })
}

fn run_trial<P>(mdp: &FiniteMetaMdp, policy: &P, seed: u64, trial: u64, cap: u64) -> Result<(f64, u64), ModelError>
where
    P: Fn(usize) -> Option<Action>,
{
    let mut r = rng::stream(seed, trial);
    let mut s = mdp.initial;
    let mut steps = 0u64;
    loop {
        match policy(s).ok_or(ModelError::PolicyUndefined(s))? {
            Action::Stop => return Ok((mdp.stop_reward(s) - mdp.cost * steps as f64, steps)),
            Action::Compute(a) => {
                if steps >= cap {
                    return Err(ModelError::StepCapExceeded(cap));
                }
                let comp = mdp
                    .computation(s, a)
                    .ok_or(ModelError::UnavailableAction { state: s, action: a })?;
                let u: f64 = r.random();
                let mut acc = 0.0;
                let mut next = comp.transitions.last().expect("nonempty transitions").0;
                for &(t, p) in &comp.transitions {
                    acc += p;
                    if u < acc {
                        next = t;
                        break;
                    }
                }
                s = next;
                steps += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests;
