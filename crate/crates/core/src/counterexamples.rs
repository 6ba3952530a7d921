//! Executable counterexamples and structural checks.
//!
//! * A three-action problem whose optimal first computation flips as the value
//!   of a known alternative varies, which no index policy can reproduce.
//! * A two-armed chain where the optimal policy can keep sampling for an
//!   unbounded number of steps.
//! * The context-interval property: for a fixed state, the known-arm values at
//!   which continuing is optimal form an interval around the best mean.

use std::collections::BTreeSet;
use std::io::Write;

use rayon::prelude::*;
use thiserror::Error;

use crate::bernoulli::{BetaCounts, FlatState};
use crate::model::{solve_exact, Action, FiniteMetaMdp, FlatMdp, Horizon, MdpBuilder, ModelError};
use crate::policies::{solve_one_armed, OneArmedAction, PolicyError};

#[derive(Debug, Error)]
pub enum CounterexampleError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("continuation set still changes at truncation depth {depth}, horizon {horizon}")]
    UnstableTruncation { depth: i64, horizon: u32 },
    #[error("lambda grid must be nonempty and sorted")]
    BadGrid,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

// ---------------------------------------------------------------------------
// Non-indexability

/// Two unknown utilities, each revealed exactly by one computation, next to a
/// known alternative worth `lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Example4Config {
    /// Equiprobable values of the first utility.
    pub u1_values: (f64, f64),
    /// Equiprobable values of the second utility.
    pub u2_values: (f64, f64),
    pub cost: f64,
    pub lambda: f64,
}

impl Example4Config {
    pub fn new(lambda: f64) -> Self {
        Example4Config { u1_values: (-1.5, 1.5), u2_values: (0.25, 1.75), cost: 0.2, lambda }
    }
}

/// Computation ids in the non-indexability MDP.
pub const OBSERVE_U1: usize = 0;
pub const OBSERVE_U2: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Seen {
    Unknown,
    Low,
    High,
}

const SEEN: [Seen; 3] = [Seen::Unknown, Seen::Low, Seen::High];

fn belief(seen: Seen, (lo, hi): (f64, f64)) -> f64 {
    match seen {
        Seen::Unknown => 0.5 * (lo + hi),
        Seen::Low => lo,
        Seen::High => hi,
    }
}

/// The 9-state MDP; state `3 * a + b` has the first utility in state `a` and
/// the second in state `b` (0 unknown, 1 low, 2 high). State 0 is initial.
pub fn example4_mdp(cfg: &Example4Config) -> Result<FiniteMetaMdp, ModelError> {
    let mut b = MdpBuilder::new(cfg.cost);
    for &s1 in &SEEN {
        for &s2 in &SEEN {
            let reward = cfg.lambda.max(belief(s1, cfg.u1_values)).max(belief(s2, cfg.u2_values));
            b.add_state(reward);
        }
    }
    for a in 0..3 {
        for c in 0..3 {
            let id = 3 * a + c;
            if a == 0 {
                b.add_computation(id, OBSERVE_U1, vec![(3 + c, 0.5), (6 + c, 0.5)]);
            }
            if c == 0 {
                b.add_computation(id, OBSERVE_U2, vec![(3 * a + 1, 0.5), (3 * a + 2, 0.5)]);
            }
        }
    }
    b.build(0)
}

/// `Q*(s0, observe U_i) - Q*(s0, stop)` for both computations.
pub fn example4_qgaps(lambda: f64) -> Result<(f64, f64), ModelError> {
    let mdp = example4_mdp(&Example4Config::new(lambda))?;
    let sol = solve_exact(&mdp, Horizon::Acyclic)?;
    let gap1 = sol.q_gap(0, Action::Compute(OBSERVE_U1)).expect("observe U1 available at s0");
    let gap2 = sol.q_gap(0, Action::Compute(OBSERVE_U2)).expect("observe U2 available at s0");
    Ok((gap1, gap2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QGapRow {
    pub lambda: f64,
    pub gap_observe_u1: f64,
    pub gap_observe_u2: f64,
}

/// Q-gap curves over a grid of known-arm values.
#[derive(Debug, Clone, PartialEq)]
pub struct QGapSweep {
    pub rows: Vec<QGapRow>,
}

impl QGapSweep {
    pub fn run(lambdas: &[f64]) -> Result<QGapSweep, ModelError> {
        let rows = lambdas
            .iter()
            .map(|&lambda| {
                let (g1, g2) = example4_qgaps(lambda)?;
                Ok(QGapRow { lambda, gap_observe_u1: g1, gap_observe_u2: g2 })
            })
            .collect::<Result<_, ModelError>>()?;
        Ok(QGapSweep { rows })
    }

    /// `lo, lo + step, ..., hi` without accumulating rounding.
    pub fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
        let n = ((hi - lo) / step).round() as usize;
        (0..=n).map(|i| lo + step * i as f64).collect()
    }

    /// True when observing U1 is strictly optimal somewhere and observing U2
    /// strictly optimal at a larger lambda: the optimal computation inverts.
    pub fn has_inversion(&self) -> bool {
        let first_u1 = self
            .rows
            .iter()
            .position(|r| r.gap_observe_u1 > 0.0 && r.gap_observe_u1 > r.gap_observe_u2);
        match first_u1 {
            Some(i) => self.rows[i..]
                .iter()
                .any(|r| r.gap_observe_u2 > 0.0 && r.gap_observe_u2 > r.gap_observe_u1),
            None => false,
        }
    }

    /// Values of lambda where `gap1 - gap2` changes sign. A crossing that
    /// falls on the grid is reported exactly, otherwise it is bisected.
    pub fn crossings(&self) -> Result<Vec<f64>, ModelError> {
        let diff = |r: &QGapRow| r.gap_observe_u1 - r.gap_observe_u2;
        let mut out = Vec::new();
        let mut last: Option<usize> = None;
        for (i, r) in self.rows.iter().enumerate() {
            let d = diff(r);
            if d == 0.0 {
                continue;
            }
            if let Some(j) = last {
                let d0 = diff(&self.rows[j]);
                if d0.signum() != d.signum() {
                    if i > j + 1 {
                        out.push(self.rows[j + 1].lambda);
                    } else {
                        let (mut lo, mut hi) = (self.rows[j].lambda, r.lambda);
                        for _ in 0..80 {
                            let mid = 0.5 * (lo + hi);
                            let (g1, g2) = example4_qgaps(mid)?;
                            if (g1 - g2).signum() == d0.signum() {
                                lo = mid;
                            } else {
                                hi = mid;
                            }
                        }
                        out.push(0.5 * (lo + hi));
                    }
                }
            }
            last = Some(i);
        }
        Ok(out)
    }

    /// CSV with columns `lambda,gap_observe_u1,gap_observe_u2`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CounterexampleError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["lambda", "gap_observe_u1", "gap_observe_u2"]).map_err(csv_io)?;
        for r in &self.rows {
            w.write_record([r.lambda.to_string(), r.gap_observe_u1.to_string(), r.gap_observe_u2.to_string()])
                .map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_io(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e)
}

// ---------------------------------------------------------------------------
// Unbounded computation

/// Posterior odds `2^(s - f)` that the unknown arm is the good one.
pub fn odds_ratio(successes: u64, failures: u64) -> f64 {
    2f64.powi(successes as i32 - failures as i32)
}

/// Truncation of the two-armed chain: `|s - f| <= depth`, at most `horizon`
/// further samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainTruncation {
    pub depth: i64,
    pub horizon: u32,
}

impl Default for ChainTruncation {
    fn default() -> Self {
        ChainTruncation { depth: 64, horizon: 4096 }
    }
}

/// Computation ids in the chain MDP.
pub const SAMPLE_KNOWN_ARM: usize = 0;
pub const SAMPLE_UNKNOWN_ARM: usize = 1;

/// Chain MDP over `d = s - f`: arm 1 is worth exactly 1/2, arm 2 is worth 1/3
/// or 2/3 with equal prior odds. Sampling arm 1 teaches nothing. State `i`
/// holds `d = i - depth`.
pub fn example3_mdp(cost: f64, depth: i64) -> Result<FiniteMetaMdp, ModelError> {
    let mut b = MdpBuilder::new(cost);
    let mean = |d: i64| {
        let odds = 2f64.powi(d as i32);
        let p_good = odds / (1.0 + odds);
        (1.0 + p_good) / 3.0
    };
    for d in -depth..=depth {
        b.add_state(mean(d).max(0.5));
    }
    for d in -depth..=depth {
        let id = (d + depth) as usize;
        b.add_computation(id, SAMPLE_KNOWN_ARM, vec![(id, 1.0)]);
        if d.abs() < depth {
            let up = mean(d);
            b.add_computation(id, SAMPLE_UNKNOWN_ARM, vec![(id + 1, up), (id - 1, 1.0 - up)]);
        }
    }
    b.build(depth as usize)
}

fn continuation_at(cost: f64, t: ChainTruncation) -> Result<BTreeSet<i64>, ModelError> {
    let mdp = example3_mdp(cost, t.depth)?;
    let sol = solve_exact(&mdp, Horizon::Steps(t.horizon))?;
    Ok((-t.depth..=t.depth)
        .filter(|&d| sol.optimal_action[(d + t.depth) as usize] != Action::Stop)
        .collect())
}

/// Values of `s - f` where continuing is optimal. The truncation is doubled
/// until two consecutive solves agree (at most `max_doublings` times).
pub fn example3_continuation(
    cost: f64,
    truncation: ChainTruncation,
    max_doublings: u32,
) -> Result<BTreeSet<i64>, CounterexampleError> {
    let mut t = truncation;
    let mut set = continuation_at(cost, t)?;
    for _ in 0..=max_doublings {
        let bigger = ChainTruncation { depth: t.depth * 2, horizon: t.horizon * 2 };
        let next = continuation_at(cost, bigger)?;
        if next == set {
            return Ok(set);
        }
        t = bigger;
        set = next;
    }
    Err(CounterexampleError::UnstableTruncation { depth: t.depth, horizon: t.horizon })
}

/// Cost range `(lo, hi)` on which the continuation set equals `target`,
/// found by bisection in log-cost from a cost inside the range. The set only
/// grows as cost falls.
pub fn example3_cost_band(
    target: &BTreeSet<i64>,
    inside: f64,
    truncation: ChainTruncation,
) -> Result<(f64, f64), CounterexampleError> {
    let is_target = |c: f64| -> Result<bool, CounterexampleError> { Ok(&example3_continuation(c, truncation, 4)? == target) };
    assert!(is_target(inside)?, "starting cost must lie in the band");
    let bisect = |mut good: f64, mut bad: f64| -> Result<f64, CounterexampleError> {
        for _ in 0..60 {
            let mid = (0.5 * (good.ln() + bad.ln())).exp();
            if is_target(mid)? {
                good = mid;
            } else {
                bad = mid;
            }
        }
        Ok((good * bad).sqrt())
    };
    let hi = bisect(inside, 1.0)?;
    let mut below = inside;
    while is_target(below)? {
        below *= 0.5;
        if below < 1e-12 {
            return Ok((0.0, hi));
        }
    }
    let lo = bisect(inside, below)?;
    Ok((lo, hi))
}

// ---------------------------------------------------------------------------
// Context interval

/// State whose stop/continue decision is swept over the known-arm value.
#[derive(Debug, Clone, PartialEq)]
pub enum ContextBase {
    /// One unknown arm with these tallies.
    OneArmed(BetaCounts),
    /// A flat state, solved exactly with at most `max_samples` further samples.
    Flat { state: FlatState, max_samples: u64 },
}

impl ContextBase {
    fn best_mean(&self) -> f64 {
        match self {
            ContextBase::OneArmed(c) => c.posterior_mean(),
            ContextBase::Flat { state, .. } => state.best_mean(),
        }
    }

    fn continues(&self, lambda: f64, cost: f64) -> Result<bool, CounterexampleError> {
        match self {
            ContextBase::OneArmed(c) => {
                let t = solve_one_armed(lambda, cost)?;
                Ok(t.action(c.successes, c.failures) == OneArmedAction::Sample)
            }
            ContextBase::Flat { state, max_samples } => {
                let flat = FlatMdp::build(state, cost, *max_samples, Some(lambda))?;
                let sol = solve_exact(&flat.mdp, Horizon::Acyclic)?;
                Ok(sol.optimal_action[flat.mdp.initial()] != Action::Stop)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalReport {
    /// Continue (true) or stop at each grid value.
    pub continues: Vec<bool>,
    /// First and last grid values where continuing is optimal.
    pub interval: Option<(f64, f64)>,
    pub contiguous: bool,
    /// Whether the best mean lies strictly between the stopping grid values
    /// that bracket the continue set. Vacuously true for an empty set.
    pub contains_best_mean: bool,
}

impl IntervalReport {
    pub fn holds(&self) -> bool {
        self.contiguous && self.contains_best_mean
    }
}

/// Sweeps the known-arm value over `lambda_grid` and checks that the values
/// where continuing is optimal form one interval holding the best mean.
pub fn interval_property_check(
    lambda_grid: &[f64],
    base: &ContextBase,
    cost: f64,
) -> Result<IntervalReport, CounterexampleError> {
    if lambda_grid.is_empty() || lambda_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CounterexampleError::BadGrid);
    }
    let continues = lambda_grid
        .par_iter()
        .map(|&l| base.continues(l, cost))
        .collect::<Result<Vec<bool>, _>>()?;
    let first = continues.iter().position(|&c| c);
    let last = continues.iter().rposition(|&c| c);
    let (interval, contiguous, contains) = match (first, last) {
        (Some(i), Some(j)) => {
            let contiguous = continues[i..=j].iter().all(|&c| c);
            let below = if i == 0 { f64::NEG_INFINITY } else { lambda_grid[i - 1] };
            let above = if j + 1 == lambda_grid.len() { f64::INFINITY } else { lambda_grid[j + 1] };
            let m = base.best_mean();
            (Some((lambda_grid[i], lambda_grid[j])), contiguous, below < m && m < above)
        }
        _ => (None, true, true),
    };
    Ok(IntervalReport { continues, interval, contiguous, contains_best_mean: contains })
}
