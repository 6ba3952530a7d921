//! Regret experiments on the k-armed Bernoulli selection problem.
//!
//! Two sweeps are supported. A cost sweep runs policies with their own
//! stopping rules over a grid of per-sample costs. A budget sweep spends a
//! fixed number of samples and reports pure selection regret. Within a trial
//! index every policy faces the same latent rates and the same per-arm
//! outcome streams, so regret differences are paired.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bernoulli::{regret, sample_truth, BernoulliArms, FlatState};
use crate::policies::{
    ucb1_choose, BlinkeredIndex, GatedUcb1, MetaAction, MetaPolicy, Myopic, PolicyError, DEFAULT_EXPLORATION,
    DEFAULT_GRID_POINTS,
};
use crate::rng::derive_seed;
use crate::stats::{paired_difference, MeanSe};
use crate::voi::{leader, run_voi_policy, ArmStats, VoiError, VoiVariant};

/// Version written to and required from experiment config files.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("unsupported config schema version {0}, expected {SCHEMA_VERSION}")]
    Schema(u32),
    #[error("policy {0} has no stopping rule and cannot run in a cost sweep")]
    NoStoppingRule(PolicyId),
    #[error("policy {0} cannot run in a budget sweep")]
    NotBudgeted(PolicyId),
    #[error("{0}")]
    Invalid(String),
    #[error("policy {policy} took more than {cap} samples in one trial")]
    StepCap { policy: PolicyId, cap: u64 },
    #[error("no records to summarize")]
    Empty,
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Voi(#[from] VoiError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PolicyId {
    #[serde(rename = "blinkered")]
    Blinkered,
    #[serde(rename = "myopic")]
    Myopic,
    #[serde(rename = "UCB1-B")]
    Ucb1Blinkered,
    #[serde(rename = "UCB1-b")]
    Ucb1Myopic,
    #[serde(rename = "VOI")]
    Voi,
    #[serde(rename = "VOI+")]
    VoiPlus,
    #[serde(rename = "UCB1")]
    Ucb1,
}

impl PolicyId {
    pub const COST_POLICIES: [PolicyId; 4] =
        [PolicyId::Blinkered, PolicyId::Myopic, PolicyId::Ucb1Blinkered, PolicyId::Ucb1Myopic];
    pub const BUDGET_POLICIES: [PolicyId; 3] = [PolicyId::Voi, PolicyId::VoiPlus, PolicyId::Ucb1];

    pub fn name(self) -> &'static str {
        match self {
            PolicyId::Blinkered => "blinkered",
            PolicyId::Myopic => "myopic",
            PolicyId::Ucb1Blinkered => "UCB1-B",
            PolicyId::Ucb1Myopic => "UCB1-b",
            PolicyId::Voi => "VOI",
            PolicyId::VoiPlus => "VOI+",
            PolicyId::Ucb1 => "UCB1",
        }
    }

    pub fn parse(s: &str) -> Option<PolicyId> {
        [PolicyId::COST_POLICIES.as_slice(), PolicyId::BUDGET_POLICIES.as_slice()]
            .concat()
            .into_iter()
            .find(|p| p.name() == s)
    }
}

impl std::fmt::Display for PolicyId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMode {
    CostSweep,
    BudgetSweep,
}

/// Costs `10^lo, ..., 10^hi` with `points` log-spaced values.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![10f64.powf(lo)];
    }
    (0..points).map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (points - 1) as f64)).collect()
}

pub fn default_costs() -> Vec<f64> {
    log_grid(-3.0, -1.5, 7)
}

pub fn default_budgets() -> Vec<u64> {
    vec![200, 400, 800, 1600, 2000]
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

fn default_k() -> usize {
    25
}

fn default_trials() -> u64 {
    1000
}

fn default_grid_points() -> usize {
    DEFAULT_GRID_POINTS
}

fn default_exploration() -> f64 {
    DEFAULT_EXPLORATION
}

fn default_step_cap() -> u64 {
    1_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    #[serde(default = "default_k")]
    pub k: usize,
    pub mode: SweepMode,
    #[serde(default = "default_costs")]
    pub costs: Vec<f64>,
    #[serde(default = "default_budgets")]
    pub budgets: Vec<u64>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    /// Empty means every policy allowed in the mode.
    #[serde(default)]
    pub policies: Vec<PolicyId>,
    #[serde(default)]
    pub seed: u64,
    /// Lambda grid size of the blinkered index.
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "default_exploration")]
    pub exploration: f64,
    /// Samples allowed per trial in a cost sweep before giving up.
    #[serde(default = "default_step_cap")]
    pub step_cap: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(mode: SweepMode) -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            k: default_k(),
            mode,
            costs: default_costs(),
            budgets: default_budgets(),
            trials: default_trials(),
            policies: Vec::new(),
            seed: 0,
            grid_points: DEFAULT_GRID_POINTS,
            exploration: DEFAULT_EXPLORATION,
            step_cap: default_step_cap(),
            output: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(BenchError::Schema(cfg.schema_version));
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Policies to run, filling in the mode's default list.
    pub fn resolved_policies(&self) -> Vec<PolicyId> {
        if !self.policies.is_empty() {
            return self.policies.clone();
        }
        match self.mode {
            SweepMode::CostSweep => PolicyId::COST_POLICIES.to_vec(),
            SweepMode::BudgetSweep => PolicyId::BUDGET_POLICIES.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(BenchError::Schema(self.schema_version));
        }
        if self.k < 2 {
            return Err(BenchError::Invalid(format!("k must be at least 2, got {}", self.k)));
        }
        if self.trials == 0 {
            return Err(BenchError::Invalid("trials must be positive".into()));
        }
        let policies = self.resolved_policies();
        match self.mode {
            SweepMode::CostSweep => {
                if self.costs.is_empty() {
                    return Err(BenchError::Invalid("cost grid is empty".into()));
                }
                if let Some(c) = self.costs.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
                    return Err(BenchError::Invalid(format!("costs must be positive and finite, got {c}")));
                }
                if let Some(p) = policies.iter().find(|p| !PolicyId::COST_POLICIES.contains(p)) {
                    return Err(BenchError::NoStoppingRule(*p));
                }
                if self.grid_points < 2 {
                    return Err(BenchError::Policy(PolicyError::GridTooSmall(self.grid_points)));
                }
            }
            SweepMode::BudgetSweep => {
                if self.budgets.is_empty() {
                    return Err(BenchError::Invalid("budget grid is empty".into()));
                }
                if let Some(b) = self.budgets.iter().find(|b| **b < self.k as u64) {
                    return Err(BenchError::Invalid(format!("budget {b} is below the arm count {}", self.k)));
                }
                if let Some(p) = policies.iter().find(|p| !PolicyId::BUDGET_POLICIES.contains(p)) {
                    return Err(BenchError::NotBudgeted(*p));
                }
            }
        }
        Ok(())
    }
}

/// One policy on one trial at one grid value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegretRecord {
    pub policy: PolicyId,
    /// Cost in a cost sweep, budget in a budget sweep.
    pub sweep_param: f64,
    pub trial: u64,
    pub selected: usize,
    pub samples: u64,
    pub regret: f64,
    /// Seconds; never written to the summary, which must be reproducible.
    pub wall_time: f64,
}

struct Trial {
    truth: Vec<f64>,
    seed: u64,
}

fn trial(cfg: &ExperimentConfig, index: u64) -> Trial {
    let seed = derive_seed(cfg.seed, index);
    Trial { truth: sample_truth(cfg.k, seed), seed }
}

/// Runs `policy` until it stops; returns the selected arm and sample count.
pub fn run_until_stop<P: MetaPolicy>(
    policy: &P,
    truth: &[f64],
    seed: u64,
    step_cap: u64,
) -> Option<(usize, u64)> {
    let mut arms = BernoulliArms::new(truth.to_vec(), seed);
    let mut state = FlatState::uniform(truth.len()).expect("at least one arm");
    loop {
        match policy.decide(&state) {
            MetaAction::Stop => return Some((state.best_arm(), state.samples_used())),
            MetaAction::Sample(i) => {
                if state.samples_used() >= step_cap {
                    return None;
                }
                let x = arms.pull(i);
                state.record(i, x);
            }
        }
    }
}

/// Samples each arm once, then by UCB1 until `budget` is spent; selects the
/// highest sample mean.
pub fn run_ucb1_budget(truth: &[f64], budget: u64, exploration: f64, seed: u64) -> (usize, u64) {
    let mut arms = BernoulliArms::new(truth.to_vec(), seed);
    let mut stats = vec![ArmStats::default(); truth.len()];
    for t in 0..budget {
        let i = ucb1_choose(&stats, t, exploration);
        stats[i].push(f64::from(u8::from(arms.pull(i))));
    }
    (leader(&stats, None), budget)
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t0 = Instant::now();
    let v = f();
    (v, t0.elapsed().as_secs_f64())
}

/// Regret of every configured policy at every cost, stopping by each
/// policy's own rule.
pub fn run_cost_sweep(cfg: &ExperimentConfig) -> Result<Vec<RegretRecord>, BenchError> {
    if cfg.mode != SweepMode::CostSweep {
        return Err(BenchError::Invalid("config mode is not cost-sweep".into()));
    }
    cfg.validate()?;
    let policies = cfg.resolved_policies();
    let needs_index = policies.iter().any(|p| matches!(p, PolicyId::Blinkered | PolicyId::Ucb1Blinkered));
    let mut out = Vec::new();
    for &c in &cfg.costs {
        let index = if needs_index { Some(BlinkeredIndex::build(c, cfg.grid_points)?) } else { None };
        let myopic = Myopic { cost: c };
        for &p in &policies {
            let recs = (0..cfg.trials)
                .into_par_iter()
                .map(|t| {
                    let tr = trial(cfg, t);
                    let (res, secs) = timed(|| {
                        let idx = index.as_ref();
                        match p {
                            PolicyId::Blinkered => run_until_stop(idx.expect("index built"), &tr.truth, tr.seed, cfg.step_cap),
                            PolicyId::Myopic => run_until_stop(&myopic, &tr.truth, tr.seed, cfg.step_cap),
                            PolicyId::Ucb1Blinkered => {
                                let g = GatedUcb1 { stop_rule: idx.expect("index built"), exploration: cfg.exploration };
                                run_until_stop(&g, &tr.truth, tr.seed, cfg.step_cap)
                            }
                            PolicyId::Ucb1Myopic => {
                                let g = GatedUcb1 { stop_rule: myopic, exploration: cfg.exploration };
                                run_until_stop(&g, &tr.truth, tr.seed, cfg.step_cap)
                            }
                            _ => unreachable!("validated cost policy"),
                        }
                    });
                    let (selected, samples) = res.ok_or(BenchError::StepCap { policy: p, cap: cfg.step_cap })?;
                    Ok(RegretRecord {
                        policy: p,
                        sweep_param: c,
                        trial: t,
                        selected,
                        samples,
                        regret: regret(&tr.truth, selected, samples, c),
                        wall_time: secs,
                    })
                })
                .collect::<Result<Vec<_>, BenchError>>()?;
            out.extend(recs);
        }
    }
    Ok(out)
}

/// Selection regret (no sampling cost) of every configured policy after
/// spending each budget in full.
pub fn run_budget_sweep(cfg: &ExperimentConfig) -> Result<Vec<RegretRecord>, BenchError> {
    if cfg.mode != SweepMode::BudgetSweep {
        return Err(BenchError::Invalid("config mode is not budget-sweep".into()));
    }
    cfg.validate()?;
    let policies = cfg.resolved_policies();
    let mut out = Vec::new();
    for &budget in &cfg.budgets {
        for &p in &policies {
            let recs = (0..cfg.trials)
                .into_par_iter()
                .map(|t| {
                    let tr = trial(cfg, t);
                    let (res, secs) = timed(|| -> Result<(usize, u64), BenchError> {
                        Ok(match p {
                            PolicyId::Voi | PolicyId::VoiPlus => {
                                let v = if p == PolicyId::Voi { VoiVariant::Voi } else { VoiVariant::VoiPlus };
                                let r = run_voi_policy(&tr.truth, budget, v, tr.seed, None)?;
                                (r.selected, r.samples_used)
                            }
                            PolicyId::Ucb1 => run_ucb1_budget(&tr.truth, budget, cfg.exploration, tr.seed),
                            _ => unreachable!("validated budget policy"),
                        })
                    });
                    let (selected, samples) = res?;
                    Ok(RegretRecord {
                        policy: p,
                        sweep_param: budget as f64,
                        trial: t,
                        selected,
                        samples,
                        regret: regret(&tr.truth, selected, samples, 0.0),
                        wall_time: secs,
                    })
                })
                .collect::<Result<Vec<_>, BenchError>>()?;
            out.extend(recs);
        }
    }
    Ok(out)
}

/// Runs whichever sweep the config asks for.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RegretRecord>, BenchError> {
    match cfg.mode {
        SweepMode::CostSweep => run_cost_sweep(cfg),
        SweepMode::BudgetSweep => run_budget_sweep(cfg),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummaryRow {
    pub policy: PolicyId,
    pub sweep_param: f64,
    pub mean_regret: f64,
    /// Absent with a single trial.
    pub se: Option<f64>,
    pub trials: u64,
    pub mean_samples: f64,
}

/// Per (policy, grid value) means, ordered by policy then grid value, so the
/// result does not depend on record order.
pub fn summarize(records: &[RegretRecord]) -> Result<Vec<SummaryRow>, BenchError> {
    if records.is_empty() {
        return Err(BenchError::Empty);
    }
    let mut sorted: Vec<&RegretRecord> = records.iter().collect();
    sorted.sort_by(|a, b| {
        a.policy.cmp(&b.policy).then(a.sweep_param.total_cmp(&b.sweep_param)).then(a.trial.cmp(&b.trial))
    });
    let mut rows = Vec::new();
    for group in sorted.chunk_by(|a, b| a.policy == b.policy && a.sweep_param == b.sweep_param) {
        let regrets: Vec<f64> = group.iter().map(|r| r.regret).collect();
        let m = MeanSe::of(&regrets).expect("nonempty group");
        let samples = group.iter().map(|r| r.samples as f64).sum::<f64>() / group.len() as f64;
        rows.push(SummaryRow {
            policy: group[0].policy,
            sweep_param: group[0].sweep_param,
            mean_regret: m.mean,
            se: m.se,
            trials: group.len() as u64,
            mean_samples: samples,
        });
    }
    Ok(rows)
}

/// Largest standard error relative to its mean over the summary.
pub fn max_relative_error(rows: &[SummaryRow]) -> Option<f64> {
    rows.iter().filter_map(|r| r.se.filter(|_| r.mean_regret > 0.0).map(|se| se / r.mean_regret)).reduce(f64::max)
}

/// CSV with columns `policy,sweep_param,mean_regret,se,trials,mean_samples`.
pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["policy", "sweep_param", "mean_regret", "se", "trials", "mean_samples"]).map_err(std::io::Error::other)?;
    for r in rows {
        w.write_record([
            r.policy.name().to_string(),
            r.sweep_param.to_string(),
            r.mean_regret.to_string(),
            r.se.map(|s| s.to_string()).unwrap_or_default(),
            r.trials.to_string(),
            r.mean_samples.to_string(),
        ])
        .map_err(std::io::Error::other)?;
    }
    w.flush()?;
    Ok(())
}

/// Paired regret difference `a - b` at one grid value, matched by trial.
pub fn paired_regret(records: &[RegretRecord], a: PolicyId, b: PolicyId, param: f64) -> Option<MeanSe> {
    let pick = |p: PolicyId| {
        let mut v: Vec<(u64, f64)> =
            records.iter().filter(|r| r.policy == p && r.sweep_param == param).map(|r| (r.trial, r.regret)).collect();
        v.sort_by_key(|x| x.0);
        v
    };
    let (xa, xb) = (pick(a), pick(b));
    if xa.len() != xb.len() || xa.iter().zip(&xb).any(|(x, y)| x.0 != y.0) {
        return None;
    }
    let va: Vec<f64> = xa.iter().map(|x| x.1).collect();
    let vb: Vec<f64> = xb.iter().map(|x| x.1).collect();
    paired_difference(&va, &vb)
}

/// Minimal SVG line chart of mean regret against the sweep parameter, log
/// scale on both axes.
pub fn render_svg(rows: &[SummaryRow]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const PAD: f64 = 50.0;
    let pos: Vec<&SummaryRow> = rows.iter().filter(|r| r.mean_regret > 0.0 && r.sweep_param > 0.0).collect();
    let mut s = format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\">\n");
    if pos.is_empty() {
        s.push_str("</svg>\n");
        return s;
    }
    let lx = |r: &SummaryRow| r.sweep_param.log10();
    let ly = |r: &SummaryRow| r.mean_regret.log10();
    let (x0, x1) = pos.iter().map(|r| lx(r)).fold((f64::INFINITY, f64::NEG_INFINITY), |a, v| (a.0.min(v), a.1.max(v)));
    let (y0, y1) = pos.iter().map(|r| ly(r)).fold((f64::INFINITY, f64::NEG_INFINITY), |a, v| (a.0.min(v), a.1.max(v)));
    let sx = |v: f64| PAD + (v - x0) / (x1 - x0).max(1e-12) * (W - 2.0 * PAD);
    let sy = |v: f64| H - PAD - (v - y0) / (y1 - y0).max(1e-12) * (H - 2.0 * PAD);
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"];
    s.push_str(&format!(
        "<rect x=\"{PAD}\" y=\"{PAD}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#888\"/>\n",
        W - 2.0 * PAD,
        H - 2.0 * PAD
    ));
    let mut policies: Vec<PolicyId> = pos.iter().map(|r| r.policy).collect();
    policies.dedup();
    for (n, p) in policies.iter().enumerate() {
        let pts: Vec<String> = pos
            .iter()
            .filter(|r| r.policy == *p)
            .map(|r| format!("{:.1},{:.1}", sx(lx(r)), sy(ly(r))))
            .collect();
        let color = colors[n % colors.len()];
        s.push_str(&format!("<polyline fill=\"none\" stroke=\"{color}\" points=\"{}\"/>\n", pts.join(" ")));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" fill=\"{color}\" font-size=\"12\">{}</text>\n",
            W - PAD + 4.0,
            PAD + 14.0 * n as f64,
            p.name()
        ));
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cost() -> ExperimentConfig {
        ExperimentConfig { k: 4, trials: 40, costs: vec![0.05, 0.01], grid_points: 17, ..ExperimentConfig::new(SweepMode::CostSweep) }
    }

    fn record(policy: PolicyId, param: f64, trial: u64, regret: f64) -> RegretRecord {
        RegretRecord { policy, sweep_param: param, trial, selected: 0, samples: trial, regret, wall_time: 0.0 }
    }

    #[test]
    fn policy_names_round_trip() {
        for p in PolicyId::COST_POLICIES.iter().chain(&PolicyId::BUDGET_POLICIES) {
            assert_eq!(PolicyId::parse(p.name()), Some(*p));
            let json = serde_json::to_string(p).unwrap();
            assert_eq!(json, format!("\"{}\"", p.name()));
        }
        assert_eq!(PolicyId::parse("nope"), None);
    }

    #[test]
    fn config_json_round_trip_and_defaults() {
        let c = small_cost();
        assert_eq!(ExperimentConfig::from_json(&c.to_json()).unwrap(), c);
        let d = ExperimentConfig::from_json(r#"{"mode": "budget-sweep"}"#).unwrap();
        assert_eq!(d.k, 25);
        assert_eq!(d.budgets, vec![200, 400, 800, 1600, 2000]);
        assert_eq!(d.trials, 1000);
        assert!(matches!(
            ExperimentConfig::from_json(r#"{"mode": "cost-sweep", "schema_version": 9}"#),
            Err(BenchError::Schema(9))
        ));
    }

    #[test]
    fn cost_mode_rejects_plain_ucb1() {
        let c = ExperimentConfig { policies: vec![PolicyId::Ucb1], ..small_cost() };
        assert!(matches!(run_cost_sweep(&c), Err(BenchError::NoStoppingRule(PolicyId::Ucb1))));
        let b = ExperimentConfig { policies: vec![PolicyId::Myopic], ..ExperimentConfig::new(SweepMode::BudgetSweep) };
        assert!(matches!(run_budget_sweep(&b), Err(BenchError::NotBudgeted(PolicyId::Myopic))));
    }

    #[test]
    fn huge_cost_is_prior_selection() {
        let c = ExperimentConfig { costs: vec![1.0], ..small_cost() };
        let recs = run_cost_sweep(&c).unwrap();
        for r in &recs {
            assert_eq!(r.samples, 0);
            assert_eq!(r.selected, 0);
            let truth = sample_truth(4, derive_seed(c.seed, r.trial));
            let best = truth.iter().copied().fold(0.0, f64::max);
            assert_eq!(r.regret, best - truth[0]);
        }
    }

    #[test]
    fn cost_sweep_is_deterministic() {
        let c = small_cost();
        let a = summarize(&run_cost_sweep(&c).unwrap()).unwrap();
        let b = summarize(&run_cost_sweep(&c).unwrap()).unwrap();
        let (mut x, mut y) = (Vec::new(), Vec::new());
        write_summary_csv(&a, &mut x).unwrap();
        write_summary_csv(&b, &mut y).unwrap();
        assert_eq!(x, y);
        assert_eq!(a.len(), 8);
    }

    #[test]
    fn budget_k_is_one_sample_each() {
        let c = ExperimentConfig { k: 5, trials: 30, budgets: vec![5], ..ExperimentConfig::new(SweepMode::BudgetSweep) };
        let recs = run_budget_sweep(&c).unwrap();
        for t in 0..30 {
            let sel: Vec<usize> = recs.iter().filter(|r| r.trial == t).map(|r| r.selected).collect();
            assert!(sel.iter().all(|&s| s == sel[0]), "{sel:?}");
        }
        assert!(recs.iter().all(|r| r.samples == 5));
    }

    #[test]
    fn summary_by_hand() {
        let recs = vec![
            record(PolicyId::Voi, 200.0, 0, 0.1),
            record(PolicyId::Voi, 200.0, 1, 0.3),
            record(PolicyId::Ucb1, 200.0, 0, 0.5),
        ];
        let rows = summarize(&recs).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].policy, PolicyId::Voi);
        assert!((rows[0].mean_regret - 0.2).abs() < 1e-15);
        assert!((rows[0].se.unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(rows[0].mean_samples, 0.5);
        assert_eq!(rows[1].se, None);
        let mut shuffled = recs.clone();
        shuffled.reverse();
        assert_eq!(summarize(&shuffled).unwrap(), rows);
        assert!(matches!(summarize(&[]), Err(BenchError::Empty)));

        let mut buf = Vec::new();
        write_summary_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("policy,sweep_param,mean_regret,se,trials,mean_samples\n"));
        assert!(text.contains("UCB1,200,0.5,,1,0\n"), "{text}");
    }

    #[test]
    fn paired_difference_by_trial() {
        let recs = vec![
            record(PolicyId::Voi, 1.0, 0, 0.1),
            record(PolicyId::Voi, 1.0, 1, 0.4),
            record(PolicyId::Ucb1, 1.0, 1, 0.6),
            record(PolicyId::Ucb1, 1.0, 0, 0.2),
        ];
        let d = paired_regret(&recs, PolicyId::Voi, PolicyId::Ucb1, 1.0).unwrap();
        assert!((d.mean + 0.15).abs() < 1e-12);
    }

    #[test]
    fn svg_has_one_line_per_policy() {
        let rows = summarize(&[record(PolicyId::Voi, 200.0, 0, 0.1), record(PolicyId::Voi, 400.0, 0, 0.05)]).unwrap();
        let svg = render_svg(&rows);
        assert_eq!(svg.matches("<polyline").count(), 1);
    }
}
