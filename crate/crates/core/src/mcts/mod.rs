//! Tree search on synthetic two-player game trees.
//!
//! Leaves hold the first player's win probability. Latent values follow a
//! random walk down the tree: each edge adds uniform noise to the parent's
//! value, clamped to [0, 1]. A rollout descends to a leaf and draws a win or a
//! loss from the leaf probability, so the children of the root behave like
//! Bernoulli arms whose rates drift as the search below them adapts.
//!
//! Two searchers are provided. UCT applies UCB1 at every node and plays the
//! most-visited root child. The hybrid samples root children by a VOI bound,
//! runs UCT below them, stops early when no sample is worth its cost, banks
//! the unused budget for its next move, and plays the best sample mean.

mod game;

pub use game::{calibrate_cost, optimal_move_rates, play_match, CalibrationRow, CalibrationTable, MatchResult, OptimalRates, Player};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::policies::ucb1_choose;
use crate::rng::{self, StreamRng};
use crate::voi::{leader, should_stop, voi_select, ArmStats, VoiContext, VoiError, VoiVariant};

#[derive(Debug, Error, PartialEq)]
pub enum MctsError {
    #[error("branching factor must be at least 2, got {0}")]
    Branching(usize),
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error("tree with branching {branching} and depth {depth} has too many nodes to index")]
    TooLarge { branching: usize, depth: u32 },
    #[error("noise {0} must lie in [0, 1]")]
    Noise(f64),
    #[error("budget {budget} is smaller than the {children} root children")]
    BudgetTooSmall { budget: u64, children: usize },
    #[error("cannot search from a leaf")]
    LeafRoot,
    #[error("sample cost {0} must be finite and nonnegative")]
    InvalidCost(f64),
    #[error("at least one game is required")]
    NoGames,
    #[error("calibration grids must be nonempty")]
    EmptyGrid,
    #[error(transparent)]
    Voi(#[from] VoiError),
}

/// Shape of the synthetic tree family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub branching: usize,
    pub depth: u32,
    /// Half-width of the uniform increment added along each edge.
    pub noise: f64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig { branching: 6, depth: 6, noise: 0.2 }
    }
}

impl TreeConfig {
    pub fn validate(&self) -> Result<(), MctsError> {
        if self.branching < 2 {
            return Err(MctsError::Branching(self.branching));
        }
        if self.depth == 0 {
            return Err(MctsError::ZeroDepth);
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return Err(MctsError::Noise(self.noise));
        }
        (self.branching as u64)
            .checked_pow(self.depth + 1)
            .ok_or(MctsError::TooLarge { branching: self.branching, depth: self.depth })?;
        Ok(())
    }
}

/// A node of the implicit tree. Ids number nodes breadth-first, the root is 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeRef {
    pub id: u64,
    pub level: u32,
    pub latent: f64,
}

impl NodeRef {
    /// The first player moves at even levels.
    pub fn max_to_move(&self) -> bool {
        self.level % 2 == 0
    }
}

/// Complete game tree generated lazily from a seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GameTree {
    config: TreeConfig,
    seed: u64,
}

impl GameTree {
    pub fn new(config: TreeConfig, seed: u64) -> Result<GameTree, MctsError> {
        config.validate()?;
        Ok(GameTree { config, seed })
    }

    pub fn config(&self) -> &TreeConfig {
        &self.config
    }

    pub fn root(&self) -> NodeRef {
        NodeRef { id: 0, level: 0, latent: 0.5 }
    }

    pub fn is_leaf(&self, node: &NodeRef) -> bool {
        node.level >= self.config.depth
    }

    pub fn child(&self, node: &NodeRef, j: usize) -> NodeRef {
        let id = node.id * self.config.branching as u64 + j as u64 + 1;
        let u: f64 = rng::stream(self.seed, id).random();
        let latent = (node.latent + self.config.noise * (2.0 * u - 1.0)).clamp(0.0, 1.0);
        NodeRef { id, level: node.level + 1, latent }
    }

    pub fn children(&self, node: &NodeRef) -> Vec<NodeRef> {
        if self.is_leaf(node) {
            return Vec::new();
        }
        (0..self.config.branching).map(|j| self.child(node, j)).collect()
    }

    /// Exact minimax value (first player's win probability) of `node`.
    pub fn minimax(&self, node: &NodeRef) -> f64 {
        if self.is_leaf(node) {
            return node.latent;
        }
        let kids = self.children(node);
        let vals = kids.iter().map(|c| self.minimax(c));
        if node.max_to_move() {
            vals.fold(f64::NEG_INFINITY, f64::max)
        } else {
            vals.fold(f64::INFINITY, f64::min)
        }
    }

    /// Children whose minimax value is best for the player to move.
    pub fn optimal_children(&self, node: &NodeRef) -> Vec<usize> {
        let vals: Vec<f64> = self
            .children(node)
            .iter()
            .map(|c| {
                let v = self.minimax(c);
                if node.max_to_move() { v } else { 1.0 - v }
            })
            .collect();
        let best = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (0..vals.len()).filter(|&j| vals[j] >= best - crate::TIE_TOLERANCE).collect()
    }
}

/// How the searcher turns root statistics into a move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FinalMove {
    MostVisited,
    HighestMean,
}

impl FinalMove {
    /// Lowest index on ties.
    pub fn choose(self, root: &[ArmStats]) -> usize {
        match self {
            FinalMove::HighestMean => leader(root, None),
            FinalMove::MostVisited => {
                let mut best = 0;
                for (i, s) in root.iter().enumerate() {
                    if s.n > root[best].n {
                        best = i;
                    }
                }
                best
            }
        }
    }
}

/// Visit count and running mean of the first player's rollout outcome.
#[derive(Debug, Clone)]
pub struct SearchNode {
    pub node: NodeRef,
    pub stats: ArmStats,
    /// Arena indices, filled on first visit.
    pub children: Vec<usize>,
}

impl SearchNode {
    pub fn value_sum(&self) -> f64 {
        self.stats.mean * self.stats.n as f64
    }
}

/// Search state rooted at one node.
///
/// Rollouts through root child `i` draw their outcome from stream `i + 1` of
/// the search seed, the same stream layout as [`crate::bernoulli::BernoulliArms`].
pub struct Search<'t> {
    tree: &'t GameTree,
    nodes: Vec<SearchNode>,
    /// Root-child statistics from the perspective of the player to move.
    root_stats: Vec<ArmStats>,
    outcome_streams: Vec<StreamRng>,
    exploration: f64,
    trace: Vec<usize>,
}

impl<'t> Search<'t> {
    pub fn new(tree: &'t GameTree, root: NodeRef, exploration: f64, seed: u64) -> Result<Self, MctsError> {
        if tree.is_leaf(&root) {
            return Err(MctsError::LeafRoot);
        }
        let b = tree.config.branching;
        let mut s = Search {
            tree,
            nodes: vec![SearchNode { node: root, stats: ArmStats::default(), children: Vec::new() }],
            root_stats: vec![ArmStats::default(); b],
            outcome_streams: (0..b).map(|i| rng::stream(seed, i as u64 + 1)).collect(),
            exploration,
            trace: Vec::new(),
        };
        s.expand(0);
        Ok(s)
    }

    fn expand(&mut self, at: usize) {
        if !self.nodes[at].children.is_empty() || self.tree.is_leaf(&self.nodes[at].node) {
            return;
        }
        let kids = self.tree.children(&self.nodes[at].node);
        let start = self.nodes.len();
        for k in kids {
            self.nodes.push(SearchNode { node: k, stats: ArmStats::default(), children: Vec::new() });
        }
        self.nodes[at].children = (start..self.nodes.len()).collect();
    }

    fn ucb_child(&self, at: usize) -> usize {
        let node = &self.nodes[at];
        let max = node.node.max_to_move();
        let stats: Vec<ArmStats> = node
            .children
            .iter()
            .map(|&c| {
                let s = self.nodes[c].stats;
                ArmStats { n: s.n, mean: if max { s.mean } else { 1.0 - s.mean } }
            })
            .collect();
        let t = stats.iter().map(|s| s.n).sum();
        ucb1_choose(&stats, t, self.exploration)
    }

    /// One rollout through root child `i`; UCB1 picks every move below it.
    pub fn rollout(&mut self, i: usize) {
        let mut path = vec![0, self.nodes[0].children[i]];
        loop {
            let at = *path.last().expect("nonempty path");
            if self.tree.is_leaf(&self.nodes[at].node) {
                break;
            }
            self.expand(at);
            let j = self.ucb_child(at);
            path.push(self.nodes[at].children[j]);
        }
        let leaf = self.nodes[*path.last().expect("nonempty path")].node.latent;
        let win = self.outcome_streams[i].random::<f64>() < leaf;
        let r = f64::from(u8::from(win));
        for &p in &path {
            self.nodes[p].stats.push(r);
        }
        let mine = if self.nodes[0].node.max_to_move() { r } else { 1.0 - r };
        self.root_stats[i].push(mine);
        self.trace.push(i);
    }

    pub fn root_stats(&self) -> &[ArmStats] {
        &self.root_stats
    }

    pub fn nodes(&self) -> &[SearchNode] {
        &self.nodes
    }

    /// Root children in rollout order.
    pub fn trace(&self) -> &[usize] {
        &self.trace
    }

    fn root_ucb(&self) -> usize {
        let t = self.root_stats.iter().map(|s| s.n).sum();
        ucb1_choose(&self.root_stats, t, self.exploration)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub chosen: usize,
    pub samples_used: u64,
    pub root_stats: Vec<ArmStats>,
    pub trace: Vec<usize>,
}

/// UCT with `budget` rollouts; plays the most-visited root child.
pub fn uct_search(
    tree: &GameTree,
    root: NodeRef,
    budget: u64,
    exploration: f64,
    seed: u64,
) -> Result<SearchResult, MctsError> {
    uct_search_with(tree, root, budget, exploration, seed, FinalMove::MostVisited)
}

pub fn uct_search_with(
    tree: &GameTree,
    root: NodeRef,
    budget: u64,
    exploration: f64,
    seed: u64,
    final_move: FinalMove,
) -> Result<SearchResult, MctsError> {
    let b = tree.config.branching;
    if budget < b as u64 {
        return Err(MctsError::BudgetTooSmall { budget, children: b });
    }
    let mut s = Search::new(tree, root, exploration, seed)?;
    for _ in 0..budget {
        let i = s.root_ucb();
        s.rollout(i);
    }
    Ok(SearchResult {
        chosen: final_move.choose(&s.root_stats),
        samples_used: budget,
        root_stats: s.root_stats,
        trace: s.trace,
    })
}

/// Per-move budget with carryover of samples saved by stopping early.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetLedger {
    pub nominal: u64,
    pub carryover: u64,
}

/// Carryover never exceeds this multiple of the nominal budget.
pub const CARRYOVER_CAP: u64 = 4;

impl BudgetLedger {
    pub fn new(nominal: u64) -> Self {
        BudgetLedger { nominal, carryover: 0 }
    }

    pub fn available(&self) -> u64 {
        self.nominal + self.carryover
    }

    /// Ledger for the next move after `used` samples, and the samples lost
    /// to the carryover cap.
    pub fn settle(&self, used: u64) -> (BudgetLedger, u64) {
        let unused = self.available() - used;
        let kept = unused.min(CARRYOVER_CAP * self.nominal);
        (BudgetLedger { nominal: self.nominal, carryover: kept }, unused - kept)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridResult {
    pub chosen: usize,
    pub samples_used: u64,
    pub ledger: BudgetLedger,
    /// Unused samples dropped because of the carryover cap.
    pub forfeited: u64,
    pub root_stats: Vec<ArmStats>,
    pub trace: Vec<usize>,
}

/// Parameters of the VOI-at-the-root searcher.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridParams {
    pub cost: f64,
    pub variant: VoiVariant,
    pub exploration: f64,
    /// Round-robin passes over the root children before the VOI rule takes
    /// over. One pass leaves single-sample means of 0 or 1, which can make
    /// the stopping rule fire at once.
    #[serde(default = "one")]
    pub init_rounds: u64,
}

fn one() -> u64 {
    1
}

impl HybridParams {
    pub fn new(cost: f64, variant: VoiVariant) -> Self {
        HybridParams { cost, variant, exploration: crate::policies::DEFAULT_EXPLORATION, init_rounds: 1 }
    }
}

/// `init_rounds` rollouts per root child (fewer if the budget is short, never
/// less than one), then the root child with the largest VOI bound
/// (with `N` the remaining budget) until the budget runs out or, for a
/// positive cost, until no bound exceeds it. UCT runs below the root.
pub fn hybrid_search(
    tree: &GameTree,
    root: NodeRef,
    ledger: BudgetLedger,
    params: &HybridParams,
    seed: u64,
) -> Result<HybridResult, MctsError> {
    if !params.cost.is_finite() || params.cost < 0.0 {
        return Err(MctsError::InvalidCost(params.cost));
    }
    let b = tree.config.branching;
    let budget = ledger.available();
    if budget < b as u64 {
        return Err(MctsError::BudgetTooSmall { budget, children: b });
    }
    let mut s = Search::new(tree, root, params.exploration, seed)?;
    let rounds = params.init_rounds.clamp(1, budget / b as u64);
    for _ in 0..rounds {
        for i in 0..b {
            s.rollout(i);
        }
    }
    let mut used = rounds * b as u64;
    while used < budget {
        let ctx = VoiContext::new(s.root_stats.clone(), budget - used)?;
        if params.cost > 0.0 && should_stop(&ctx, params.cost) {
            break;
        }
        s.rollout(voi_select(&ctx, params.variant));
        used += 1;
    }
    let (next, forfeited) = ledger.settle(used);
    Ok(HybridResult {
        chosen: FinalMove::HighestMean.choose(&s.root_stats),
        samples_used: used,
        ledger: next,
        forfeited,
        root_stats: s.root_stats,
        trace: s.trace,
    })
}

#[cfg(test)]
mod tests;
