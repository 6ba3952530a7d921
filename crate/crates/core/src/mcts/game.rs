//! Matches between searchers and the cost calibration sweep.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{hybrid_search, uct_search, BudgetLedger, GameTree, HybridParams, MctsError, NodeRef, TreeConfig};
use crate::rng::{self, derive_seed};
use crate::stats::{wilson_interval, Z95};
use crate::voi::VoiVariant;

/// A move-selection strategy for one side of a game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Player {
    Uct { budget: u64, exploration: f64 },
    Hybrid { budget: u64, params: HybridParams },
    /// Plays the exact minimax move.
    Minimax,
    /// Plays uniformly at random.
    Random,
}

struct Side {
    player: Player,
    ledger: Option<BudgetLedger>,
}

impl Side {
    fn new(player: Player) -> Self {
        let ledger = match player {
            Player::Hybrid { budget, .. } => Some(BudgetLedger::new(budget)),
            _ => None,
        };
        Side { player, ledger }
    }

    fn choose(&mut self, tree: &GameTree, node: NodeRef, seed: u64) -> Result<usize, MctsError> {
        Ok(match self.player {
            Player::Uct { budget, exploration } => uct_search(tree, node, budget, exploration, seed)?.chosen,
            Player::Hybrid { params, .. } => {
                let ledger = self.ledger.expect("hybrid side has a ledger");
                let r = hybrid_search(tree, node, ledger, &params, seed)?;
                self.ledger = Some(r.ledger);
                r.chosen
            }
            Player::Minimax => tree.optimal_children(&node)[0],
            Player::Random => rng::stream(seed, 0).random_range(0..tree.config().branching),
        })
    }
}

/// Plays one game; returns whether the first player won.
fn play_game(tree: &GameTree, first: Player, second: Player, seed: u64) -> Result<bool, MctsError> {
    let mut sides = [Side::new(first), Side::new(second)];
    let mut node = tree.root();
    let mut ply = 0u64;
    while !tree.is_leaf(&node) {
        let side = &mut sides[(node.level % 2) as usize];
        let j = side.choose(tree, node, derive_seed(seed, ply))?;
        node = tree.child(&node, j);
        ply += 1;
    }
    Ok(rng::stream(seed, u64::MAX).random::<f64>() < node.latent)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchResult {
    pub wins: u64,
    pub games: u64,
    pub win_rate: f64,
    /// Two-sided 95% Wilson interval.
    pub ci: (f64, f64),
}

/// Plays `n_games` games of `a` against `b`. Games come in pairs on the same
/// tree and seeds with the sides swapped, so a player facing itself wins
/// exactly half of each complete pair.
pub fn play_match(a: Player, b: Player, tree: &TreeConfig, n_games: u64, seed: u64) -> Result<MatchResult, MctsError> {
    if n_games == 0 {
        return Err(MctsError::NoGames);
    }
    tree.validate()?;
    let wins = (0..n_games)
        .into_par_iter()
        .map(|g| {
            let pair = derive_seed(seed, g / 2);
            let t = GameTree::new(*tree, pair)?;
            let a_first = g % 2 == 0;
            let first_won = if a_first { play_game(&t, a, b, pair)? } else { play_game(&t, b, a, pair)? };
            Ok(u64::from(first_won == a_first))
        })
        .collect::<Result<Vec<u64>, MctsError>>()?
        .into_iter()
        .sum::<u64>();
    Ok(MatchResult { wins, games: n_games, win_rate: wins as f64 / n_games as f64, ci: wilson_interval(wins, n_games, Z95) })
}

/// How often each searcher picks a minimax-optimal root move on the same
/// trees with the same rollout seeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalRates {
    pub trees: u64,
    pub hybrid_hits: u64,
    pub uct_hits: u64,
    /// Mean rollouts used by the hybrid.
    pub hybrid_mean_samples: f64,
}

impl OptimalRates {
    pub fn hybrid_rate(&self) -> f64 {
        self.hybrid_hits as f64 / self.trees as f64
    }

    pub fn uct_rate(&self) -> f64 {
        self.uct_hits as f64 / self.trees as f64
    }
}

pub fn optimal_move_rates(
    tree: &TreeConfig,
    n_trees: u64,
    budget: u64,
    params: &HybridParams,
    seed: u64,
) -> Result<OptimalRates, MctsError> {
    if n_trees == 0 {
        return Err(MctsError::NoGames);
    }
    let per_tree = (0..n_trees)
        .into_par_iter()
        .map(|i| {
            let s = derive_seed(seed, i);
            let t = GameTree::new(*tree, s)?;
            let best = t.optimal_children(&t.root());
            let h = hybrid_search(&t, t.root(), BudgetLedger::new(budget), params, s)?;
            let u = uct_search(&t, t.root(), budget, params.exploration, s)?;
            Ok((best.contains(&h.chosen), best.contains(&u.chosen), h.samples_used))
        })
        .collect::<Result<Vec<_>, MctsError>>()?;
    let hybrid_hits = per_tree.iter().filter(|r| r.0).count() as u64;
    let uct_hits = per_tree.iter().filter(|r| r.1).count() as u64;
    let samples: u64 = per_tree.iter().map(|r| r.2).sum();
    Ok(OptimalRates { trees: n_trees, hybrid_hits, uct_hits, hybrid_mean_samples: samples as f64 / n_trees as f64 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub budget: u64,
    pub c: f64,
    pub variant: VoiVariant,
    pub wins: u64,
    pub games: u64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl CalibrationRow {
    pub fn win_rate(&self) -> f64 {
        self.wins as f64 / self.games as f64
    }
}

/// Hybrid win rates against full-budget UCT over a (budget, cost) grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationTable {
    pub rows: Vec<CalibrationRow>,
}

/// Each cell is a match of the hybrid (`base` with its cost replaced) against
/// UCT with the same nominal budget, using the same game seeds in every cell.
pub fn calibrate_cost(
    tree: &TreeConfig,
    budgets: &[u64],
    costs: &[f64],
    base: &HybridParams,
    n_games: u64,
    seed: u64,
) -> Result<CalibrationTable, MctsError> {
    if budgets.is_empty() || costs.is_empty() {
        return Err(MctsError::EmptyGrid);
    }
    let mut rows = Vec::with_capacity(budgets.len() * costs.len());
    for &budget in budgets {
        for &c in costs {
            let hybrid = Player::Hybrid { budget, params: HybridParams { cost: c, ..*base } };
            let uct = Player::Uct { budget, exploration: base.exploration };
            let m = play_match(hybrid, uct, tree, n_games, seed)?;
            rows.push(CalibrationRow { budget, c, variant: base.variant, wins: m.wins, games: m.games, ci_lo: m.ci.0, ci_hi: m.ci.1 });
        }
    }
    Ok(CalibrationTable { rows })
}

impl CalibrationTable {
    /// Cost whose worst win rate across budgets is highest; the smallest such
    /// cost on ties.
    pub fn recommended_cost(&self) -> Option<f64> {
        let mut costs: Vec<f64> = self.rows.iter().map(|r| r.c).collect();
        costs.sort_by(f64::total_cmp);
        costs.dedup();
        let worst = |c: f64| {
            self.rows.iter().filter(|r| r.c == c).map(CalibrationRow::win_rate).fold(f64::INFINITY, f64::min)
        };
        let mut best: Option<(f64, f64)> = None;
        for c in costs {
            let w = worst(c);
            if best.is_none_or(|(_, bw)| w > bw) {
                best = Some((c, w));
            }
        }
        best.map(|(c, _)| c)
    }

    /// Mean win rate per cost across budgets, in increasing cost order.
    pub fn mean_by_cost(&self) -> Vec<(f64, f64)> {
        let mut costs: Vec<f64> = self.rows.iter().map(|r| r.c).collect();
        costs.sort_by(f64::total_cmp);
        costs.dedup();
        costs
            .into_iter()
            .map(|c| {
                let rs: Vec<f64> = self.rows.iter().filter(|r| r.c == c).map(CalibrationRow::win_rate).collect();
                (c, rs.iter().sum::<f64>() / rs.len() as f64)
            })
            .collect()
    }

    /// CSV with columns `budget,c,variant,wins,games,ci_lo,ci_hi`.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r).map_err(std::io::Error::other)?;
        }
        w.flush()
    }
}
