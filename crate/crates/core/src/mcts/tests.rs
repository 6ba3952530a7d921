use super::*;
use crate::voi::run_voi_policy;

fn small() -> TreeConfig {
    TreeConfig { branching: 3, depth: 4, noise: 0.2 }
}

fn params(cost: f64) -> HybridParams {
    HybridParams::new(cost, VoiVariant::Voi)
}

#[test]
fn config_validation() {
    assert_eq!(TreeConfig { branching: 1, ..small() }.validate(), Err(MctsError::Branching(1)));
    assert_eq!(TreeConfig { depth: 0, ..small() }.validate(), Err(MctsError::ZeroDepth));
    assert_eq!(TreeConfig { noise: 1.5, ..small() }.validate(), Err(MctsError::Noise(1.5)));
    assert!(TreeConfig { branching: 8, depth: 12, noise: 0.1 }.validate().is_ok());
    assert!(matches!(TreeConfig { branching: 1000, depth: 12, noise: 0.1 }.validate(), Err(MctsError::TooLarge { .. })));
}

#[test]
fn tree_is_deterministic_and_bounded() {
    let t = GameTree::new(small(), 5).unwrap();
    let u = GameTree::new(small(), 5).unwrap();
    assert_eq!(t.children(&t.root()), u.children(&u.root()));
    let mut stack = vec![t.root()];
    while let Some(n) = stack.pop() {
        assert!((0.0..=1.0).contains(&n.latent));
        stack.extend(t.children(&n));
    }
    assert!(t.children(&t.child(&t.child(&t.child(&t.child(&t.root(), 0), 1), 2), 0)).is_empty());
}

#[test]
fn minimax_by_hand_on_depth_two() {
    let t = GameTree::new(TreeConfig { branching: 2, depth: 2, noise: 0.3 }, 11).unwrap();
    let r = t.root();
    let vals: Vec<f64> = t
        .children(&r)
        .iter()
        .map(|c| t.children(c).iter().map(|l| l.latent).fold(f64::INFINITY, f64::min))
        .collect();
    assert_eq!(t.minimax(&r), vals[0].max(vals[1]));
    let best = t.optimal_children(&r);
    assert!(best.iter().all(|&j| vals[j] == vals[0].max(vals[1])));
}

#[test]
fn uct_depth_one_is_flat_ucb1() {
    let t = GameTree::new(TreeConfig { branching: 4, depth: 1, noise: 0.4 }, 3).unwrap();
    let res = uct_search(&t, t.root(), 200, 2.0, 9).unwrap();
    let truth: Vec<f64> = t.children(&t.root()).iter().map(|c| c.latent).collect();
    let mut arms = crate::bernoulli::BernoulliArms::new(truth, 9);
    let mut stats = vec![ArmStats::default(); 4];
    let mut trace = Vec::new();
    for _ in 0..200 {
        let total = stats.iter().map(|s| s.n).sum();
        let i = ucb1_choose(&stats, total, 2.0);
        stats[i].push(f64::from(u8::from(arms.pull(i))));
        trace.push(i);
    }
    assert_eq!(res.trace, trace);
    assert_eq!(res.root_stats, stats);
}

#[test]
fn uct_converges_on_small_tree() {
    let t = GameTree::new(TreeConfig { branching: 2, depth: 2, noise: 0.4 }, 21).unwrap();
    let best = t.optimal_children(&t.root());
    let res = uct_search(&t, t.root(), 20_000, 2.0, 4).unwrap();
    assert!(best.contains(&res.chosen), "{best:?} {:?}", res.root_stats);
}

#[test]
fn search_is_seed_deterministic() {
    let t = GameTree::new(small(), 2).unwrap();
    assert_eq!(uct_search(&t, t.root(), 300, 2.0, 1).unwrap(), uct_search(&t, t.root(), 300, 2.0, 1).unwrap());
    let a = hybrid_search(&t, t.root(), BudgetLedger::new(300), &params(1e-3), 1).unwrap();
    let b = hybrid_search(&t, t.root(), BudgetLedger::new(300), &params(1e-3), 1).unwrap();
    assert_eq!(a, b);
}

#[test]
fn node_visits_add_up() {
    let t = GameTree::new(small(), 8).unwrap();
    let mut s = Search::new(&t, t.root(), 2.0, 3).unwrap();
    for k in 0..150 {
        s.rollout(k % 3);
    }
    for n in s.nodes() {
        if !n.children.is_empty() {
            let sum: u64 = n.children.iter().map(|&c| s.nodes()[c].stats.n).sum();
            assert_eq!(n.stats.n, sum);
        }
    }
    for (i, st) in s.root_stats().iter().enumerate() {
        assert_eq!(st.n, s.trace().iter().filter(|&&j| j == i).count() as u64);
    }
}

#[test]
fn hybrid_zero_cost_spends_everything() {
    let t = GameTree::new(small(), 4).unwrap();
    let r = hybrid_search(&t, t.root(), BudgetLedger::new(100), &params(0.0), 7).unwrap();
    assert_eq!(r.samples_used, 100);
    assert_eq!(r.ledger.carryover, 0);
}

#[test]
fn hybrid_huge_cost_stops_after_initialization() {
    let t = GameTree::new(small(), 4).unwrap();
    let r = hybrid_search(&t, t.root(), BudgetLedger::new(100), &params(2.0), 7).unwrap();
    assert_eq!(r.samples_used, 3);
    assert_eq!(r.ledger.carryover, 97);
    assert_eq!(r.forfeited, 0);
}

#[test]
fn ledger_caps_carryover() {
    let l = BudgetLedger { nominal: 10, carryover: 40 };
    assert_eq!(l.available(), 50);
    let (next, lost) = l.settle(3);
    assert_eq!(next.carryover, 40);
    assert_eq!(lost, 7);
    assert_eq!(3 + next.carryover + lost, l.nominal + l.carryover);
}

#[test]
fn hybrid_depth_one_matches_flat_voi() {
    for variant in [VoiVariant::Voi, VoiVariant::VoiPlus] {
        for cost in [0.0, 1e-3] {
            let t = GameTree::new(TreeConfig { branching: 5, depth: 1, noise: 0.45 }, 17).unwrap();
            let truth: Vec<f64> = t.children(&t.root()).iter().map(|c| c.latent).collect();
            let p = HybridParams::new(cost, variant);
            let h = hybrid_search(&t, t.root(), BudgetLedger::new(400), &p, 23).unwrap();
            let f = run_voi_policy(&truth, 400, variant, 23, Some(cost)).unwrap();
            assert_eq!(h.trace, f.trace);
            assert_eq!(h.root_stats, f.stats);
            assert_eq!(h.chosen, f.selected);
            assert_eq!(h.samples_used, f.samples_used);
        }
    }
}

#[test]
fn budget_and_root_errors() {
    let t = GameTree::new(small(), 1).unwrap();
    assert_eq!(
        uct_search(&t, t.root(), 2, 2.0, 0).unwrap_err(),
        MctsError::BudgetTooSmall { budget: 2, children: 3 }
    );
    let leaf = t.child(&t.child(&t.child(&t.child(&t.root(), 0), 0), 0), 0);
    assert_eq!(uct_search(&t, leaf, 10, 2.0, 0).unwrap_err(), MctsError::LeafRoot);
    assert_eq!(
        hybrid_search(&t, t.root(), BudgetLedger::new(10), &params(-1.0), 0).unwrap_err(),
        MctsError::InvalidCost(-1.0)
    );
}

#[test]
fn self_play_is_even() {
    let p = Player::Uct { budget: 40, exploration: 2.0 };
    let m = play_match(p, p, &small(), 40, 3).unwrap();
    assert_eq!(m.wins, 20);
    assert!(m.ci.0 < 0.5 && 0.5 < m.ci.1);
}

#[test]
fn minimax_beats_random() {
    let cfg = TreeConfig { branching: 4, depth: 4, noise: 0.25 };
    let m = play_match(Player::Minimax, Player::Random, &cfg, 200, 5).unwrap();
    assert!(m.win_rate > 0.6, "{m:?}");
    let again = play_match(Player::Minimax, Player::Random, &cfg, 200, 5).unwrap();
    assert_eq!(m, again);
}

#[test]
fn calibration_table_shape_and_csv() {
    let t = calibrate_cost(&small(), &[30], &[0.01], &params(0.0), 10, 1).unwrap();
    assert_eq!(t.rows.len(), 1);
    let r = t.rows[0];
    assert!(r.ci_lo <= r.win_rate() && r.win_rate() <= r.ci_hi);
    assert_eq!(t.recommended_cost(), Some(0.01));
    let mut buf = Vec::new();
    t.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("budget,c,variant,wins,games,ci_lo,ci_hi\n"), "{text}");
    assert!(text.contains(",VOI,"));
    assert_eq!(calibrate_cost(&small(), &[], &[0.1], &params(0.0), 1, 1).unwrap_err(), MctsError::EmptyGrid);
}
