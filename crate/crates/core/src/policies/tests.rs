use proptest::prelude::*;

use super::*;
use crate::bernoulli::{BetaCounts, FlatState};
use crate::model::{solve_exact, FlatMdp, Horizon};
use crate::voi::ArmStats;

fn state(arms: &[(u64, u64)]) -> FlatState {
    FlatState::with_prior(arms.iter().map(|&(s, f)| BetaCounts::new(s, f)).collect()).unwrap()
}

/// A known arm of value 0.5, encoded as huge balanced pseudo-counts.
const FIXED_HALF: (u64, u64) = (1_000_000_000, 1_000_000_000);

#[test]
fn myopic_q_two_outcome_enumeration() {
    let s = state(&[FIXED_HALF, (0, 0)]);
    assert!((myopic_q(&s, MetaAction::Sample(1), 0.0) - 7.0 / 12.0).abs() < 1e-9);
    assert!((myopic_q(&s, MetaAction::Stop, 0.0) - 0.5).abs() < 1e-15);
    // samples iff c < 1/12
    assert_eq!(myopic_policy(&s, 0.08), MetaAction::Sample(1));
    assert_eq!(myopic_policy(&s, 0.09), MetaAction::Stop);
}

#[test]
fn myopic_stops_when_gain_below_cost() {
    let s = state(&[(0, 0), (0, 0), (1, 1), (3, 3)]);
    assert_eq!(myopic_policy(&s, 0.2), MetaAction::Stop);
}

#[test]
fn myopic_at_zero_cost_samples_small_states() {
    // enumerate all two-arm states with up to 4 samples per arm
    for s1 in 0..4 {
        for f1 in 0..4 {
            for s2 in 0..4 {
                for f2 in 0..4 {
                    let st = state(&[(s1, f1), (s2, f2)]);
                    let gain = (0..2)
                        .map(|i| myopic_q(&st, MetaAction::Sample(i), 0.0) - st.best_mean())
                        .fold(f64::NEG_INFINITY, f64::max);
                    let act = myopic_policy(&st, 0.0);
                    // stop only when one sample cannot change the decision
                    assert_eq!(act == MetaAction::Stop, gain <= 1e-12, "{st:?}");
                }
            }
        }
    }
    assert_ne!(myopic_policy(&state(&[(1, 1), (2, 2)]), 0.0), MetaAction::Stop);
}

#[test]
fn myopic_identical_arms_take_lowest_index() {
    assert_eq!(myopic_policy(&state(&[(0, 0), (0, 0)]), 0.01), MetaAction::Sample(0));
}

#[test]
fn n_max_bound() {
    assert_eq!(n_max(0.5, 0.01), 22);
    assert_eq!(n_max(1.0, 0.01), 0);
    assert_eq!(n_max(0.0, 1e-4), 0);
    assert_eq!(n_max(0.5, 0.1), 0);
    assert_eq!(n_max(0.5, 1.0 / 12.0), 0);
}

#[test]
fn one_armed_examples() {
    let t = solve_one_armed(0.5, 0.01).unwrap();
    assert_eq!(t.n_max(), 22);
    let t = solve_one_armed(1.0, 0.3).unwrap();
    assert_eq!(t.n_max(), 0);
    assert_eq!(t.action(0, 0), OneArmedAction::Stop);
    assert_eq!(t.value(0, 0), 1.0);
    let t = solve_one_armed(0.5, 0.1).unwrap();
    assert_eq!(t.action(0, 0), OneArmedAction::Stop);
    assert!(matches!(solve_one_armed(0.5, 0.0), Err(PolicyError::InvalidCost(_))));
    assert!(matches!(solve_one_armed(1.5, 0.1), Err(PolicyError::InvalidLambda(_))));
}

#[test]
fn one_armed_matches_brute_force_solver() {
    for &(lambda, cost) in &[(0.5, 0.01), (0.3, 0.004), (0.85, 0.02), (0.62, 0.0071)] {
        let t = solve_one_armed(lambda, cost).unwrap();
        let start = FlatState::uniform(1).unwrap();
        let depth = t.n_max() as u64 + 8;
        let flat = FlatMdp::build(&start, cost, depth, Some(lambda)).unwrap();
        let sol = solve_exact(&flat.mdp, Horizon::Acyclic).unwrap();
        for n in 0..=t.n_max() as u64 {
            for s in 0..=n {
                let id = flat.state_id(&[BetaCounts::new(s, n - s)]).unwrap();
                assert!((sol.optimal_value[id] - t.value(s, n - s)).abs() < 1e-12, "({s},{}) at {lambda}", n - s);
                let sample = sol.optimal_action[id] != crate::model::Action::Stop;
                assert_eq!(sample, t.action(s, n - s) == OneArmedAction::Sample);
            }
        }
        // the deeper truncation never samples beyond n_max
        for (id, st) in flat.states.iter().enumerate() {
            if st.arm(0).n() >= t.n_max() as u64 {
                assert_eq!(sol.optimal_action[id], crate::model::Action::Stop);
            }
        }
    }
}

#[test]
fn one_armed_table_invariants() {
    for &(lambda, cost) in &[(0.5, 0.002), (0.1, 0.001), (0.77, 0.005)] {
        let t = solve_one_armed(lambda, cost).unwrap();
        let top = t.n_max() as u64;
        for n in 0..=top {
            for s in 0..=n {
                let f = n - s;
                assert!(t.value(s, f) >= t.stop_value(s, f));
                if n == top {
                    assert_eq!(t.action(s, f), OneArmedAction::Stop);
                }
                if s < n {
                    // more successes never lower the value
                    assert!(t.value(s + 1, f) >= t.value(s, f) - 1e-12);
                }
            }
        }
    }
}

#[test]
fn blinkered_grid_endpoints_and_monotonicity() {
    let idx = BlinkeredIndex::build(0.01, 2).unwrap();
    assert_eq!(idx.tables()[0].lambda(), 0.0);
    assert_eq!(idx.tables()[1].lambda(), 1.0);
    assert_eq!(idx.tables()[1].value(0, 0), 1.0);
    assert!(matches!(BlinkeredIndex::build(0.01, 1), Err(PolicyError::GridTooSmall(1))));

    let idx = BlinkeredIndex::build(0.005, 33).unwrap();
    let v: Vec<f64> = idx.tables().iter().map(|t| t.value(0, 0)).collect();
    assert!(v.windows(2).all(|w| w[1] >= w[0] - 1e-12), "{v:?}");
}

#[test]
fn blinkered_q_symmetric_state_hits_grid_point() {
    let c = 0.003;
    let idx = BlinkeredIndex::build(c, DEFAULT_GRID_POINTS).unwrap();
    let s = state(&[(0, 0), (0, 0)]);
    let oracle = solve_one_armed(0.5, c).unwrap().sample_q(0, 0);
    assert!((idx.q(&s, 0) - oracle).abs() < 1e-15);
    assert!((idx.q(&s, 1) - oracle).abs() < 1e-15);
}

#[test]
fn blinkered_q_no_gain_when_arm_is_settled() {
    let c = 0.01;
    let idx = BlinkeredIndex::build(c, DEFAULT_GRID_POINTS).unwrap();
    let s = state(&[(1_000_000, 0), (0, 1_000_000)]);
    let q = idx.q(&s, 0);
    assert!(q <= s.best_mean());
    assert!(q >= s.best_mean() - c - 1e-6);
    assert_eq!(idx.decide(&s), MetaAction::Stop);
}

#[test]
fn blinkered_stops_past_every_boundary() {
    let idx = BlinkeredIndex::build(0.05, DEFAULT_GRID_POINTS).unwrap();
    // n_max <= 2 at c = 0.05
    let s = state(&[(2, 1), (1, 2), (3, 0)]);
    assert_eq!(idx.decide(&s), MetaAction::Stop);
}

#[test]
fn grid_refinement_error_shrinks() {
    let c = 0.004;
    let exact = ExactBlinkered::new(c).unwrap();
    let states = [
        state(&[(0, 0), (1, 0)]),
        state(&[(2, 3), (4, 1), (0, 2)]),
        state(&[(5, 5), (2, 4)]),
        state(&[(1, 2), (0, 1)]),
    ];
    let mut errors = Vec::new();
    for d in [9, 17, 33, 65, 129] {
        let idx = BlinkeredIndex::build(c, d).unwrap();
        let mut worst: f64 = 0.0;
        for s in &states {
            for i in 0..s.k() {
                let e = idx.q(s, i) - exact.q(s, i);
                // linear interpolation of a convex value overestimates
                assert!(e >= -1e-12);
                worst = worst.max(e);
            }
        }
        errors.push(worst);
    }
    assert!(errors.windows(2).all(|w| w[1] <= w[0] + 1e-15), "{errors:?}");
    assert!(errors[4] < 2e-3, "{errors:?}");
}

#[test]
fn index_round_trips_through_csv() {
    let idx = BlinkeredIndex::build(0.02, 5).unwrap();
    let mut buf = Vec::new();
    idx.write_csv(&mut buf).unwrap();
    let back = BlinkeredIndex::read_csv(buf.as_slice()).unwrap();
    assert_eq!(idx, back);

    let t = solve_one_armed(0.4, 0.01).unwrap();
    let mut buf = Vec::new();
    t.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with(TABLE_FORMAT_HEADER));
    assert_eq!(OneArmedTable::read_csv(buf.as_slice()).unwrap(), t);

    let broken = text.replace("sample", "maybe");
    assert!(matches!(OneArmedTable::read_csv(broken.as_bytes()), Err(PolicyError::Format { .. })));
    assert!(matches!(OneArmedTable::read_csv(&b"# other v9\n"[..]), Err(PolicyError::Format { line: 1, .. })));
}

#[test]
fn ucb1_examples() {
    let st = |n, mean| ArmStats { n, mean };
    assert_eq!(ucb1_choose(&[st(1, 0.3), st(1, 0.7)], 2, DEFAULT_EXPLORATION), 1);
    assert_eq!(ucb1_choose(&[st(3, 0.9), st(0, 0.0), st(0, 0.0)], 3, DEFAULT_EXPLORATION), 1);
    assert_eq!(ucb1_choose(&[st(2, 0.5), st(2, 0.5)], 4, DEFAULT_EXPLORATION), 0);
    // bonus favours the less sampled arm
    assert_eq!(ucb1_choose(&[st(100, 0.6), st(2, 0.5)], 102, DEFAULT_EXPLORATION), 1);
}

#[test]
fn gated_ucb1_follows_its_stop_rule() {
    let idx = BlinkeredIndex::build(0.01, DEFAULT_GRID_POINTS).unwrap();
    let ucb_big_b = GatedUcb1::new(&idx);
    let ucb_small_b = GatedUcb1::new(Myopic { cost: 0.01 });
    let settled = state(&[(1_000_000, 0), (0, 1_000_000)]);
    assert_eq!(idx.decide(&settled), MetaAction::Stop);
    assert_eq!(ucb_big_b.decide(&settled), MetaAction::Stop);
    let fresh = state(&[(0, 0), (0, 0), (0, 0)]);
    assert_ne!(myopic_policy(&fresh, 0.01), MetaAction::Stop);
    assert_eq!(ucb_small_b.decide(&fresh), MetaAction::Sample(0));
}

fn arb_state() -> impl Strategy<Value = FlatState> {
    proptest::collection::vec((0u64..12, 0u64..12), 1..5)
        .prop_map(|arms| state(&arms))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn myopic_below_blinkered(s in arb_state(), ci in 0usize..4) {
        let c = [0.002, 0.005, 0.01, 0.03][ci];
        let exact = ExactBlinkered::new(c).unwrap();
        for i in 0..s.k() {
            let qm = myopic_q(&s, MetaAction::Sample(i), c);
            prop_assert!(qm <= exact.q(&s, i) + 1e-9);
        }
        // if myopic samples so does blinkered, and UCB1-B continues whenever UCB1-b does
        if myopic_policy(&s, c) != MetaAction::Stop {
            prop_assert_ne!(exact.decide(&s), MetaAction::Stop);
        }
        let small = GatedUcb1::new(Myopic { cost: c });
        let big = GatedUcb1::new(&exact);
        if small.decide(&s) != MetaAction::Stop {
            prop_assert_ne!(big.decide(&s), MetaAction::Stop);
        }
    }

    #[test]
    fn blinkered_deterministic(s in arb_state()) {
        let idx = BlinkeredIndex::build(0.02, 17).unwrap();
        prop_assert_eq!(idx.decide(&s), idx.decide(&s.clone()));
    }
}
