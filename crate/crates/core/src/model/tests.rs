use super::*;
use crate::bernoulli::{BetaCounts, FlatState};

fn single(stop: f64) -> FiniteMetaMdp {
    let mut b = MdpBuilder::new(0.1);
    let s = b.add_state(stop);
    b.build(s).unwrap()
}

/// s0 --compute--> {s1 (reward 1), s2 (reward 0)} with equal odds.
fn coin(cost: f64) -> FiniteMetaMdp {
    let mut b = MdpBuilder::new(cost);
    let s0 = b.add_state(0.5);
    let hi = b.add_state(1.0);
    let lo = b.add_state(0.0);
    b.add_computation(s0, 0, vec![(hi, 0.5), (lo, 0.5)]);
    b.build(s0).unwrap()
}

#[test]
fn single_state_stops() {
    let mdp = single(0.7);
    let sol = solve_exact(&mdp, Horizon::Acyclic).unwrap();
    assert_eq!(sol.optimal_value[0], 0.7);
    assert_eq!(sol.optimal_action[0], Action::Stop);
}

#[test]
fn ties_go_to_stop() {
    // computing is worth exactly 0.5 - 0 = stop reward.
    let mut b = MdpBuilder::new(0.25);
    let s0 = b.add_state(0.5);
    let hi = b.add_state(1.5);
    let lo = b.add_state(0.0);
    b.add_computation(s0, 0, vec![(hi, 0.5), (lo, 0.5)]);
    let mdp = b.build(s0).unwrap();
    let sol = solve_exact(&mdp, Horizon::Acyclic).unwrap();
    assert_eq!(sol.optimal_action[0], Action::Stop);
    assert!((sol.optimal_value[0] - 0.5).abs() < 1e-15);

    // a fair coin between 1 and 0 is worth nothing over a stop reward of 0.5
    let sol = solve_exact(&coin(0.01), Horizon::Acyclic).unwrap();
    assert_eq!(sol.optimal_action[0], Action::Stop);

    let mut b = MdpBuilder::new(0.01);
    let s0 = b.add_state(0.2);
    let hi = b.add_state(1.0);
    let lo = b.add_state(0.0);
    b.add_computation(s0, 0, vec![(hi, 0.5), (lo, 0.5)]);
    let sol = solve_exact(&b.build(s0).unwrap(), Horizon::Acyclic).unwrap();
    assert_eq!(sol.optimal_action[0], Action::Compute(0));
    assert!((sol.optimal_value[0] - 0.49).abs() < 1e-15);
}

#[test]
fn lowest_computation_wins_ties() {
    let mut b = MdpBuilder::new(0.01);
    let s0 = b.add_state(0.0);
    let t = b.add_state(1.0);
    b.add_computation(s0, 3, vec![(t, 1.0)]);
    b.add_computation(s0, 1, vec![(t, 1.0)]);
    let mdp = b.build(s0).unwrap();
    let sol = solve_exact(&mdp, Horizon::Acyclic).unwrap();
    assert_eq!(sol.optimal_action[0], Action::Compute(1));
}

#[test]
fn rejects_bad_rows_and_cycles() {
    let mut b = MdpBuilder::new(0.1);
    let s0 = b.add_state(0.0);
    let s1 = b.add_state(0.0);
    b.add_computation(s0, 0, vec![(s1, 0.5), (s0, 0.4)]);
    assert!(matches!(b.build(s0), Err(ModelError::NotNormalized { .. })));

    let mut b = MdpBuilder::new(0.1);
    let s0 = b.add_state(0.0);
    let s1 = b.add_state(1.0);
    b.add_computation(s0, 0, vec![(s1, 1.0)]);
    b.add_computation(s1, 0, vec![(s0, 1.0)]);
    let mdp = b.build(s0).unwrap();
    assert!(matches!(solve_exact(&mdp, Horizon::Acyclic), Err(ModelError::Cyclic(_))));
    let sol = solve_exact(&mdp, Horizon::Steps(5)).unwrap();
    assert_eq!(sol.optimal_action[0], Action::Compute(0));
    assert!((sol.optimal_value[0] - 0.9).abs() < 1e-12);
    assert_eq!(solve_exact(&mdp, Horizon::Steps(0)), Err(ModelError::ZeroHorizon));

    let b = MdpBuilder::new(0.0);
    assert!(matches!(b.build(0), Err(ModelError::InvalidCost(_))));
    let mut b = MdpBuilder::new(0.1);
    b.add_state(f64::INFINITY);
    assert!(matches!(b.build(0), Err(ModelError::NonFiniteReward { .. })));
}

#[test]
fn horizon_matches_acyclic_when_long_enough() {
    let s = FlatState::uniform(2).unwrap();
    let flat = FlatMdp::build(&s, 0.02, 6, None).unwrap();
    let a = solve_exact(&flat.mdp, Horizon::Acyclic).unwrap();
    let h = solve_exact(&flat.mdp, Horizon::Steps(7)).unwrap();
    for (x, y) in a.optimal_value.iter().zip(&h.optimal_value) {
        assert!((x - y).abs() < 1e-12);
    }
    assert_eq!(a.optimal_action, h.optimal_action);
}

#[test]
fn solving_twice_is_identical() {
    let s = FlatState::uniform(3).unwrap();
    let flat = FlatMdp::build(&s, 0.01, 5, None).unwrap();
    let a = solve_exact(&flat.mdp, Horizon::Acyclic).unwrap();
    let b = solve_exact(&flat.mdp, Horizon::Acyclic).unwrap();
    assert_eq!(a, b);
}

#[test]
fn value_dominates_stop_reward() {
    let s = FlatState::with_prior(vec![BetaCounts::new(2, 1), BetaCounts::new(0, 1)]).unwrap();
    let flat = FlatMdp::build(&s, 0.005, 8, Some(0.55)).unwrap();
    let sol = solve_exact(&flat.mdp, Horizon::Acyclic).unwrap();
    for st in 0..flat.mdp.state_count() {
        assert!(sol.optimal_value[st] >= flat.mdp.stop_reward(st));
        let best = sol.q_values[st].iter().map(|q| q.1).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(best, sol.optimal_value[st]);
    }
}

#[test]
fn always_stop_evaluates_exactly() {
    let mdp = coin(0.1);
    let ev = evaluate_policy(&mdp, |_| Some(Action::Stop), EvalOptions::new(100, 1)).unwrap();
    assert_eq!(ev.mean_reward, 0.5);
    assert_eq!(ev.mean_computations, 0.0);
    assert_eq!(ev.std_error, 0.0);
}

#[test]
fn optimal_policy_estimate_matches_value() {
    let s = FlatState::uniform(2).unwrap();
    let flat = FlatMdp::build(&s, 0.01, 10, None).unwrap();
    let sol = solve_exact(&flat.mdp, Horizon::Acyclic).unwrap();
    let ev = evaluate_policy(&flat.mdp, |st| Some(sol.optimal_action[st]), EvalOptions::new(100_000, 9)).unwrap();
    let v = sol.optimal_value[flat.mdp.initial()];
    assert!((ev.mean_reward - v).abs() <= 3.0 * ev.std_error, "{} vs {v} se {}", ev.mean_reward, ev.std_error);
}

#[test]
fn evaluation_is_seed_deterministic() {
    let mdp = coin(0.1);
    let pol = |s: usize| Some(if s == 0 { Action::Compute(0) } else { Action::Stop });
    let a = evaluate_policy(&mdp, pol, EvalOptions::new(1000, 5)).unwrap();
    let b = evaluate_policy(&mdp, pol, EvalOptions::new(1000, 5)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn evaluation_errors() {
    let mdp = coin(0.1);
    let r = evaluate_policy(&mdp, |s| if s == 0 { Some(Action::Compute(0)) } else { None }, EvalOptions::new(10, 1));
    assert!(matches!(r, Err(ModelError::PolicyUndefined(1 | 2))), "{r:?}");
    assert_eq!(evaluate_policy(&mdp, |_| Some(Action::Stop), EvalOptions::new(0, 1)), Err(ModelError::NoTrials));

    // a self-loop computed forever hits the cap.
    let mut b = MdpBuilder::new(0.1);
    let s0 = b.add_state(0.0);
    b.add_computation(s0, 0, vec![(s0, 1.0)]);
    let mdp = b.build(s0).unwrap();
    let opts = EvalOptions { trials: 2, seed: 0, step_cap: 1000 };
    assert_eq!(evaluate_policy(&mdp, |_| Some(Action::Compute(0)), opts), Err(ModelError::StepCapExceeded(1000)));
}

#[test]
fn vpi_two_fresh_arms() {
    let s = FlatState::uniform(2).unwrap();
    assert!((vpi_exact(&s) - 0.25).abs() < 1e-15);
    let est = vpi_bound(&s, 200_000, 3).unwrap();
    assert!((est.value - 0.25).abs() < 0.005, "{est:?}");
    assert!((est.value - 0.25).abs() < 4.0 * est.std_error);
}

#[test]
fn vpi_degenerate_cases() {
    let s = FlatState::with_prior(vec![BetaCounts::new(1_000_000, 0), BetaCounts::new(0, 1_000_000)]).unwrap();
    assert!(vpi_exact(&s) < 1e-5);
    assert!(vpi_bound(&s, 10_000, 1).unwrap().value.abs() < 1e-3);
    let one = FlatState::with_prior(vec![BetaCounts::new(3, 5)]).unwrap();
    assert!(vpi_exact(&one).abs() < 1e-15);
    assert_eq!(vpi_bound(&one, 0, 1), Err(ModelError::NoMonteCarloSamples));
}
