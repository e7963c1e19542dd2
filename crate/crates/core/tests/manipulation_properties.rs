use std::f64::consts::E;

use ouexec_core::continuous::{schedule, value_form_rewritten, SolveOptions};
use ouexec_core::manipulation::{
    extended_schedule, l_eval, l_root, round_trip_profit_bound, scan, scan_grid, verified_profit,
};
use ouexec_core::{derive, expected_proceeds, ExecutionStrategy, Impulse, MarketState, Mode, ModelParams};
use proptest::prelude::*;

/// σ with y = σ²/(4β) = 0.01 at β = 1.
const SIGMA: f64 = 0.2;

fn unit_params() -> ModelParams {
    ModelParams::new(1.0, 1.0, SIGMA, 0.0, 1.0).unwrap()
}

#[test]
fn empty_position_at_high_mispricing_buys_back() {
    let p = unit_params();
    let s = MarketState::from_mispricing(&p, 0.0, 0.0, 6.0).unwrap();
    let sched = extended_schedule(&p, &s).unwrap();
    assert_eq!(sched.mode(), Mode::Extended);
    assert!(sched.p_star > 0.0);
    assert!(sched.q_star < 0.0, "{}", sched.q_star);
    assert!(sched.total_sold().abs() < 1e-8);
    assert!(sched.strategy().unwrap().contains_purchase());
}

#[test]
fn extended_agrees_with_standard_for_large_holdings() {
    let p = unit_params();
    let s = MarketState::new(0.0, 3.0, E).unwrap();
    let ext = extended_schedule(&p, &s).unwrap();
    let std = schedule(&p, &s, &SolveOptions::default()).unwrap();
    assert!((ext.lambda_star - std.lambda_star).abs() < 1e-12);
    assert!((ext.p_star - std.p_star).abs() < 1e-10);
    assert!((ext.q_star - std.q_star).abs() < 1e-10);
    assert!(ext.zeta_grid.iter().zip(&std.zeta_grid).all(|(a, b)| (a - b).abs() < 1e-10));
    assert!((ext.value - std.value).abs() < 1e-10);
}

#[test]
fn l_function_examples() {
    assert!((l_eval(0.0, 1.0, 1.0) - ((-1.0f64).exp() - 1.0)).abs() < 1e-15);
    assert!((l_eval(100.0, 1.0, 1.0) - 1.0).abs() < 1e-10);
    let root = l_root(1.0, 1.0, 10.0, 0.01).unwrap();
    // dense scan oracle
    let dense = (0..100_000).map(|j| j as f64 * 1e-4).find(|&z| l_eval(z, 1.0, 1.0) > 0.0).unwrap();
    assert!((root - dense).abs() < 1e-4);
    assert!((root - 3.31).abs() < 0.05);
}

#[test]
fn weak_bound_negative_below_root_while_certified_profit_is_positive() {
    let p = unit_params();
    for z in [0.1, 0.5, 1.0, 3.0] {
        let (profit, bound) = verified_profit(&p, 0.0, z).unwrap();
        assert!(bound.weak_bound < 0.0);
        assert!((profit - bound.bound).abs() <= 1e-8 * bound.bound.abs().max(1.0), "{profit} vs {bound:?}");
        // independent oracle: sell ε now and buy it back at the horizon
        let s = MarketState::from_mispricing(&p, 0.0, 0.0, z).unwrap();
        let eps = 1e-3;
        let tiny = ExecutionStrategy::new(
            1.0,
            vec![Impulse { time: 0.0, size: eps }, Impulse { time: 1.0, size: -eps }],
            vec![],
            Mode::Extended,
        )
        .unwrap();
        let small_profit = expected_proceeds(&p, &s, &tiny).unwrap();
        assert!(small_profit > 0.0);
        assert!(profit >= small_profit);
    }
    let (high, high_bound) = verified_profit(&p, 0.0, 10.0).unwrap();
    assert!(high_bound.weak_bound > 0.0 && high_bound.bound > 0.0 && high > 0.0);
}

#[test]
fn scan_certifies_profit_below_ten() {
    let p = unit_params();
    let wide = scan(&p, 0.0, &scan_grid(0.0, 10.0, 60).unwrap()).unwrap();
    let first = wide.first_profitable_z.expect("profitable z below 10");
    assert!(first < 10.0);
    assert!(wide.tail_monotone);
    let weak_first = wide.z_values.iter().zip(&wide.weak_bounds).find(|(_, w)| **w > 0.0).map(|(z, _)| *z).unwrap();
    assert!(weak_first > 3.26 && weak_first < 10.0);
    assert!(wide.to_csv().starts_with("z,L,bound,verified_profit\n"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bound_dominates_weak_bound(z in 0.05f64..12.0, beta in 0.3f64..2.0, t in 0.3f64..=1.0) {
        let p = ModelParams::new(1.0, beta, 0.2 * beta.sqrt(), 0.0, t).unwrap();
        let s = MarketState::from_mispricing(&p, 0.0, 0.0, z).unwrap();
        let b = round_trip_profit_bound(&p, &s).unwrap();
        prop_assert!(b.bound >= b.weak_bound - 1e-12, "{b:?}");
    }

    #[test]
    fn evaluator_not_below_closed_form(phi in -2.0f64..4.0, z in 0.1f64..5.0, alpha in 0.5f64..2.0) {
        let p = ModelParams::new(alpha, 1.0, SIGMA, 0.0, 1.0).unwrap();
        let s = MarketState::from_mispricing(&p, 0.0, phi, z).unwrap();
        prop_assume!(derive(&p, &s).unwrap().z >= 2.0 * 0.01);
        let sched = extended_schedule(&p, &s).unwrap();
        prop_assert!((sched.total_sold() - phi).abs() < 1e-8);
        let closed = value_form_rewritten(&p, &s, sched.lambda_star, 1e-11).unwrap();
        let v = expected_proceeds(&p, &s, &sched.strategy().unwrap()).unwrap();
        prop_assert!(v >= closed - 1e-8, "{v} < {closed}");
    }
}
