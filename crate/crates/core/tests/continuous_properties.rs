use std::f64::consts::E;

use ouexec_core::continuous::{
    self, eta_star, h_eval, lambda_bracket, p_eval, p_inverse, schedule, solve_lambda_star, value_form_direct,
    value_form_rewritten, zeta_star_a, zeta_star_b, SolveOptions,
};
use ouexec_core::strategy::ExecutionStrategy;
use ouexec_core::{derive, expected_proceeds, zero_vol, MarketState, Mode, ModelParams, Regime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Principal branch of Lambert W by Halley iteration (oracle only).
fn lambert_w0(x: f64) -> f64 {
    let mut w = if x < 1.0 { (1.0 + E * x).max(0.0).sqrt() - 1.0 } else { x.ln() - x.ln().ln().max(0.0) };
    for _ in 0..100 {
        let ew = w.exp();
        let f = w * ew - x;
        let next = w - f / (ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0));
        if (next - w).abs() < 1e-16 * w.abs().max(1.0) {
            return next;
        }
        w = next;
    }
    w
}

fn large_instance(rng: &mut ChaCha8Rng) -> (ModelParams, MarketState) {
    let alpha = rng.gen_range(0.3..3.0);
    let beta = rng.gen_range(0.2..3.0);
    let sigma = rng.gen_range(0.05..0.8);
    let t = rng.gen_range(0.3..=1.0);
    let y = sigma * sigma / (4.0 * beta);
    let z = rng.gen_range(2.0 * y + 0.1..4.0);
    let phi = f64::max(z, 1.0 + beta) / alpha * rng.gen_range(1.05..2.5);
    let p = ModelParams::new(alpha, beta, sigma, rng.gen_range(-1.0..1.0), t).unwrap();
    let s = MarketState::from_mispricing(&p, rng.gen_range(0.0..2.0), phi, z).unwrap();
    (p, s)
}

fn reference() -> (ModelParams, MarketState) {
    (ModelParams::new(1.0, 1.0, 0.0, 0.0, 1.0).unwrap(), MarketState::new(0.0, 3.0, E).unwrap())
}

#[test]
fn p_inverse_matches_lambert_w() {
    for alpha in [0.5, 1.0, 2.5] {
        for i in 0..200 {
            let q = -(-2.0f64).exp() * 0.999 + i as f64 * 0.05;
            let oracle = (1.0 - lambert_w0(E * q)) / alpha;
            let x = p_inverse(alpha, q).unwrap();
            assert!((x - oracle).abs() < 1e-9 * oracle.abs().max(1.0), "alpha {alpha} q {q}: {x} vs {oracle}");
        }
    }
}

#[test]
fn h_matches_c_at_zero_volatility() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let alpha = rng.gen_range(0.3..3.0);
        let beta = rng.gen_range(0.2..3.0);
        let t = rng.gen_range(0.2..=1.0);
        let z = rng.gen_range(0.1..3.0);
        let phi = z / alpha + rng.gen_range(0.1..3.0);
        let params = ModelParams::new(alpha, beta, 0.0, 0.0, t).unwrap();
        let state = MarketState::from_mispricing(&params, 0.0, phi, z).unwrap();
        // keep the argument of P inside its decreasing branch
        let p = z / alpha + rng.gen_range(-0.5..1.9) / alpha;
        let lambda = alpha * p_eval(alpha, p - z / alpha);
        if lambda < 0.0 {
            continue;
        }
        let lhs = h_eval(&params, &state, lambda).unwrap();
        let rhs = alpha * (z - alpha * p).exp() * zero_vol::c_eval(&params, phi, z, p);
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0), "{lhs} vs {rhs}");
    }
}

#[test]
fn bracket_signs_and_lambda_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let (p, s) = large_instance(&mut rng);
        let d = derive(&p, &s).unwrap();
        let (lo, hi) = lambda_bracket(&p, &s, Mode::Standard).unwrap();
        assert!(h_eval(&p, &s, lo).unwrap() > 0.0);
        assert!(h_eval(&p, &s, hi).unwrap() < 0.0);
        let lambda = solve_lambda_star(&p, &s, Mode::Standard).unwrap();
        assert!(lambda > lo && lambda < hi);
        assert!(h_eval(&p, &s, lambda).unwrap().abs() < 1e-10);
        let cap = p.alpha * (p.beta * p.horizon - p.alpha * s.holdings + d.z - d.y).exp();
        assert!(lambda <= cap * (1.0 + 1e-12));
    }
}

#[test]
fn lambda_decreases_with_holdings() {
    let p = ModelParams::new(1.0, 1.0, 0.3, 0.0, 1.0).unwrap();
    let lambdas: Vec<f64> = (0..10)
        .map(|i| {
            let s = MarketState::new(0.0, 2.5 + 0.5 * i as f64, E).unwrap();
            solve_lambda_star(&p, &s, Mode::Standard).unwrap()
        })
        .collect();
    assert!(lambdas.windows(2).all(|w| w[0] > w[1]), "{lambdas:?}");
}

#[test]
fn reference_schedule_matches_corollary() {
    let (p, s) = reference();
    let sched = schedule(&p, &s, &SolveOptions::default()).unwrap();
    let sol = zero_vol::solve(&p, &s).unwrap();
    assert!((sched.p_star - 1.5736972489931373).abs() < 1e-10);
    assert!((sched.q_star - 0.8526055020137253).abs() < 1e-10);
    assert!((sched.p_star - sol.p_star).abs() < 1e-10);
    assert!((sched.q_star - sol.q_star).abs() < 1e-10);
    assert!(sched.zeta_grid.iter().all(|z| (z - sol.zeta_star).abs() < 1e-10));
    assert!((sched.value - sol.value).abs() < 1e-10);
    let d = derive(&p, &s).unwrap();
    assert!((sched.lambda_star - p.alpha * p_eval(p.alpha, sol.p_star - d.z / p.alpha)).abs() < 1e-12);
}

#[test]
fn schedule_invariants_on_random_large_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..20 {
        let (p, s) = large_instance(&mut rng);
        let d = derive(&p, &s).unwrap();
        let sched = schedule(&p, &s, &SolveOptions::default()).unwrap();
        assert_eq!(sched.regime, Regime::LargeHoldings);
        assert!((sched.total_sold() - s.holdings).abs() < 1e-8);
        assert!(sched.p_star > 0.0 && sched.q_star > 0.0);
        assert!(sched.zeta_grid.iter().all(|z| *z > 0.0));
        assert!(sched.zeta_grid.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        let xi0 = continuous::xi_star(&p, &d, sched.lambda_star, 0.0);
        assert!(sched.xi_grid.iter().all(|x| 0.0 <= *x && *x <= xi0));
        assert!(xi0 <= 1.0 / p.alpha);
        assert!(sched.xi_grid.windows(2).all(|w| w[1] <= w[0]));
        assert!((eta_star(&p, &d, sched.lambda_star, 0.0) - sched.p_star).abs() < 1e-13);
        for &r in &sched.grid {
            let (a, b) = (zeta_star_a(&p, &d, sched.lambda_star, r), zeta_star_b(&p, &d, sched.lambda_star, r));
            assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
        }
        let v10 = value_form_rewritten(&p, &s, sched.lambda_star, 1e-11).unwrap();
        let v7 = value_form_direct(&p, &s, sched.lambda_star, 1e-11).unwrap();
        assert!((v10 - v7).abs() <= 1e-9 * v10.abs());
        assert_eq!(sched.value, v10);
    }
}

#[test]
fn evaluator_reproduces_value() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    for _ in 0..5 {
        let (p, s) = large_instance(&mut rng);
        let sched = schedule(&p, &s, &SolveOptions::default()).unwrap();
        let v = expected_proceeds(&p, &s, &sched.strategy().unwrap()).unwrap();
        assert!(v <= sched.value + 1e-10);
        assert!((v - sched.value).abs() < 1e-12 * sched.value.abs(), "{v} vs {}", sched.value);
    }
}

#[test]
fn perturbations_do_not_improve() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let p = ModelParams::new(1.0, 1.0, 0.3, 0.0, 1.0).unwrap();
    let s = MarketState::new(0.0, 3.0, E).unwrap();
    let sched = schedule(&p, &s, &SolveOptions { cells: 100, ..SolveOptions::default() }).unwrap();
    let base = sched.strategy().unwrap();
    let base_value = expected_proceeds(&p, &s, &base).unwrap();
    let h = 1.0 / 100.0;
    for _ in 0..100 {
        let scale = rng.gen_range(1e-3..0.2);
        let mut density = sched.zeta_cell_mean.clone();
        let mut blocks = [sched.p_star, sched.q_star];
        // move mass between two randomly chosen pieces (blocks or cells)
        let pieces = density.len() + 2;
        let (from, to) = (rng.gen_range(0..pieces), rng.gen_range(0..pieces));
        let available = if from < 2 { blocks[from] } else { density[from - 2] * h };
        let amount = scale * available;
        if from < 2 { blocks[from] -= amount } else { density[from - 2] -= amount / h }
        if to < 2 { blocks[to] += amount } else { density[to - 2] += amount / h }
        let strat = ExecutionStrategy::assemble_optimal(blocks[0], &density, blocks[1], 1.0, Mode::Standard).unwrap();
        let v = expected_proceeds(&p, &s, &strat).unwrap();
        assert!(v <= base_value + 1e-6, "perturbation improved by {}", v - base_value);
    }
}

#[test]
fn small_volatility_converges_to_zero_vol() {
    let sol = zero_vol::solve(&reference().0, &reference().1).unwrap();
    let errors: Vec<f64> = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&sigma| {
            let p = ModelParams::new(1.0, 1.0, sigma, 0.0, 1.0).unwrap();
            let sched = schedule(&p, &reference().1, &SolveOptions::default()).unwrap();
            let zeta_err = sched.zeta_grid.iter().map(|z| (z - sol.zeta_star).abs()).fold(0.0, f64::max);
            (sched.p_star - sol.p_star).abs().max((sched.q_star - sol.q_star).abs()).max(zeta_err)
        })
        .collect();
    assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
    assert!(errors[2] < 1e-4);
}

#[test]
fn value_dispatch_by_regime() {
    let (p, s) = reference();
    let v = continuous::value(&p, &s).unwrap();
    assert_eq!(v.regime, Regime::ZeroVol);
    assert!(v.closed_form);
    assert!((v.value - 2.8013295501723077).abs() < 1e-12);

    let gap_params = ModelParams::new(1.0, 1.0, (0.4f64).sqrt(), 0.0, 1.0).unwrap();
    let gap_state = MarketState::new(0.0, 1.5, E).unwrap();
    let gap = continuous::value(&gap_params, &gap_state).unwrap();
    assert_eq!(gap.regime, Regime::Gap);
    assert!(!gap.closed_form);
    assert_eq!(gap.discrete_periods, Some(2000));
    // the numeric optimum beats the pure initial block
    assert!(gap.value >= continuous::block_value(&gap_params, &gap_state));
}
