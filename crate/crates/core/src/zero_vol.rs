//! The σ = 0 case: blocks at both ends and a constant selling speed between.

use serde::{Deserialize, Serialize};

use crate::continuous::{p_eval, OptimalSchedule};
use crate::error::{Error, Result};
use crate::model::{derive, MarketState, ModelParams, Regime};
use crate::numeric::{bisect_newton, RootOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroVolSolution {
    pub p_star: f64,
    pub zeta_star: f64,
    pub q_star: f64,
    pub value: f64,
}

/// C(p) = exp(α(tβ + 1)p - αφ - tβz) + αp - z - 1.
pub fn c_eval(params: &ModelParams, holdings: f64, z: f64, p: f64) -> f64 {
    c_with_derivative(params, holdings, z, p).0
}

fn c_with_derivative(params: &ModelParams, holdings: f64, z: f64, p: f64) -> (f64, f64) {
    let (a, b, t) = (params.alpha, params.beta, params.horizon);
    let growth = a * (t * b + 1.0);
    let e = (growth * p - a * holdings - t * b * z).exp();
    (e + a * p - z - 1.0, growth * e + a)
}

/// Sign-checked bracket for the root of C.
pub fn c_bracket(params: &ModelParams, holdings: f64, z: f64) -> (f64, f64) {
    let (a, bt) = (params.alpha, params.beta * params.horizon);
    (z / a, (a * holdings + bt * z) / (a * (1.0 + bt)))
}

pub fn solve(params: &ModelParams, state: &MarketState) -> Result<ZeroVolSolution> {
    if !params.is_zero_vol() {
        return Err(Error::Regime(format!("zero-volatility solution needs sigma = 0 (got {})", params.sigma)));
    }
    let d = derive(params, state)?;
    let a = params.alpha;
    if state.holdings <= d.z / a {
        return Err(Error::Regime(format!(
            "holdings {} do not exceed z/alpha = {}; the initial block is optimal",
            state.holdings,
            d.z / a
        )));
    }
    let (lo, hi) = c_bracket(params, state.holdings, d.z);
    let p = bisect_newton(
        |p| c_with_derivative(params, state.holdings, d.z, p),
        lo,
        hi,
        RootOptions::default(),
        "C(p)",
    )?;
    let zeta = params.beta * (p - d.z / a);
    let q = state.holdings - p - params.horizon * zeta;
    let s = state.price;
    let value = state.cash - (-a * (p + q)).exp_m1() * s / a + params.horizon * s * (-a * p).exp() * zeta;
    Ok(ZeroVolSolution { p_star: p, zeta_star: zeta, q_star: q, value })
}

/// The same solution on the continuous solver's grid layout.
pub fn to_schedule(params: &ModelParams, state: &MarketState, sol: &ZeroVolSolution, cells: usize) -> Result<OptimalSchedule> {
    let d = derive(params, state)?;
    let a = params.alpha;
    let cells = cells.max(1);
    let h = params.horizon / cells as f64;
    let xi = sol.p_star - d.z / a;
    Ok(OptimalSchedule {
        regime: Regime::ZeroVol,
        extended: false,
        lambda_star: a * p_eval(a, xi),
        p_star: sol.p_star,
        q_star: sol.q_star,
        horizon: params.horizon,
        grid: (0..cells).map(|j| (j as f64 + 0.5) * h).collect(),
        xi_grid: vec![xi; cells],
        zeta_grid: vec![sol.zeta_star; cells],
        eta_grid: vec![sol.p_star; cells],
        expected_price_grid: vec![state.price * (-a * sol.p_star).exp(); cells],
        zeta_cell_mean: vec![sol.zeta_star; cells],
        xi_integral: params.horizon * xi,
        value: sol.value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::E;

    fn reference() -> (ModelParams, MarketState) {
        (ModelParams::new(1.0, 1.0, 0.0, 0.0, 1.0).unwrap(), MarketState::new(0.0, 3.0, E).unwrap())
    }

    #[test]
    fn c_at_bracket_ends() {
        let (p, _) = reference();
        let (lo, hi) = c_bracket(&p, 3.0, 1.0);
        assert_relative_eq!(c_eval(&p, 3.0, 1.0, lo), (1.0f64 - 3.0).exp() - 1.0, max_relative = 1e-15);
        assert_relative_eq!(c_eval(&p, 3.0, 1.0, hi), (3.0 - 1.0) / 2.0, max_relative = 1e-15);
    }

    #[test]
    fn reference_solution() {
        let (p, s) = reference();
        let sol = solve(&p, &s).unwrap();
        // root of e^{2p-4} + p - 2 by an independent scan-and-bisect
        let c = |x: f64| (2.0 * x - 4.0).exp() + x - 2.0;
        let (mut lo, mut hi) = (1.0f64, 2.0f64);
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if c(m) < 0.0 { lo = m } else { hi = m }
        }
        assert!((sol.p_star - lo).abs() < 1e-12);
        assert!(c_eval(&p, 3.0, 1.0, sol.p_star).abs() < 1e-12);
        assert_relative_eq!(sol.zeta_star, sol.p_star - 1.0, max_relative = 1e-15);
        assert!((sol.p_star + sol.zeta_star + sol.q_star - 3.0).abs() < 1e-14);
        assert!((sol.value - 2.8013295501723077).abs() < 1e-12);
    }

    #[test]
    fn rejects_small_holdings() {
        let p = ModelParams::new(1.0, 1.0, 0.0, 0.0, 1.0).unwrap();
        let s = MarketState::new(0.0, 0.9, E).unwrap();
        assert!(matches!(solve(&p, &s), Err(Error::Regime(_))));
    }

    #[test]
    fn slow_reversion_approaches_pure_blocks() {
        let p = ModelParams::new(1.0, 1e-9, 0.0, 0.0, 1.0).unwrap();
        let sol = solve(&p, &MarketState::new(0.0, 3.0, E).unwrap()).unwrap();
        assert!(sol.zeta_star.abs() < 1e-8);
    }
}
