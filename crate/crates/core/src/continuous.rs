//! Continuous-time optimum: λ*, the block–gradual–block schedule and the
//! value function.

use serde::{Deserialize, Serialize};

use crate::discrete;
use crate::error::{Error, Result};
use crate::model::{
    classify_derived, derive, within_standing_assumption, DerivedQuantities, MarketState, Mode, ModelParams,
    Regime,
};
use crate::numeric::{adaptive_gauss_legendre, bisect, bisect_newton, GaussLegendre, RootOptions};
use crate::strategy::{ExecutionStrategy, DEFAULT_GRID_CELLS};
use crate::zero_vol;

/// Period count used for the numeric value in the gap regime.
pub const GAP_FALLBACK_PERIODS: usize = 2000;

const RULE_ORDER: usize = 16;
const MAX_RULE_PANELS: usize = 4096;

/// P(x) = e^{-αx}(1 - αx).
pub fn p_eval(alpha: f64, x: f64) -> f64 {
    (-alpha * x).exp() * (1.0 - alpha * x)
}

/// P'(x) = αe^{-αx}(αx - 2).
pub fn p_derivative(alpha: f64, x: f64) -> f64 {
    alpha * (-alpha * x).exp() * (alpha * x - 2.0)
}

/// Inverse of P on its decreasing branch x ≤ 2/α.
pub fn p_inverse(alpha: f64, q: f64) -> Result<f64> {
    let floor = -(-2.0f64).exp();
    if !(q >= floor) || !q.is_finite() {
        return Err(Error::Domain(format!("P^-1 needs q >= -e^-2 (got {q})")));
    }
    Ok(p_inverse_unchecked(alpha, q))
}

fn p_inverse_unchecked(alpha: f64, q: f64) -> f64 {
    let vertex = 2.0 / alpha;
    if q <= -(-2.0f64).exp() {
        return vertex;
    }
    if q == 1.0 {
        return 0.0;
    }
    if q == 0.0 {
        return 1.0 / alpha;
    }
    let f = |x: f64| p_eval(alpha, x) - q;
    // P' vanishes at 2/α, so Newton is avoided within 0.1/α of it
    let near_vertex = vertex - 0.1 / alpha;
    if q < p_eval(alpha, near_vertex) {
        return bisect(f, near_vertex, vertex, 0.0, "P^-1").unwrap_or(vertex);
    }
    let (lo, hi) = if q >= 1.0 { (-q.ln() / alpha, 0.0) } else { (0.0, near_vertex) };
    let fdf = |x: f64| (p_eval(alpha, x) - q, p_derivative(alpha, x));
    bisect_newton(fdf, lo, hi, RootOptions::default(), "P^-1").unwrap_or(0.5 * (lo + hi))
}

/// exp(-e^{-2βr} y): the factor multiplying λ/α inside P⁻¹.
fn shrink(params: &ModelParams, y: f64, r: f64) -> f64 {
    (-(-2.0 * params.beta * r).exp() * y).exp()
}

/// ξ*_r = P⁻¹(exp(-e^{-2βr}y) λ/α).
pub fn xi_star(params: &ModelParams, d: &DerivedQuantities, lambda: f64, r: f64) -> f64 {
    p_inverse_unchecked(params.alpha, shrink(params, d.y, r) * lambda / params.alpha)
}

/// η*_r = ξ*_r - (1 + e^{-2βr}) y/α + z/α.
pub fn eta_star(params: &ModelParams, d: &DerivedQuantities, lambda: f64, r: f64) -> f64 {
    let xi = xi_star(params, d, lambda, r);
    xi - (1.0 + (-2.0 * params.beta * r).exp()) * d.y / params.alpha + d.z / params.alpha
}

/// ζ*_r in the form that differentiates ξ* explicitly.
pub fn zeta_star_a(params: &ModelParams, d: &DerivedQuantities, lambda: f64, r: f64) -> f64 {
    let (a, b) = (params.alpha, params.beta);
    let xi = xi_star(params, d, lambda, r);
    let e2 = (-2.0 * b * r).exp();
    b * xi + 2.0 * b * lambda * e2 * d.y * (a * xi - e2 * d.y).exp() / (a * a * (a * xi - 2.0))
        + 2.0 * b * d.y * e2 / a
}

/// ζ*_r after eliminating λ with P(ξ*_r).
pub fn zeta_star_b(params: &ModelParams, d: &DerivedQuantities, lambda: f64, r: f64) -> f64 {
    let (a, b) = (params.alpha, params.beta);
    let xi = xi_star(params, d, lambda, r);
    b * xi + 2.0 * b * d.y * (-2.0 * b * r).exp() / (a * (2.0 - a * xi))
}

/// H together with its derivative and the ξ integral behind it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HValue {
    pub h: f64,
    pub derivative: f64,
    pub xi_integral: f64,
}

/// H(λ) = α exp(αβ ∫_0^t P⁻¹(exp(-e^{-2βr}y)λ/α) dr - αφ + z - y) - λ on a
/// fixed composite rule, so H and H' share the same P⁻¹ values.
#[derive(Debug, Clone)]
pub struct HFunction {
    alpha: f64,
    beta: f64,
    offset: f64,
    /// (shrink factor, weight) per quadrature node.
    nodes: Vec<(f64, f64)>,
}

impl HFunction {
    pub fn new(params: &ModelParams, state: &MarketState, quad_tol: f64) -> Result<Self> {
        let d = derive(params, state)?;
        let rule = GaussLegendre::new(RULE_ORDER);
        let build = |panels: usize| -> Vec<(f64, f64)> {
            let h = params.horizon / panels as f64;
            (0..panels)
                .flat_map(|j| rule.mapped(j as f64 * h, (j + 1) as f64 * h).collect::<Vec<_>>())
                .map(|(r, w)| (shrink(params, d.y, r), w))
                .collect()
        };
        let integral = |nodes: &[(f64, f64)], lambda: f64| -> f64 {
            nodes.iter().map(|&(a, w)| w * p_inverse_unchecked(params.alpha, a * lambda / params.alpha)).sum()
        };
        let probes = [0.5, 1e-3].map(|f| f * params.alpha * (-d.y).exp());
        let mut panels = 1;
        let mut nodes = build(panels);
        if d.y > 0.0 {
            loop {
                let finer = build(panels * 2);
                let settled = probes.iter().all(|&lambda| {
                    let (coarse, fine) = (integral(&nodes, lambda), integral(&finer, lambda));
                    (coarse - fine).abs() <= quad_tol * fine.abs().max(1e-3 / params.alpha)
                });
                nodes = finer;
                panels *= 2;
                if settled || panels >= MAX_RULE_PANELS {
                    break;
                }
            }
        }
        Ok(Self {
            alpha: params.alpha,
            beta: params.beta,
            offset: -params.alpha * state.holdings + d.z - d.y,
            nodes,
        })
    }

    pub fn nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn eval(&self, lambda: f64) -> Result<HValue> {
        if !(lambda >= 0.0) {
            return Err(Error::Domain(format!("H needs lambda >= 0 (got {lambda})")));
        }
        Ok(self.eval_unchecked(lambda))
    }

    fn eval_unchecked(&self, lambda: f64) -> HValue {
        let a = self.alpha;
        let (xi_integral, slope) = self.nodes.iter().fold((0.0, 0.0), |(int, der), &(shrink, w)| {
            let xi = p_inverse_unchecked(a, shrink * lambda / a);
            (int + w * xi, der + w * (shrink / a) / p_derivative(a, xi))
        });
        let level = a * (a * self.beta * xi_integral + self.offset).exp();
        HValue { h: level - lambda, derivative: level * a * self.beta * slope - 1.0, xi_integral }
    }
}

pub fn h_eval(params: &ModelParams, state: &MarketState, lambda: f64) -> Result<f64> {
    Ok(HFunction::new(params, state, 1e-13)?.eval(lambda)?.h)
}

/// The bracket the root is searched in.
pub fn lambda_bracket(params: &ModelParams, state: &MarketState, mode: Mode) -> Result<(f64, f64)> {
    let d = derive(params, state)?;
    let standard = params.alpha * (-d.y).exp();
    match mode {
        Mode::Standard => Ok((0.0, standard)),
        Mode::Extended => {
            let x0 = (params.alpha * state.holdings - d.z) / (params.alpha * (1.0 + params.beta * params.horizon));
            Ok((0.0, standard.max(standard * p_eval(params.alpha, x0))))
        }
    }
}

fn solve_with(h: &HFunction, lo: f64, mut hi: f64, mode: Mode) -> Result<f64> {
    if mode == Mode::Extended {
        let mut doublings = 0;
        while h.eval_unchecked(hi).h >= 0.0 {
            hi *= 2.0;
            doublings += 1;
            if doublings > 200 || !hi.is_finite() {
                return Err(Error::NoSignChange { lo, hi, context: "H(lambda) (expanded bracket)".into() });
            }
        }
    }
    let fdf = |lambda: f64| {
        let v = h.eval_unchecked(lambda);
        (v.h, v.derivative)
    };
    bisect_newton(fdf, lo, hi, RootOptions::default(), "H(lambda)")
}

/// λ*, the unique root of H. Standard mode searches (0, αe^{-y}); extended
/// mode widens the upper end until H turns negative.
pub fn solve_lambda_star(params: &ModelParams, state: &MarketState, mode: Mode) -> Result<f64> {
    let h = HFunction::new(params, state, 1e-13)?;
    let (lo, hi) = lambda_bracket(params, state, mode)?;
    solve_with(&h, lo, hi, mode)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub cells: usize,
    pub quad_tol: f64,
    pub mode: Mode,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { cells: DEFAULT_GRID_CELLS, quad_tol: 1e-11, mode: Mode::Standard }
    }
}

impl SolveOptions {
    pub fn extended() -> Self {
        Self { mode: Mode::Extended, ..Self::default() }
    }
}

/// Solver output. Grids are sampled at cell midpoints; `zeta_cell_mean`
/// holds exact cell averages of ζ* and is what the assembled strategy uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalSchedule {
    pub regime: Regime,
    pub extended: bool,
    pub lambda_star: f64,
    pub p_star: f64,
    pub q_star: f64,
    pub horizon: f64,
    pub grid: Vec<f64>,
    pub xi_grid: Vec<f64>,
    pub zeta_grid: Vec<f64>,
    pub eta_grid: Vec<f64>,
    pub expected_price_grid: Vec<f64>,
    pub zeta_cell_mean: Vec<f64>,
    pub xi_integral: f64,
    pub value: f64,
}

impl OptimalSchedule {
    pub fn mode(&self) -> Mode {
        if self.extended {
            Mode::Extended
        } else {
            Mode::Standard
        }
    }

    pub fn gradual_total(&self) -> f64 {
        let h = self.horizon / self.zeta_cell_mean.len().max(1) as f64;
        self.zeta_cell_mean.iter().sum::<f64>() * h
    }

    pub fn total_sold(&self) -> f64 {
        self.p_star + self.gradual_total() + self.q_star
    }

    /// Impulse p* at 0, density on the grid, impulse q* at t.
    pub fn strategy(&self) -> Result<ExecutionStrategy> {
        ExecutionStrategy::assemble_optimal(self.p_star, &self.zeta_cell_mean, self.q_star, self.horizon, self.mode())
    }

    /// CSV with columns `r,xi_star,zeta_star,eta_star,expected_price`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,xi_star,zeta_star,eta_star,expected_price\n");
        for j in 0..self.grid.len() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                self.grid[j], self.xi_grid[j], self.zeta_grid[j], self.eta_grid[j], self.expected_price_grid[j]
            ));
        }
        out
    }
}

fn check_admissible(schedule: &OptimalSchedule) -> Result<()> {
    if schedule.extended {
        return Ok(());
    }
    let negative_rate = schedule.zeta_cell_mean.iter().chain(&schedule.zeta_grid).any(|v| *v < 0.0);
    if schedule.p_star < 0.0 || schedule.q_star < 0.0 || negative_rate {
        return Err(Error::Inadmissible(format!(
            "schedule has negative components (p* = {}, q* = {})",
            schedule.p_star, schedule.q_star
        )));
    }
    Ok(())
}

/// Builds the schedule for a known λ*.
pub fn schedule_for_lambda(
    params: &ModelParams,
    state: &MarketState,
    lambda: f64,
    opts: &SolveOptions,
) -> Result<OptimalSchedule> {
    let d = derive(params, state)?;
    let (a, b, t) = (params.alpha, params.beta, params.horizon);
    let cells = opts.cells.max(1);
    let h = t / cells as f64;
    let edge = |j: usize| if j == cells { t } else { j as f64 * h };
    let grid: Vec<f64> = (0..cells).map(|j| (j as f64 + 0.5) * h).collect();
    let xi_grid: Vec<f64> = grid.iter().map(|&r| xi_star(params, &d, lambda, r)).collect();
    let eta_grid: Vec<f64> = grid.iter().map(|&r| eta_star(params, &d, lambda, r)).collect();
    let zeta_grid: Vec<f64> = grid.iter().map(|&r| zeta_star_a(params, &d, lambda, r)).collect();
    let expected_price_grid: Vec<f64> = eta_grid.iter().map(|eta| state.price * (-a * eta).exp()).collect();

    let rule = GaussLegendre::new(RULE_ORDER);
    let cell_xi: Vec<f64> = (0..cells)
        .map(|j| rule.integrate(|r| xi_star(params, &d, lambda, r), edge(j), edge(j + 1)))
        .collect();
    let eta_edges: Vec<f64> = (0..=cells).map(|j| eta_star(params, &d, lambda, edge(j))).collect();
    let zeta_cell_mean: Vec<f64> = (0..cells)
        .map(|j| (b * cell_xi[j] + eta_edges[j + 1] - eta_edges[j]) / (edge(j + 1) - edge(j)))
        .collect();
    let xi_integral: f64 = cell_xi.iter().sum();

    let p_star = eta_edges[0];
    let q_star = state.holdings - b * xi_integral - eta_edges[cells];
    let mut schedule = OptimalSchedule {
        regime: classify_derived(params, &d, state.holdings),
        extended: opts.mode == Mode::Extended,
        lambda_star: lambda,
        p_star,
        q_star,
        horizon: t,
        grid,
        xi_grid,
        zeta_grid,
        eta_grid,
        expected_price_grid,
        zeta_cell_mean,
        xi_integral,
        value: 0.0,
    };
    check_admissible(&schedule)?;
    schedule.value = value_form_rewritten(params, state, lambda, opts.quad_tol)?;
    Ok(schedule)
}

/// λ* and the full schedule. Standard mode requires the large-holdings or
/// zero-volatility regime; extended mode accepts any holdings.
pub fn schedule(params: &ModelParams, state: &MarketState, opts: &SolveOptions) -> Result<OptimalSchedule> {
    state.validate(opts.mode)?;
    let d = derive(params, state)?;
    let regime = classify_derived(params, &d, state.holdings);
    if opts.mode == Mode::Standard && !matches!(regime, Regime::LargeHoldings | Regime::ZeroVol) {
        return Err(Error::Regime(format!(
            "the mixed schedule needs large holdings or zero volatility (regime {regime:?})"
        )));
    }
    let h = HFunction::new(params, state, opts.quad_tol.min(1e-13))?;
    let (lo, hi) = lambda_bracket(params, state, opts.mode)?;
    let lambda = solve_with(&h, lo, hi, opts.mode)?;
    schedule_for_lambda(params, state, lambda, opts)
}

fn integrate(f: impl Fn(f64) -> f64, t: f64, tol: f64) -> Result<f64> {
    let est = adaptive_gauss_legendre(f, 0.0, t, tol);
    if !est.converged || !est.value.is_finite() {
        return Err(Error::Numerical(format!("quadrature did not converge (estimate {})", est.value)));
    }
    Ok(est.value)
}

/// The value as initial cash plus the proceeds of the three pieces:
/// w + (1 - e^{-αp*})s/α + s ∫ e^{-αη*_r} ζ*_r dr + (1 - e^{-αq*}) s e^{-αη*_t}/α.
pub fn value_form_rewritten(params: &ModelParams, state: &MarketState, lambda: f64, tol: f64) -> Result<f64> {
    let d = derive(params, state)?;
    let (a, b, t) = (params.alpha, params.beta, params.horizon);
    let s = state.price;
    let xi_integral = integrate(|r| xi_star(params, &d, lambda, r), t, tol)?;
    let p = eta_star(params, &d, lambda, 0.0);
    let eta_t = eta_star(params, &d, lambda, t);
    let q = state.holdings - b * xi_integral - eta_t;
    let gradual = integrate(
        |r| (-a * eta_star(params, &d, lambda, r)).exp() * zeta_star_b(params, &d, lambda, r),
        t,
        tol,
    )?;
    Ok(state.cash + -(-a * p).exp_m1() * s / a + s * gradual + -(-a * q).exp_m1() * s * (-a * eta_t).exp() / a)
}

/// The value written through ξ* alone:
/// w + (s/α)(1 - exp(-αφ + αβ∫ξ*)) + β ∫ ξ*_r exp(F - αξ*_r + (1 + e^{-2βr})y) dr.
pub fn value_form_direct(params: &ModelParams, state: &MarketState, lambda: f64, tol: f64) -> Result<f64> {
    let d = derive(params, state)?;
    let (a, b, t) = (params.alpha, params.beta, params.horizon);
    let xi_integral = integrate(|r| xi_star(params, &d, lambda, r), t, tol)?;
    let tail = integrate(
        |r| {
            let xi = xi_star(params, &d, lambda, r);
            xi * (params.fundamental_log - a * xi + (1.0 + (-2.0 * b * r).exp()) * d.y).exp()
        },
        t,
        tol,
    )?;
    Ok(state.cash - (a * b * xi_integral - a * state.holdings).exp_m1() * state.price / a + b * tail)
}

/// V_t with the regime that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Valuation {
    pub value: f64,
    pub regime: Regime,
    pub closed_form: bool,
    pub within_standing_assumption: bool,
    /// Set when the value comes from the discrete solver (gap regime).
    pub discrete_periods: Option<usize>,
}

/// Value of the initial block, w + (1 - e^{-αφ})s/α.
pub fn block_value(params: &ModelParams, state: &MarketState) -> f64 {
    state.cash - (-params.alpha * state.holdings).exp_m1() * state.price / params.alpha
}

pub fn value(params: &ModelParams, state: &MarketState) -> Result<Valuation> {
    state.validate(Mode::Standard)?;
    let d = derive(params, state)?;
    let regime = classify_derived(params, &d, state.holdings);
    let standing = within_standing_assumption(&d);
    let closed = |value| Valuation {
        value,
        regime,
        closed_form: true,
        within_standing_assumption: standing,
        discrete_periods: None,
    };
    match regime {
        Regime::SmallHoldings => Ok(closed(block_value(params, state))),
        Regime::ZeroVol => Ok(closed(zero_vol::solve(params, state)?.value)),
        Regime::LargeHoldings => {
            let lambda = solve_lambda_star(params, state, Mode::Standard)?;
            Ok(closed(value_form_rewritten(params, state, lambda, SolveOptions::default().quad_tol)?))
        }
        Regime::Gap => {
            let problem = discrete::DiscreteProblem::new(*params, *state, GAP_FALLBACK_PERIODS)?;
            let solution = discrete::solve_admissible(&problem)?;
            Ok(Valuation {
                value: discrete::discrete_value(&problem, &solution),
                regime,
                closed_form: false,
                within_standing_assumption: standing,
                discrete_periods: Some(problem.periods()),
            })
        }
    }
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
    fn p_examples() {
        assert_eq!(p_eval(1.0, 0.0), 1.0);
        assert_eq!(p_eval(1.0, 1.0), 0.0);
        assert_relative_eq!(p_eval(1.0, 2.0), -(-2.0f64).exp(), max_relative = 1e-15);
        assert_eq!(p_inverse(1.0, 1.0).unwrap(), 0.0);
        assert_eq!(p_inverse(1.0, 0.0).unwrap(), 1.0);
        assert_eq!(p_inverse(1.0, -(-2.0f64).exp()).unwrap(), 2.0);
        assert!(matches!(p_inverse(1.0, -0.2), Err(Error::Domain(_))));
    }

    #[test]
    fn p_inverse_roundtrip_across_branch() {
        for alpha in [0.3, 1.0, 4.0] {
            for i in 0..400 {
                let q = -(-2.0f64).exp() + 1e-9 + i as f64 * 0.02;
                let x = p_inverse(alpha, q).unwrap();
                assert!(x <= 2.0 / alpha);
                assert!((p_eval(alpha, x) - q).abs() <= 1e-12, "alpha {alpha} q {q}");
            }
        }
    }

    #[test]
    fn h_at_zero_collapses() {
        let p = ModelParams::new(1.5, 0.7, 0.3, 0.0, 0.8).unwrap();
        let s = MarketState::new(0.0, 2.0, 2.5).unwrap();
        let d = derive(&p, &s).unwrap();
        let expected = 1.5 * (0.7 * 0.8 - 1.5 * 2.0 + d.z - d.y).exp();
        assert_relative_eq!(h_eval(&p, &s, 0.0).unwrap(), expected, max_relative = 1e-12);
    }

    #[test]
    fn reference_lambda() {
        let (p, s) = reference();
        let lambda = solve_lambda_star(&p, &s, Mode::Standard).unwrap();
        assert!((lambda - 0.24019534456783492).abs() < 1e-10);
        assert!(h_eval(&p, &s, lambda).unwrap().abs() < 1e-10);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let p = ModelParams::new(1.0, 1.0, 0.4, 0.0, 1.0).unwrap();
        let s = MarketState::new(0.0, 3.0, E).unwrap();
        let h = HFunction::new(&p, &s, 1e-13).unwrap();
        for lambda in [0.05, 0.2, 0.5] {
            let step = 1e-6;
            let fd = (h.eval(lambda + step).unwrap().h - h.eval(lambda - step).unwrap().h) / (2.0 * step);
            assert_relative_eq!(h.eval(lambda).unwrap().derivative, fd, max_relative = 1e-6);
        }
    }

    #[test]
    fn zeta_forms_agree_and_eta_starts_at_p() {
        let p = ModelParams::new(1.0, 1.0, 0.3, 0.0, 1.0).unwrap();
        let s = MarketState::new(0.0, 3.0, E).unwrap();
        let sched = schedule(&p, &s, &SolveOptions::default()).unwrap();
        let d = derive(&p, &s).unwrap();
        for &r in &sched.grid {
            let (za, zb) = (zeta_star_a(&p, &d, sched.lambda_star, r), zeta_star_b(&p, &d, sched.lambda_star, r));
            assert!((za - zb).abs() <= 1e-10 * za.abs().max(1.0));
        }
        assert!((eta_star(&p, &d, sched.lambda_star, 0.0) - sched.p_star).abs() < 1e-14);
        assert!((sched.total_sold() - 3.0).abs() < 1e-8);
    }

    #[test]
    fn small_regime_value_example() {
        let p = ModelParams::new(1.0, 1.0, (0.4f64).sqrt(), 0.0, 1.0).unwrap();
        let s = MarketState::from_mispricing(&p, 0.0, 0.5, 1.0).unwrap();
        let mut s10 = s;
        s10.price = 10.0;
        let p10 = ModelParams::new(1.0, 1.0, (0.4f64).sqrt(), 10f64.ln() - 1.0, 1.0).unwrap();
        let v = value(&p10, &s10).unwrap();
        assert_eq!(v.regime, Regime::SmallHoldings);
        assert_relative_eq!(v.value, 10.0 * (1.0 - (-0.5f64).exp()), max_relative = 1e-15);
        let mut empty = s;
        empty.holdings = 0.0;
        empty.cash = 1.25;
        assert_eq!(value(&p, &empty).unwrap().value, 1.25);
    }

    #[test]
    fn standard_mode_rejects_gap() {
        let p = ModelParams::new(1.0, 1.0, (0.4f64).sqrt(), 0.0, 1.0).unwrap();
        let s = MarketState::new(0.0, 1.5, E).unwrap();
        assert!(matches!(schedule(&p, &s, &SolveOptions::default()), Err(Error::Regime(_))));
    }
}
