//! The n-period problem: sell ψ_k at the start of period k, maximize
//! f̃ⁿ(ψ) subject to Σψ = φ, and recover the maximizer from one scalar
//! multiplier λ̂ⁿ.
//!
//! With m = ⌊nt⌋ periods of length 1/n and c = e^{-β/n},
//! f̃ⁿ(x) = Σ_k exp(c^k z - c^{2k} y - α S_k)(1 - e^{-α x_k}) with
//! S_k = Σ_{l<k} c^{k-l} x_l.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::continuous::{self, OptimalSchedule, SolveOptions};
use crate::error::{Error, Result};
use crate::model::{derive, DerivedQuantities, MarketState, Mode, ModelParams};
use crate::numeric::{bisect_newton, RootOptions};

pub const BRUTE_FORCE_POINTS: usize = 200;
pub const BRUTE_FORCE_SWEEPS: usize = 50;
pub const MAX_BRUTE_FORCE_PERIODS: usize = 4;

/// e^u (1 - e^{-v}), kept finite for large purchases (v ≪ 0).
fn sale_term(u: f64, v: f64) -> f64 {
    if v >= -1.0 {
        -u.exp() * (-v).exp_m1()
    } else {
        u.exp() - (u - v).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteProblem {
    params: ModelParams,
    state: MarketState,
    derived: DerivedQuantities,
    n: usize,
    periods: usize,
    c: f64,
    one_minus_c: f64,
}

impl DiscreteProblem {
    /// `n` periods per unit time; the horizon t holds ⌊nt⌋ of them.
    pub fn new(params: ModelParams, state: MarketState, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("period count n must be >= 1".into()));
        }
        let periods = (n as f64 * params.horizon * (1.0 + 1e-12)).floor() as usize;
        if periods == 0 {
            return Err(Error::InvalidParameter(format!(
                "n = {n} leaves no whole period inside the horizon {}",
                params.horizon
            )));
        }
        Self::with_periods(params, state, n, periods)
    }

    /// Same period length 1/n but only the first `periods` periods tradable.
    pub fn with_periods(params: ModelParams, state: MarketState, n: usize, periods: usize) -> Result<Self> {
        if n == 0 || periods == 0 {
            return Err(Error::InvalidParameter("n and the period count must be >= 1".into()));
        }
        let derived = derive(&params, &state)?;
        let step = params.beta / n as f64;
        Ok(Self {
            params,
            state,
            derived,
            n,
            periods,
            c: (-step).exp(),
            one_minus_c: -(-step).exp_m1(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn periods(&self) -> usize {
        self.periods
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn state(&self) -> &MarketState {
        &self.state
    }

    pub fn derived(&self) -> &DerivedQuantities {
        &self.derived
    }

    /// c^k as exp(-βk/n).
    pub fn power(&self, k: usize) -> f64 {
        (-self.params.beta * k as f64 / self.n as f64).exp()
    }

    fn drift(&self, k: usize) -> f64 {
        let ck = self.power(k);
        ck * self.derived.z - ck * ck * self.derived.y
    }

    /// f̃ⁿ(x) over the first `x.len()` periods.
    pub fn objective(&self, x: &[f64]) -> f64 {
        let a = self.params.alpha;
        let mut impact = 0.0;
        let mut total = 0.0;
        for (k, &xk) in x.iter().enumerate() {
            total += sale_term(self.drift(k) - a * impact, a * xk);
            impact = self.c * (impact + xk);
        }
        total
    }

    /// ∂f̃ⁿ/∂x_k for every k.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let a = self.params.alpha;
        let mut impact = Vec::with_capacity(x.len());
        let mut s = 0.0;
        for &xk in x {
            impact.push(s);
            s = self.c * (s + xk);
        }
        let mut grad = vec![0.0; x.len()];
        let mut tail = 0.0;
        for k in (0..x.len()).rev() {
            let log_level = self.drift(k) - a * impact[k];
            grad[k] = a * (log_level - a * x[k]).exp() - a * tail;
            tail = self.c * (sale_term(log_level, a * x[k]) + tail);
        }
        grad
    }

    /// Fⁿ_k(x) = (e^{-αx} - c e^{-αcx - c^{2k}(c²-1)y})/(1 - c).
    pub fn fnk_eval(&self, k: usize, x: f64) -> f64 {
        -(-self.params.alpha * x).exp() * self.fnk_exponent(k, x, self.c.ln()).exp_m1() / self.one_minus_c
    }

    fn fnk_exponent(&self, k: usize, x: f64, log_c: f64) -> f64 {
        let c2k = self.power(2 * k);
        log_c + self.params.alpha * self.one_minus_c * x + c2k * (1.0 - self.c * self.c) * self.derived.y
    }

    pub fn fnk_derivative(&self, k: usize, x: f64) -> f64 {
        let a = self.params.alpha;
        a * (-a * x).exp() * self.fnk_exponent(k, x, 2.0 * self.c.ln()).exp_m1() / self.one_minus_c
    }

    /// Right end of Eⁿ_k, where Fⁿ_k vanishes.
    pub fn fnk_right_endpoint(&self, k: usize) -> f64 {
        let c2k = self.power(2 * k);
        -(c2k * (self.c + 1.0) * self.derived.y + self.c.ln() / self.one_minus_c) / self.params.alpha
    }

    /// Inverse of Fⁿ_k on Eⁿ_k.
    pub fn fnk_inverse(&self, k: usize, q: f64) -> Result<f64> {
        if !(q >= 0.0) || !q.is_finite() {
            return Err(Error::Domain(format!("F_k^-1 needs q >= 0 (got {q})")));
        }
        Ok(self.fnk_inverse_unchecked(k, q))
    }

    fn fnk_inverse_unchecked(&self, k: usize, q: f64) -> f64 {
        let right = self.fnk_right_endpoint(k);
        if self.fnk_eval(k, right) >= q {
            return right;
        }
        let mut width = 1.0 / self.params.alpha;
        while self.fnk_eval(k, right - width) < q {
            width *= 2.0;
        }
        let fdf = |x: f64| (self.fnk_eval(k, x) - q, self.fnk_derivative(k, x));
        bisect_newton(fdf, right - width, right, RootOptions::default(), "F_k^-1").unwrap_or(right - 0.5 * width)
    }

    /// G_k(λ) = Fⁿ_k⁻¹(e^{c^{2k}y} λ/α) and dG_k/dλ for k < m - 1.
    fn g_values(&self, lambda: f64) -> Vec<(f64, f64)> {
        let a = self.params.alpha;
        (0..self.periods.saturating_sub(1))
            .map(|k| {
                let scale = (self.power(2 * k) * self.derived.y).exp() / a;
                let g = self.fnk_inverse_unchecked(k, scale * lambda);
                let dg = scale / self.fnk_derivative(k, g);
                (g, if dg.is_finite() { dg } else { 0.0 })
            })
            .collect()
    }

    fn hn_with_derivative(&self, lambda: f64) -> (f64, f64) {
        let a = self.params.alpha;
        let gs = self.g_values(lambda);
        let (sum, dsum) = gs.iter().fold((0.0, 0.0), |(s, ds), (g, dg)| (s + g, ds + dg));
        let last = self.power(2 * (self.periods - 1)) * self.derived.y;
        let level = a * (a * self.one_minus_c * sum - a * self.state.holdings + self.derived.z - last).exp();
        (level - lambda, level * a * self.one_minus_c * dsum - 1.0)
    }

    /// H_n(λ) = α exp(α(1-c) Σ_{k≤m-2} G_k(λ) - αφ + z - c^{2(m-1)}y) - λ.
    pub fn hn_eval(&self, lambda: f64) -> Result<f64> {
        if !(lambda >= 0.0) {
            return Err(Error::Domain(format!("H_n needs lambda >= 0 (got {lambda})")));
        }
        Ok(self.hn_with_derivative(lambda).0)
    }

    fn root_in(&self, lo: f64, hi: f64) -> Result<f64> {
        bisect_newton(|l| self.hn_with_derivative(l), lo, hi, RootOptions::default(), "H_n(lambda)")
    }

    /// Root of H_n with the upper end doubled until H_n < 0.
    fn root_expanding(&self) -> Result<f64> {
        let mut hi = self.params.alpha * (-self.derived.y).exp();
        let mut doublings = 0;
        while self.hn_with_derivative(hi).0 >= 0.0 {
            hi *= 2.0;
            doublings += 1;
            if doublings > 200 || !hi.is_finite() {
                return Err(Error::NoSignChange { lo: 0.0, hi, context: "H_n(lambda) (expanded bracket)".into() });
            }
        }
        self.root_in(0.0, hi)
    }

    /// ψ_k = 𝒯_k(λ).
    pub fn recover_psi(&self, lambda: f64) -> Vec<f64> {
        let m = self.periods;
        let phi = self.state.holdings;
        if m == 1 {
            return vec![phi];
        }
        let za = self.derived.z / self.params.alpha;
        let g: Vec<f64> = self.g_values(lambda).into_iter().map(|(g, _)| g).collect();
        let mut psi = Vec::with_capacity(m);
        psi.push(g[0] + za);
        psi.extend((1..m - 1).map(|k| g[k] - self.c * g[k - 1]));
        let head: f64 = g[..m - 2].iter().sum();
        psi.push(phi - self.one_minus_c * head - g[m - 2] - za);
        psi
    }

    fn solution(&self, lambda: f64, psi: Vec<f64>, active_periods: usize) -> DiscreteSolution {
        let grad = self.gradient(&psi);
        let conservation = (psi.iter().sum::<f64>() - self.state.holdings).abs();
        let residual = grad
            .iter()
            .enumerate()
            .map(|(k, g)| if k < active_periods { (g - lambda).abs() } else { (g - lambda).max(0.0) })
            .fold(conservation, f64::max);
        DiscreteSolution {
            n: self.n,
            periods: self.periods,
            active_periods,
            lambda_hat: lambda,
            objective: self.objective(&psi) / self.params.alpha,
            stationarity_residual: residual,
            psi,
        }
    }
}

/// Solver output. `objective` is fⁿ(n) = f̃ⁿ(ψ̂)/α; `active_periods` is the
/// number of leading periods the multiplier system was solved on (the rest
/// hold zero).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteSolution {
    pub n: usize,
    pub periods: usize,
    pub active_periods: usize,
    pub lambda_hat: f64,
    pub psi: Vec<f64>,
    pub objective: f64,
    pub stationarity_residual: f64,
}

impl DiscreteSolution {
    pub fn is_nonnegative(&self) -> bool {
        self.psi.iter().all(|v| *v >= 0.0)
    }
}

/// λ̂ⁿ on the bracket (0, 2λ*), λ* from the continuous problem.
pub fn solve_lambda_hat(problem: &DiscreteProblem) -> Result<f64> {
    let lambda_star = continuous::solve_lambda_star(&problem.params, &problem.state, Mode::Extended)?;
    let hi = 2.0 * lambda_star;
    if problem.hn_with_derivative(hi).0 >= 0.0 {
        return Err(Error::NoSignChange {
            lo: 0.0,
            hi,
            context: format!("H_n has no sign change on (0, 2 lambda*); n = {} is too small", problem.n),
        });
    }
    problem.root_in(0.0, hi)
}

/// Solve the full m-period multiplier system. Components may be negative.
pub fn solve(problem: &DiscreteProblem) -> Result<DiscreteSolution> {
    let lambda = if problem.periods == 1 {
        problem.hn_with_derivative(0.0).0
    } else {
        solve_lambda_hat(problem)?
    };
    let psi = problem.recover_psi(lambda);
    Ok(problem.solution(lambda, psi, problem.periods))
}

fn solve_truncated(problem: &DiscreteProblem, active: usize) -> Result<(f64, Vec<f64>)> {
    let sub = DiscreteProblem::with_periods(problem.params, problem.state, problem.n, active)?;
    let lambda = if active == 1 { sub.hn_with_derivative(0.0).0 } else { sub.root_expanding()? };
    Ok((lambda, sub.recover_psi(lambda)))
}

/// Nonnegative solution: the multiplier system on the longest prefix of
/// periods whose solution has no negative component, zero afterwards.
pub fn solve_admissible(problem: &DiscreteProblem) -> Result<DiscreteSolution> {
    let m = problem.periods;
    let feasible = |active: usize| -> Result<Option<(f64, Vec<f64>)>> {
        let (lambda, psi) = solve_truncated(problem, active)?;
        Ok(psi.iter().all(|v| *v >= 0.0).then_some((lambda, psi)))
    };
    let (active, (lambda, mut psi)) = match feasible(m)? {
        Some(found) => (m, found),
        None => {
            let (mut lo, mut hi) = (1, m);
            let mut best = feasible(1)?.ok_or_else(|| Error::Numerical("single block infeasible".into()))?;
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                match feasible(mid)? {
                    Some(found) => {
                        lo = mid;
                        best = found;
                    }
                    None => hi = mid,
                }
            }
            (lo, best)
        }
    };
    psi.resize(m, 0.0);
    Ok(problem.solution(lambda, psi, active))
}

/// w + e^{F+y} fⁿ(n).
pub fn discrete_value(problem: &DiscreteProblem, solution: &DiscreteSolution) -> f64 {
    problem.state.cash + (problem.params.fundamental_log + problem.derived.y).exp() * solution.objective
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BruteForceResult {
    pub psi: Vec<f64>,
    /// f̃ⁿ(ψ)/α, on the same scale as [`DiscreteSolution::objective`].
    pub objective: f64,
    pub grid_step: f64,
}

/// Larger value wins; ties go to the lexicographically smaller vector.
fn better(a: &(f64, Vec<f64>), b: &(f64, Vec<f64>)) -> bool {
    a.0 > b.0 || (a.0 == b.0 && a.1.iter().zip(&b.1).find(|(x, y)| x != y).is_some_and(|(x, y)| x < y))
}

fn pick(a: (f64, Vec<f64>), b: (f64, Vec<f64>)) -> (f64, Vec<f64>) {
    if better(&b, &a) {
        b
    } else {
        a
    }
}

fn simplex_points(periods: usize, points: usize, index: usize) -> Vec<Vec<usize>> {
    // all (i_1..i_{m-2}) tails with i_0 = index and total index <= points - 1
    let mut out = vec![vec![index]];
    for _ in 1..periods.saturating_sub(1) {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                let used: usize = prefix.iter().sum();
                (0..points - used).map(move |i| {
                    let mut v = prefix.clone();
                    v.push(i);
                    v
                })
            })
            .collect();
    }
    out
}

/// Exhaustive grid search over {x ≥ 0, Σx = φ} followed by pairwise
/// coordinate moves with a shrinking step.
pub fn brute_force(problem: &DiscreteProblem, points: usize) -> Result<BruteForceResult> {
    let m = problem.periods;
    if m > MAX_BRUTE_FORCE_PERIODS {
        return Err(Error::InvalidParameter(format!("brute force supports at most {MAX_BRUTE_FORCE_PERIODS} periods (got {m})")));
    }
    if points < 2 {
        return Err(Error::InvalidParameter("brute force needs at least 2 grid points".into()));
    }
    let phi = problem.state.holdings;
    let step = phi / (points - 1) as f64;
    let score = |x: &[f64]| problem.objective(x);
    if m == 1 {
        return Ok(BruteForceResult { psi: vec![phi], objective: score(&[phi]) / problem.params.alpha, grid_step: step });
    }
    let to_vector = |idx: &[usize]| -> Vec<f64> {
        let mut x: Vec<f64> = idx.iter().map(|&i| i as f64 * step).collect();
        let used: f64 = x.iter().sum();
        x.push((phi - used).max(0.0));
        x
    };
    let seed = (0.0, Vec::new());
    let best = (0..points)
        .into_par_iter()
        .map(|i0| {
            simplex_points(m, points, i0)
                .iter()
                .map(|idx| {
                    let x = to_vector(idx);
                    (score(&x), x)
                })
                .fold((f64::NEG_INFINITY, Vec::new()), pick)
        })
        .reduce(|| (f64::NEG_INFINITY, Vec::new()), pick);
    let (mut value, mut x) = if best.1.is_empty() { seed } else { best };

    let mut delta = step;
    for _ in 0..BRUTE_FORCE_SWEEPS {
        delta *= 0.5;
        let mut improved = true;
        let mut guard = 0;
        while improved && guard < 1000 {
            improved = false;
            guard += 1;
            for i in 0..m {
                for j in 0..m {
                    if i == j || x[j] < delta {
                        continue;
                    }
                    let mut trial = x.clone();
                    trial[i] += delta;
                    trial[j] -= delta;
                    let v = score(&trial);
                    if v > value {
                        value = v;
                        x = trial;
                        improved = true;
                    }
                }
            }
        }
    }
    Ok(BruteForceResult { objective: value / problem.params.alpha, psi: x, grid_step: step })
}

/// A priori bound on how far the brute-force objective can sit below the
/// true maximum: 2 ‖∇f̃ⁿ‖_∞ (m-1) h / α at the returned point.
pub fn resolution_bound(problem: &DiscreteProblem, result: &BruteForceResult) -> f64 {
    let g = problem.gradient(&result.psi).iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    2.0 * g * (problem.periods.saturating_sub(1)) as f64 * result.grid_step / problem.params.alpha
}

/// |ψ_0 - p*| + max_k |nψ_k - ζ*_{k/n}| + |ψ_{m-1} - q*| over interior periods.
pub fn convergence_triplet(solution: &DiscreteSolution, schedule: &OptimalSchedule, zeta: impl Fn(f64) -> f64) -> f64 {
    let n = solution.n as f64;
    let m = solution.psi.len();
    let interior = (1..m.saturating_sub(1))
        .map(|k| (n * solution.psi[k] - zeta(k as f64 / n)).abs())
        .fold(0.0, f64::max);
    (solution.psi[0] - schedule.p_star).abs() + interior + (solution.psi[m - 1] - schedule.q_star).abs()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub lambda_hat: f64,
    pub psi_0: f64,
    pub psi_last: f64,
    pub objective: f64,
    pub err_vs_continuous: f64,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub continuous_value: f64,
    pub rows: Vec<ConvergenceRow>,
    /// Smallest n whose multiplier system solved with no negative component.
    pub smallest_successful_n: Option<usize>,
}

impl ConvergenceReport {
    /// CSV with columns `n,lambda_hat,psi_0,psi_last,objective,err_vs_continuous`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,lambda_hat,psi_0,psi_last,objective,err_vs_continuous\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.n, r.lambda_hat, r.psi_0, r.psi_last, r.objective, r.err_vs_continuous
            ));
        }
        out
    }
}

/// Solve for each n and compare w + e^{F+y}fⁿ(n) with the continuous value.
/// Failures are recorded per row and do not stop the study.
pub fn convergence_study(params: &ModelParams, state: &MarketState, n_list: &[usize]) -> Result<ConvergenceReport> {
    let continuous_value = continuous::value(params, state)?.value;
    let rows: Vec<ConvergenceRow> = n_list
        .par_iter()
        .map(|&n| {
            let failed = |reason: String| ConvergenceRow {
                n,
                lambda_hat: f64::NAN,
                psi_0: f64::NAN,
                psi_last: f64::NAN,
                objective: f64::NAN,
                err_vs_continuous: f64::NAN,
                failure: Some(reason),
            };
            let problem = match DiscreteProblem::new(*params, *state, n) {
                Ok(p) => p,
                Err(e) => return failed(e.to_string()),
            };
            match solve(&problem) {
                Ok(sol) => {
                    let value = discrete_value(&problem, &sol);
                    ConvergenceRow {
                        n,
                        lambda_hat: sol.lambda_hat,
                        psi_0: sol.psi[0],
                        psi_last: *sol.psi.last().unwrap_or(&f64::NAN),
                        objective: sol.objective,
                        err_vs_continuous: (value - continuous_value).abs(),
                        failure: (!sol.is_nonnegative()).then(|| "negative component in recovered schedule".to_string()),
                    }
                }
                Err(e) => failed(e.to_string()),
            }
        })
        .collect();
    let smallest_successful_n = rows.iter().filter(|r| r.failure.is_none()).map(|r| r.n).min();
    Ok(ConvergenceReport { continuous_value, rows, smallest_successful_n })
}

/// Continuous schedule for comparison (zero-vol instances use the closed form).
pub fn reference_schedule(params: &ModelParams, state: &MarketState) -> Result<OptimalSchedule> {
    if params.is_zero_vol() {
        let sol = crate::zero_vol::solve(params, state)?;
        return crate::zero_vol::to_schedule(params, state, &sol, crate::strategy::DEFAULT_GRID_CELLS);
    }
    continuous::schedule(params, state, &SolveOptions::extended())
}
