//! Round trips (φ = 0) with purchases allowed, and the search for ones with
//! positive expected profit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::continuous::{self, xi_star, OptimalSchedule, SolveOptions};
use crate::error::{Error, Result};
use crate::model::{derive, MarketState, Mode, ModelParams};
use crate::numeric::{adaptive_gauss_legendre, bisect};
use crate::proceeds::expected_proceeds;

pub const DEFAULT_SCAN_POINTS: usize = 200;

/// L(z) = 1 - (1 + βt + z) exp(-βtz/(1 + βt)) + βt e^{-z-1}.
pub fn l_eval(z: f64, beta: f64, horizon: f64) -> f64 {
    let bt = beta * horizon;
    1.0 - (1.0 + bt + z) * (-bt * z / (1.0 + bt)).exp() + bt * (-z - 1.0).exp()
}

/// First sign change of L on [0, z_max], located on a grid of `step` and
/// then bisected.
pub fn l_root(beta: f64, horizon: f64, z_max: f64, step: f64) -> Result<f64> {
    let l = |z: f64| l_eval(z, beta, horizon);
    let cells = (z_max / step).ceil() as usize;
    (0..cells)
        .map(|j| (j as f64 * step, ((j + 1) as f64 * step).min(z_max)))
        .find(|&(a, b)| l(a) <= 0.0 && l(b) > 0.0)
        .ok_or(Error::NoSignChange { lo: 0.0, hi: z_max, context: "L(z)".into() })
        .and_then(|(a, b)| bisect(l, a, b, 0.0, "L(z)"))
}

/// The mixed schedule without the sign restrictions.
pub fn extended_schedule(params: &ModelParams, state: &MarketState) -> Result<OptimalSchedule> {
    continuous::schedule(params, state, &SolveOptions::extended())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfitBound {
    pub bound: f64,
    /// (s/α) L(z), always below `bound`.
    pub weak_bound: f64,
}

/// (s/α){1 - (1 + βt)e^{y-z}λ*/α + βe^{y-z} ∫_0^t exp(e^{-2βr}y - αξ*_r) dr}.
pub fn round_trip_profit_bound(params: &ModelParams, state: &MarketState) -> Result<ProfitBound> {
    if state.holdings != 0.0 {
        return Err(Error::InvalidParameter(format!("a round trip starts from phi = 0 (got {})", state.holdings)));
    }
    let d = derive(params, state)?;
    let (a, b, t) = (params.alpha, params.beta, params.horizon);
    let lambda = continuous::solve_lambda_star(params, state, Mode::Extended)?;
    let integral = adaptive_gauss_legendre(
        |r| ((-2.0 * b * r).exp() * d.y - a * xi_star(params, &d, lambda, r)).exp(),
        0.0,
        t,
        1e-12,
    );
    if !integral.converged {
        return Err(Error::Numerical("profit bound quadrature did not converge".into()));
    }
    let shift = (d.y - d.z).exp();
    let s = state.price;
    Ok(ProfitBound {
        bound: s / a * (1.0 - (1.0 + b * t) * shift * lambda / a + b * shift * integral.value),
        weak_bound: s / a * l_eval(d.z, b, t),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManipulationReport {
    pub z_values: Vec<f64>,
    pub l_values: Vec<f64>,
    pub profit_bounds: Vec<f64>,
    pub weak_bounds: Vec<f64>,
    /// Evaluator profit of the concrete extended round trip.
    pub verified_profits: Vec<f64>,
    /// Smallest scanned z where both the bound and the verified profit are positive.
    pub first_profitable_z: Option<f64>,
    /// Whether every scanned z above `first_profitable_z` is profitable too.
    pub tail_monotone: bool,
}

impl ManipulationReport {
    /// CSV with columns `z,L,bound,verified_profit`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("z,L,bound,verified_profit\n");
        for j in 0..self.z_values.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.z_values[j], self.l_values[j], self.profit_bounds[j], self.verified_profits[j]
            ));
        }
        out
    }
}

/// `count` log-spaced points ending at `z_max`. A nonpositive `z_min` is kept
/// as the first point and the rest start at z_max·10⁻³.
pub fn scan_grid(z_min: f64, z_max: f64, count: usize) -> Result<Vec<f64>> {
    if !(z_max > z_min) || !(z_max > 0.0) || count < 2 {
        return Err(Error::InvalidParameter(format!("bad scan range [{z_min}, {z_max}] with {count} points")));
    }
    let (head, lo, rest) = if z_min <= 0.0 { (Some(z_min), z_max * 1e-3, count - 1) } else { (None, z_min, count) };
    let (ll, lh) = (lo.ln(), z_max.ln());
    let logspaced = (0..rest).map(|j| {
        if j + 1 == rest {
            z_max
        } else {
            (ll + (lh - ll) * j as f64 / (rest - 1).max(1) as f64).exp()
        }
    });
    Ok(head.into_iter().chain(logspaced).collect())
}

/// Profit of the extended round trip at z, by the proceeds evaluator.
pub fn verified_profit(params: &ModelParams, cash: f64, z: f64) -> Result<(f64, ProfitBound)> {
    let state = MarketState::from_mispricing(params, cash, 0.0, z)?;
    let schedule = extended_schedule(params, &state)?;
    let strategy = schedule.strategy()?;
    let profit = expected_proceeds(params, &state, &strategy)? - cash;
    Ok((profit, round_trip_profit_bound(params, &state)?))
}

pub fn scan(params: &ModelParams, cash: f64, z_values: &[f64]) -> Result<ManipulationReport> {
    let rows: Vec<(f64, ProfitBound)> =
        z_values.par_iter().map(|&z| verified_profit(params, cash, z)).collect::<Result<_>>()?;
    let profitable: Vec<bool> = rows.iter().map(|(p, b)| *p > 0.0 && b.bound > 0.0).collect();
    let first = profitable.iter().position(|&ok| ok);
    Ok(ManipulationReport {
        z_values: z_values.to_vec(),
        l_values: z_values.iter().map(|&z| l_eval(z, params.beta, params.horizon)).collect(),
        profit_bounds: rows.iter().map(|(_, b)| b.bound).collect(),
        weak_bounds: rows.iter().map(|(_, b)| b.weak_bound).collect(),
        verified_profits: rows.iter().map(|(p, _)| *p).collect(),
        first_profitable_z: first.map(|j| z_values[j]),
        tail_monotone: first.is_none_or(|j| profitable[j..].iter().all(|&ok| ok)),
    })
}
