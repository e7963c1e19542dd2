//! Expected terminal cash of a deterministic strategy.
//!
//! Along a deterministic strategy the expected price is
//! `E[S_r] = exp(F + y) * exp(e^{-βr} z - e^{-2βr} y - D_r)`, where `D_r` is the
//! log-price displacement left by past sales, decayed at rate β. Selling at
//! rate ζ contributes `ζ E[S_r] dr`; a block of p shares at r contributes
//! `E[S_r-] (1 - e^{-αp}) / α` and raises `D` by `αp`.
//!
//! `D` is carried in closed form across each constant-rate piece, so only the
//! outer time integral needs quadrature (Gauss–Legendre per piece).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{derive, DerivedQuantities, MarketState, ModelParams};
use crate::numeric::GaussLegendre;
use crate::strategy::{DeltaFamily, ExecutionStrategy, Impulse, RateSegment};

/// Relative slack allowed when checking that a strategy does not oversell.
const OVERSELL_TOL: f64 = 1e-9;
const PIECE_REL_TOL: f64 = 1e-13;
const MAX_PIECE_PANELS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProceedsBreakdown {
    pub initial_block_value: f64,
    /// Gradual sales plus any block trades strictly inside (0, t).
    pub gradual_value: f64,
    pub terminal_block_value: f64,
    pub total: f64,
}

/// `(1 - e^{-αp}) / α`, with the α → 0 limit `p`.
pub fn block_factor(alpha: f64, size: f64) -> f64 {
    if alpha == 0.0 {
        size
    } else {
        -(-alpha * size).exp_m1() / alpha
    }
}

/// Displacement after `dt` at constant rate, starting from `d0`.
fn advance_displacement(params: &ModelParams, d0: f64, rate: f64, dt: f64) -> f64 {
    let decay = (-params.beta * dt).exp();
    d0 * decay - params.alpha * rate * (-params.beta * dt).exp_m1() / params.beta
}

struct Walker<'a> {
    params: &'a ModelParams,
    derived: DerivedQuantities,
    rule: GaussLegendre,
    scale: f64,
}

impl<'a> Walker<'a> {
    fn new(params: &'a ModelParams, derived: DerivedQuantities) -> Self {
        Self {
            params,
            derived,
            rule: GaussLegendre::new(10),
            scale: (params.fundamental_log + derived.y).exp(),
        }
    }

    fn log_price_drift(&self, r: f64) -> f64 {
        let decay = (-self.params.beta * r).exp();
        decay * self.derived.z - decay * decay * self.derived.y
    }

    fn expected_price(&self, r: f64, displacement: f64) -> f64 {
        self.scale * (self.log_price_drift(r) - displacement).exp()
    }

    fn piece_integral(&self, a: f64, b: f64, d_a: f64, rate: f64) -> f64 {
        let integrand = |r: f64| {
            let d = advance_displacement(self.params, d_a, rate, r - a);
            rate * self.expected_price(r, d)
        };
        let mut panels = 1;
        let mut previous = self.rule.composite(integrand, a, b, panels);
        while panels < MAX_PIECE_PANELS {
            panels *= 2;
            let current = self.rule.composite(integrand, a, b, panels);
            if (current - previous).abs() <= PIECE_REL_TOL * current.abs().max(1e-300) {
                return current;
            }
            previous = current;
        }
        previous
    }
}

/// Evaluate impulses plus disjoint sorted rate segments on [0, horizon].
fn walk(
    params: &ModelParams,
    derived: DerivedQuantities,
    horizon: f64,
    impulses: &[Impulse],
    segments: &[RateSegment],
) -> ProceedsBreakdown {
    let walker = Walker::new(params, derived);
    let eps = 1e-12 * horizon;
    let mut out = ProceedsBreakdown {
        initial_block_value: 0.0,
        gradual_value: 0.0,
        terminal_block_value: 0.0,
        total: 0.0,
    };
    let mut displacement = 0.0;
    let mut now = 0.0;
    let mut next_impulse = 0;

    let apply_impulses_up_to = |time: f64, displacement: &mut f64, out: &mut ProceedsBreakdown, next: &mut usize| {
        while *next < impulses.len() && impulses[*next].time <= time + eps {
            let imp = impulses[*next];
            let value = walker.expected_price(imp.time, *displacement) * block_factor(params.alpha, imp.size);
            if imp.time <= eps {
                out.initial_block_value += value;
            } else if imp.time >= horizon - eps {
                out.terminal_block_value += value;
            } else {
                out.gradual_value += value;
            }
            *displacement += params.alpha * imp.size;
            *next += 1;
        }
    };

    let run = |from: f64, to: f64, rate: f64, displacement: &mut f64, out: &mut ProceedsBreakdown, next: &mut usize| {
        let mut a = from;
        loop {
            apply_impulses_up_to(a, displacement, out, next);
            let stop = if *next < impulses.len() && impulses[*next].time < to - eps {
                impulses[*next].time
            } else {
                to
            };
            if stop > a {
                if rate != 0.0 {
                    out.gradual_value += walker.piece_integral(a, stop, *displacement, rate);
                }
                *displacement = advance_displacement(params, *displacement, rate, stop - a);
            }
            a = stop;
            if stop >= to {
                break;
            }
        }
    };

    for seg in segments {
        if seg.start > now {
            run(now, seg.start, 0.0, &mut displacement, &mut out, &mut next_impulse);
        }
        run(seg.start.max(now), seg.end, seg.rate, &mut displacement, &mut out, &mut next_impulse);
        now = seg.end;
    }
    if now < horizon {
        run(now, horizon, 0.0, &mut displacement, &mut out, &mut next_impulse);
    }
    apply_impulses_up_to(horizon, &mut displacement, &mut out, &mut next_impulse);

    out.total = out.initial_block_value + out.gradual_value + out.terminal_block_value;
    out
}

fn check_horizon(params: &ModelParams, horizon: f64) -> Result<()> {
    if (horizon - params.horizon).abs() > 1e-12 * params.horizon {
        return Err(Error::InvalidParameter(format!(
            "strategy horizon {horizon} differs from model horizon {}",
            params.horizon
        )));
    }
    Ok(())
}

fn check_oversell(sold: f64, holdings: f64) -> Result<()> {
    if sold > holdings + OVERSELL_TOL * holdings.abs().max(1.0) {
        return Err(Error::Inadmissible(format!("strategy sells {sold} > holdings {holdings}")));
    }
    Ok(())
}

/// Proceeds split into initial, gradual and terminal parts (cash excluded).
pub fn proceeds_breakdown(
    params: &ModelParams,
    state: &MarketState,
    strategy: &ExecutionStrategy,
) -> Result<ProceedsBreakdown> {
    params.validate_common()?;
    check_horizon(params, strategy.horizon())?;
    state.validate(strategy.mode())?;
    check_oversell(strategy.total_sold(), state.holdings)?;
    let derived = derive(params, state)?;
    Ok(walk(params, derived, strategy.horizon(), strategy.impulses(), &strategy.segments()))
}

/// Expected terminal cash `w + E[proceeds]`.
pub fn expected_proceeds(params: &ModelParams, state: &MarketState, strategy: &ExecutionStrategy) -> Result<f64> {
    Ok(state.cash + proceeds_breakdown(params, state, strategy)?.total)
}

/// Expected terminal cash for the δ-smoothed version of a strategy.
pub fn expected_proceeds_smoothed(params: &ModelParams, state: &MarketState, family: &DeltaFamily) -> Result<f64> {
    params.validate_common()?;
    check_horizon(params, family.base().horizon())?;
    check_oversell(family.total_sold(), state.holdings)?;
    let derived = derive(params, state)?;
    let out = walk(params, derived, family.base().horizon(), &[], &family.segments());
    Ok(state.cash + out.total)
}

/// Log-price displacement `α ∫_0^r e^{-β(r-v)} dη_v` left by sales up to and
/// including time r.
pub fn impact_decay_profile(params: &ModelParams, strategy: &ExecutionStrategy, r: f64) -> f64 {
    let r = r.clamp(0.0, strategy.horizon());
    let eps = 1e-12 * strategy.horizon();
    let mut cuts: Vec<f64> = strategy
        .segments()
        .iter()
        .map(|s| s.start)
        .chain(strategy.impulses().iter().map(|i| i.time))
        .filter(|&c| c <= r + eps)
        .chain([0.0, r])
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() <= eps);

    let mut displacement = 0.0;
    let mut now = 0.0;
    for &cut in &cuts {
        displacement = advance_displacement(params, displacement, strategy.density_at(now), (cut - now).max(0.0));
        displacement += params.alpha
            * strategy
                .impulses()
                .iter()
                .filter(|i| (i.time - cut).abs() <= eps)
                .map(|i| i.size)
                .sum::<f64>();
        now = cut;
    }
    displacement
}

/// `E[S_r]` along the strategy, right after any block at r.
pub fn expected_price(
    params: &ModelParams,
    state: &MarketState,
    strategy: &ExecutionStrategy,
    r: f64,
) -> Result<f64> {
    let d = derive(params, state)?;
    let decay = (-params.beta * r).exp();
    let drift = decay * d.z - decay * decay * d.y;
    Ok((params.fundamental_log + d.y + drift - impact_decay_profile(params, strategy, r)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Mode;
    use approx::assert_relative_eq;
    use std::f64::consts::E;

    fn setup(alpha: f64, beta: f64, sigma: f64, z: f64, phi: f64) -> (ModelParams, MarketState) {
        let p = ModelParams::new(alpha, beta, sigma, 0.0, 1.0).unwrap();
        let s = MarketState::new(0.0, phi, z.exp()).unwrap();
        (p, s)
    }

    #[test]
    fn no_sales_returns_cash() {
        let (p, mut s) = setup(1.0, 1.0, 0.2, 1.0, 1.0);
        s.cash = 3.5;
        assert_eq!(expected_proceeds(&p, &s, &ExecutionStrategy::empty(1.0)).unwrap(), 3.5);
    }

    #[test]
    fn initial_block_value() {
        let (p, s) = setup(1.0, 1.0, 0.2, 1.0, 0.5);
        let v = expected_proceeds(&p, &s, &ExecutionStrategy::initial_block(0.5, 1.0).unwrap()).unwrap();
        assert_relative_eq!(v, (1.0 - (-0.5f64).exp()) * E, max_relative = 1e-14);
    }

    #[test]
    fn constant_rate_with_no_reversion_effect_has_closed_form() {
        // z = 0, σ = 0: E[S_r] = e^{-D_r} with D_r = αζ(1 - e^{-βr})/β.
        let (p, s) = setup(0.7, 2.0, 0.0, 0.0, 5.0);
        let rate = 1.5;
        let strat = ExecutionStrategy::new(1.0, vec![], vec![rate; 7], Mode::Standard).unwrap();
        let v = expected_proceeds(&p, &s, &strat).unwrap();
        let fine = GaussLegendre::new(40);
        let k = p.alpha * rate / p.beta;
        let oracle = fine.composite(|r| rate * (-k * (1.0 - (-p.beta * r).exp())).exp(), 0.0, 1.0, 50);
        assert_relative_eq!(v, oracle, max_relative = 1e-13);
    }

    #[test]
    fn rejects_overselling() {
        let (p, s) = setup(1.0, 1.0, 0.2, 1.0, 0.5);
        let strat = ExecutionStrategy::initial_block(0.6, 1.0).unwrap();
        assert!(matches!(expected_proceeds(&p, &s, &strat), Err(Error::Inadmissible(_))));
    }

    #[test]
    fn decay_profile_examples() {
        let p = ModelParams::new(1.3, 0.8, 0.1, 0.0, 1.0).unwrap();
        assert_eq!(impact_decay_profile(&p, &ExecutionStrategy::empty(1.0), 0.5), 0.0);
        let block = ExecutionStrategy::initial_block(2.0, 1.0).unwrap();
        for r in [0.0, 0.3, 1.0] {
            assert_relative_eq!(
                impact_decay_profile(&p, &block, r),
                1.3 * 2.0 * (-0.8 * r).exp(),
                max_relative = 1e-14
            );
        }
        let fast = ModelParams::new(1.3, 500.0, 0.1, 0.0, 1.0).unwrap();
        assert!(impact_decay_profile(&fast, &block, 0.2) < 1e-40);
    }

    #[test]
    fn decay_profile_with_density_and_interior_block() {
        let p = ModelParams::new(0.5, 1.5, 0.0, 0.0, 1.0).unwrap();
        let strat = ExecutionStrategy::new(
            1.0,
            vec![Impulse { time: 0.4, size: 1.0 }],
            vec![2.0, 2.0, 0.0, 0.0],
            Mode::Standard,
        )
        .unwrap();
        // density 2 on [0, 0.5] plus block 1 at 0.4; query at 0.8
        let r: f64 = 0.8;
        let gradual = 0.5 * 2.0 / 1.5 * ((-1.5 * (r - 0.5)).exp() - (-1.5 * r).exp());
        let block = 0.5 * (-1.5 * (r - 0.4)).exp();
        assert_relative_eq!(impact_decay_profile(&p, &strat, r), gradual + block, max_relative = 1e-13);
    }

    #[test]
    fn breakdown_sums() {
        let (p, s) = setup(1.0, 1.0, 0.3, 1.0, 4.0);
        let strat = ExecutionStrategy::assemble_optimal(1.0, &[0.8; 20], 0.5, 1.0, Mode::Standard).unwrap();
        let b = proceeds_breakdown(&p, &s, &strat).unwrap();
        assert!((b.total - (b.initial_block_value + b.gradual_value + b.terminal_block_value)).abs() <= 1e-12);
        assert!(b.initial_block_value > 0.0 && b.gradual_value > 0.0 && b.terminal_block_value > 0.0);
    }
}
