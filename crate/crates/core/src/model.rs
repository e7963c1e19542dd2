//! Market and trader parameters, derived quantities and regime classification.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Whether strategies may contain purchases (negative sales).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Standard,
    Extended,
}

/// Impact, mean-reversion and horizon parameters.
///
/// The log price mean-reverts to `fundamental_log` at speed `beta` with
/// volatility `sigma`; selling at rate ζ depresses the log price at rate `alpha * ζ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    pub fundamental_log: f64,
    pub horizon: f64,
}

impl ModelParams {
    pub fn new(alpha: f64, beta: f64, sigma: f64, fundamental_log: f64, horizon: f64) -> Result<Self> {
        let params = Self { alpha, beta, sigma, fundamental_log, horizon };
        params.validate()?;
        Ok(params)
    }

    /// Zero-impact market. Only the simulator and the proceeds evaluator
    /// accept it; it exists to check them against unimpacted moments.
    pub fn frictionless(beta: f64, sigma: f64, fundamental_log: f64, horizon: f64) -> Result<Self> {
        let params = Self { alpha: 0.0, beta, sigma, fundamental_log, horizon };
        params.validate_common()?;
        Ok(params)
    }

    pub(crate) fn validate_common(&self) -> Result<()> {
        let finite = [self.alpha, self.beta, self.sigma, self.fundamental_log, self.horizon]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("parameters must be finite".into()));
        }
        if self.beta <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "beta must be > 0 (got {}); the log-variance scale sigma^2/(4 beta) is undefined otherwise",
                self.beta
            )));
        }
        if self.sigma < 0.0 {
            return Err(Error::InvalidParameter(format!("sigma must be >= 0 (got {})", self.sigma)));
        }
        if !(self.horizon > 0.0 && self.horizon <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "horizon must lie in (0, 1] (got {})",
                self.horizon
            )));
        }
        if self.alpha < 0.0 {
            return Err(Error::InvalidParameter(format!("alpha must be >= 0 (got {})", self.alpha)));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_common()?;
        if self.alpha <= 0.0 {
            return Err(Error::InvalidParameter(format!("alpha must be > 0 (got {})", self.alpha)));
        }
        Ok(())
    }

    /// y = σ²/(4β).
    pub fn log_variance_scale(&self) -> f64 {
        self.sigma * self.sigma / (4.0 * self.beta)
    }

    pub fn is_zero_vol(&self) -> bool {
        self.sigma == 0.0
    }
}

/// Trader state: cash, share holdings and current price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketState {
    pub cash: f64,
    pub holdings: f64,
    pub price: f64,
}

impl MarketState {
    pub fn new(cash: f64, holdings: f64, price: f64) -> Result<Self> {
        let state = Self { cash, holdings, price };
        state.validate(Mode::Extended)?;
        Ok(state)
    }

    /// State whose price sits at `exp(fundamental_log + mispricing)`.
    pub fn from_mispricing(params: &ModelParams, cash: f64, holdings: f64, mispricing: f64) -> Result<Self> {
        Self::new(cash, holdings, (params.fundamental_log + mispricing).exp())
    }

    pub fn validate(&self, mode: Mode) -> Result<()> {
        if !(self.cash.is_finite() && self.holdings.is_finite() && self.price.is_finite()) {
            return Err(Error::InvalidParameter("state must be finite".into()));
        }
        if self.price <= 0.0 {
            return Err(Error::InvalidParameter(format!("price must be > 0 (got {})", self.price)));
        }
        if mode == Mode::Standard && self.holdings < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "holdings must be >= 0 in standard mode (got {})",
                self.holdings
            )));
        }
        Ok(())
    }
}

/// y (log-variance scale) and z (log mispricing).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedQuantities {
    pub y: f64,
    pub z: f64,
}

pub fn derive(params: &ModelParams, state: &MarketState) -> Result<DerivedQuantities> {
    if params.beta <= 0.0 {
        return Err(Error::InvalidParameter("beta must be > 0".into()));
    }
    if !(state.price > 0.0) {
        return Err(Error::InvalidParameter(format!("price must be > 0 (got {})", state.price)));
    }
    Ok(DerivedQuantities {
        y: params.log_variance_scale(),
        z: state.price.ln() - params.fundamental_log,
    })
}

/// Which closed form (if any) governs the value function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// φ ≤ (z − 2y)/α: an initial block is optimal.
    SmallHoldings,
    /// φ > max{z, 1 + β}/α: block–gradual–block mixture.
    LargeHoldings,
    /// Between the two thresholds; no closed form.
    Gap,
    /// σ = 0 and φ > z/α: constant-speed gradual liquidation.
    ZeroVol,
}

impl Regime {
    pub fn has_closed_form(self) -> bool {
        !matches!(self, Regime::Gap)
    }
}

/// Thresholds on the holdings that separate the regimes.
pub fn small_holdings_bound(params: &ModelParams, d: &DerivedQuantities) -> f64 {
    (d.z - 2.0 * d.y) / params.alpha
}

pub fn large_holdings_bound(params: &ModelParams, d: &DerivedQuantities) -> f64 {
    d.z.max(1.0 + params.beta) / params.alpha
}

pub fn classify(params: &ModelParams, state: &MarketState) -> Result<Regime> {
    let d = derive(params, state)?;
    Ok(classify_derived(params, &d, state.holdings))
}

pub fn classify_derived(params: &ModelParams, d: &DerivedQuantities, holdings: f64) -> Regime {
    if holdings <= small_holdings_bound(params, d) {
        Regime::SmallHoldings
    } else if params.is_zero_vol() {
        Regime::ZeroVol
    } else if holdings > large_holdings_bound(params, d) {
        Regime::LargeHoldings
    } else {
        Regime::Gap
    }
}

/// The closed forms assume z > 2y (the price drifts down toward e^F).
pub fn within_standing_assumption(d: &DerivedQuantities) -> bool {
    d.z > 2.0 * d.y
}

/// The flat JSON parameter object: keys `alpha, beta, sigma, F, t, w, phi, s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterSet {
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    #[serde(rename = "F")]
    pub fundamental_log: f64,
    #[serde(rename = "t")]
    pub horizon: f64,
    pub w: f64,
    pub phi: f64,
    pub s: f64,
}

impl ParameterSet {
    pub fn split(&self) -> Result<(ModelParams, MarketState)> {
        let params = ModelParams::new(self.alpha, self.beta, self.sigma, self.fundamental_log, self.horizon)?;
        let state = MarketState::new(self.w, self.phi, self.s)?;
        Ok((params, state))
    }

    pub fn join(params: &ModelParams, state: &MarketState) -> Self {
        Self {
            alpha: params.alpha,
            beta: params.beta,
            sigma: params.sigma,
            fundamental_log: params.fundamental_log,
            horizon: params.horizon,
            w: state.cash,
            phi: state.holdings,
            s: state.price,
        }
    }
}
