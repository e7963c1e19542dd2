//! Optimal liquidation of a block of shares when the log price follows an
//! Ornstein–Uhlenbeck process and selling depresses it linearly.
//!
//! The continuous-time optimum sells an initial block, then gradually, then
//! a terminal block ([`continuous`], [`zero_vol`]). [`discrete`] solves the
//! n-period version, [`proceeds`] evaluates any deterministic strategy
//! exactly, [`montecarlo`] simulates it, and [`manipulation`] looks for
//! profitable round trips once purchases are allowed.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod continuous;
pub mod discrete;
pub mod error;
pub mod manipulation;
pub mod model;
pub mod montecarlo;
pub mod numeric;
pub mod proceeds;
pub mod strategy;
pub mod zero_vol;

pub use continuous::{OptimalSchedule, SolveOptions, Valuation};
pub use discrete::{DiscreteProblem, DiscreteSolution};
pub use error::{Error, Result};
pub use manipulation::ManipulationReport;
pub use model::{derive, classify, DerivedQuantities, MarketState, Mode, ModelParams, ParameterSet, Regime};
pub use montecarlo::SimulationReport;
pub use proceeds::{expected_proceeds, ProceedsBreakdown};
pub use strategy::{DeltaFamily, ExecutionStrategy, Impulse, RateSegment};
pub use zero_vol::ZeroVolSolution;
