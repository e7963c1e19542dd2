//! Deterministic execution strategies: block trades (impulses) plus a
//! piecewise-constant selling rate on a uniform grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Mode;

/// Default number of density cells on [0, t].
pub const DEFAULT_GRID_CELLS: usize = 1000;

const TIME_EPS: f64 = 1e-12;

/// A block trade of `size` shares at `time` (negative size is a purchase).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Impulse {
    pub time: f64,
    pub size: f64,
}

/// Constant selling rate on `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSegment {
    pub start: f64,
    pub end: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionStrategy {
    horizon: f64,
    impulses: Vec<Impulse>,
    /// Rate on each of the uniform cells of [0, horizon]; empty means ζ ≡ 0.
    density: Vec<f64>,
    mode: Mode,
}

impl ExecutionStrategy {
    pub fn new(horizon: f64, mut impulses: Vec<Impulse>, density: Vec<f64>, mode: Mode) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!("horizon must be > 0 (got {horizon})")));
        }
        impulses.retain(|imp| imp.size != 0.0);
        for imp in &impulses {
            if !(imp.time.is_finite() && imp.size.is_finite()) {
                return Err(Error::InvalidParameter("impulse must be finite".into()));
            }
            if imp.time < -TIME_EPS || imp.time > horizon * (1.0 + TIME_EPS) {
                return Err(Error::InvalidParameter(format!(
                    "impulse time {} outside [0, {horizon}]",
                    imp.time
                )));
            }
        }
        for imp in &mut impulses {
            imp.time = imp.time.clamp(0.0, horizon);
        }
        impulses.sort_by(|a, b| a.time.total_cmp(&b.time));
        if density.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("density must be finite".into()));
        }
        if mode == Mode::Standard {
            if let Some(imp) = impulses.iter().find(|imp| imp.size < 0.0) {
                return Err(Error::Inadmissible(format!(
                    "negative impulse {} at r = {} requires extended mode",
                    imp.size, imp.time
                )));
            }
            if let Some(v) = density.iter().find(|v| **v < 0.0) {
                return Err(Error::Inadmissible(format!(
                    "negative selling rate {v} requires extended mode"
                )));
            }
        }
        Ok(Self { horizon, impulses, density, mode })
    }

    /// No trading at all.
    pub fn empty(horizon: f64) -> Self {
        Self { horizon, impulses: Vec::new(), density: Vec::new(), mode: Mode::Standard }
    }

    /// Sell everything at r = 0.
    pub fn initial_block(holdings: f64, horizon: f64) -> Result<Self> {
        if holdings < 0.0 {
            return Err(Error::InvalidParameter(format!("holdings must be >= 0 (got {holdings})")));
        }
        Self::new(horizon, vec![Impulse { time: 0.0, size: holdings }], Vec::new(), Mode::Standard)
    }

    /// Initial block `p`, gradual rate `zeta_grid` on uniform cells, terminal block `q`.
    pub fn assemble_optimal(p: f64, zeta_grid: &[f64], q: f64, horizon: f64, mode: Mode) -> Result<Self> {
        Self::new(
            horizon,
            vec![Impulse { time: 0.0, size: p }, Impulse { time: horizon, size: q }],
            zeta_grid.to_vec(),
            mode,
        )
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn impulses(&self) -> &[Impulse] {
        &self.impulses
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn cells(&self) -> usize {
        self.density.len()
    }

    pub fn cell_width(&self) -> f64 {
        if self.density.is_empty() {
            self.horizon
        } else {
            self.horizon / self.density.len() as f64
        }
    }

    /// Rate in force at time r (right-continuous).
    pub fn density_at(&self, r: f64) -> f64 {
        if self.density.is_empty() || r < 0.0 || r >= self.horizon {
            return 0.0;
        }
        let idx = ((r / self.cell_width()) as usize).min(self.density.len() - 1);
        self.density[idx]
    }

    pub fn total_sold(&self) -> f64 {
        let blocks: f64 = self.impulses.iter().map(|imp| imp.size).sum();
        blocks + self.density.iter().sum::<f64>() * self.cell_width()
    }

    /// Shares sold on [0, r], impulses at r included.
    pub fn sold_by(&self, r: f64) -> f64 {
        let blocks: f64 = self
            .impulses
            .iter()
            .take_while(|imp| imp.time <= r + TIME_EPS * self.horizon)
            .map(|imp| imp.size)
            .sum();
        if self.density.is_empty() {
            return blocks;
        }
        let h = self.cell_width();
        let r = r.clamp(0.0, self.horizon);
        let full = ((r / h) as usize).min(self.density.len());
        let mut gradual: f64 = self.density[..full].iter().sum::<f64>() * h;
        if full < self.density.len() {
            gradual += self.density[full] * (r - full as f64 * h);
        }
        blocks + gradual
    }

    pub fn contains_purchase(&self) -> bool {
        self.impulses.iter().any(|imp| imp.size < 0.0) || self.density.iter().any(|v| *v < 0.0)
    }

    pub fn segments(&self) -> Vec<RateSegment> {
        let h = self.cell_width();
        self.density
            .iter()
            .enumerate()
            .map(|(j, &rate)| RateSegment {
                start: j as f64 * h,
                end: if j + 1 == self.density.len() { self.horizon } else { (j + 1) as f64 * h },
                rate,
            })
            .collect()
    }

    /// CSV with columns `r,impulse,zeta,cumulative_sold`. One row per grid
    /// point and per impulse time; `zeta` is the rate in force just after `r`.
    pub fn to_csv(&self) -> String {
        let h = self.cell_width();
        let mut times: Vec<f64> = (0..=self.density.len()).map(|j| j as f64 * h).collect();
        if self.density.is_empty() {
            times = vec![0.0, self.horizon];
        }
        if let Some(last) = times.last_mut() {
            *last = self.horizon;
        }
        times.extend(self.impulses.iter().map(|imp| imp.time));
        times.sort_by(f64::total_cmp);
        times.dedup_by(|a, b| (*a - *b).abs() <= TIME_EPS * self.horizon);

        let mut out = String::from("r,impulse,zeta,cumulative_sold\n");
        for &r in &times {
            let impulse: f64 = self
                .impulses
                .iter()
                .filter(|imp| (imp.time - r).abs() <= TIME_EPS * self.horizon)
                .fold(0.0, |acc, imp| acc + imp.size);
            let zeta = self.density_at(r);
            out.push_str(&format!("{},{},{},{}\n", r, impulse, zeta, self.sold_by(r)));
        }
        out
    }
}

/// Smoothed version of a strategy: every impulse (r, p) becomes rate p/δ on
/// [r, r + δ], or on [r − δ, r] when r + δ would pass the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaFamily {
    base: ExecutionStrategy,
    delta: f64,
}

impl DeltaFamily {
    pub fn new(base: ExecutionStrategy, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= base.horizon()) {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in (0, {}] (got {delta})",
                base.horizon()
            )));
        }
        Ok(Self { base, delta })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn base(&self) -> &ExecutionStrategy {
        &self.base
    }

    fn smoothed_intervals(&self) -> Vec<RateSegment> {
        let t = self.base.horizon();
        self.base
            .impulses()
            .iter()
            .map(|imp| {
                let (start, end) = if imp.time + self.delta <= t * (1.0 + TIME_EPS) {
                    (imp.time, (imp.time + self.delta).min(t))
                } else {
                    (imp.time - self.delta, imp.time)
                };
                RateSegment { start, end, rate: imp.size / self.delta }
            })
            .collect()
    }

    /// Disjoint rate segments covering [0, t], base density plus smoothed blocks.
    pub fn segments(&self) -> Vec<RateSegment> {
        let t = self.base.horizon();
        let smoothed = self.smoothed_intervals();
        let mut cuts: Vec<f64> = self.base.segments().iter().flat_map(|s| [s.start, s.end]).collect();
        cuts.extend(smoothed.iter().flat_map(|s| [s.start, s.end]));
        cuts.push(0.0);
        cuts.push(t);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() <= TIME_EPS * t);
        cuts.windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                let extra: f64 = smoothed
                    .iter()
                    .filter(|s| s.start <= mid && mid < s.end)
                    .map(|s| s.rate)
                    .sum();
                RateSegment { start: w[0], end: w[1], rate: self.base.density_at(mid) + extra }
            })
            .collect()
    }

    pub fn total_sold(&self) -> f64 {
        self.segments().iter().map(|s| s.rate * (s.end - s.start)).sum()
    }
}
