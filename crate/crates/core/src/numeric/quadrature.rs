//! Gauss–Legendre rules: fixed, composite and adaptive (panel doubling).

use std::f64::consts::PI;

/// An `n`-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes are the roots of P_n, found by Newton iteration from the
    /// Chebyshev-like initial guesses; weights from the derivative.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped onto [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }

    /// Composite rule over `panels` equal sub-intervals.
    pub fn composite<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64, panels: usize) -> f64 {
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|j| {
                let lo = a + j as f64 * h;
                let hi = if j + 1 == panels { b } else { lo + h };
                self.integrate(&f, lo, hi)
            })
            .sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Result of [`adaptive_gauss_legendre`].
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveEstimate {
    pub value: f64,
    pub panels: usize,
    pub converged: bool,
}

const ADAPTIVE_ORDER: usize = 16;
const MAX_PANELS: usize = 1 << 12;

/// Composite 16-point Gauss–Legendre, doubling the panel count until two
/// successive estimates differ by less than `rel_tol` (relative, with an
/// absolute floor of `rel_tol * 1e-3` for integrals near zero).
pub fn adaptive_gauss_legendre<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
) -> AdaptiveEstimate {
    if a == b {
        return AdaptiveEstimate { value: 0.0, panels: 0, converged: true };
    }
    let rule = GaussLegendre::new(ADAPTIVE_ORDER);
    let mut panels = 1;
    let mut previous = rule.composite(&f, a, b, panels);
    while panels < MAX_PANELS {
        panels *= 2;
        let current = rule.composite(&f, a, b, panels);
        let scale = current.abs().max(previous.abs());
        if (current - previous).abs() <= rel_tol * scale.max(1e-3) {
            return AdaptiveEstimate { value: current, panels, converged: true };
        }
        previous = current;
    }
    AdaptiveEstimate { value: previous, panels, converged: false }
}
