//! Root finding and quadrature used by every solver in the crate.

pub mod quadrature;
pub mod roots;

pub use quadrature::{adaptive_gauss_legendre, GaussLegendre};
pub use roots::{bisect, bisect_newton, RootOptions};

/// Pairwise (cascade) summation; result is independent of how the slice was produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}
