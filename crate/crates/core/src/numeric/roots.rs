//! Bracketed root finding for monotone scalar functions.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct RootOptions {
    /// Bisection stops once the bracket is narrower than this.
    pub bisection_width: f64,
    /// Newton polishing stops once the step is below this (absolute).
    pub newton_step_tol: f64,
    pub max_newton: usize,
    pub max_bisection: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            bisection_width: 1e-8,
            newton_step_tol: 1e-15,
            max_newton: 60,
            max_bisection: 400,
        }
    }
}

fn check_bracket(flo: f64, fhi: f64, lo: f64, hi: f64, context: &str) -> Result<()> {
    if !(flo.is_finite() && fhi.is_finite()) {
        return Err(Error::Numerical(format!(
            "{context}: non-finite value at bracket end ({flo}, {fhi})"
        )));
    }
    if flo.signum() == fhi.signum() && flo != 0.0 && fhi != 0.0 {
        return Err(Error::NoSignChange { lo, hi, context: context.to_string() });
    }
    Ok(())
}

/// Plain bisection down to `width` (or until the midpoint stops moving).
pub fn bisect<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, width: f64, context: &str) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, fb) = (f(a), f(b));
    check_bracket(fa, fb, a, b, context)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    for _ in 0..2000 {
        let m = 0.5 * (a + b);
        if (b - a) <= width || m <= a || m >= b {
            return Ok(m);
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Bisection to `opts.bisection_width`, then Newton steps safeguarded to stay
/// inside the final bracket. `fdf` returns `(f(x), f'(x))`.
pub fn bisect_newton<F: Fn(f64) -> (f64, f64)>(
    fdf: F,
    lo: f64,
    hi: f64,
    opts: RootOptions,
    context: &str,
) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, _) = fdf(a);
    let (fb, _) = fdf(b);
    check_bracket(fa, fb, a, b, context)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    let mut iterations = 0;
    while (b - a) > opts.bisection_width && iterations < opts.max_bisection {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let (fm, _) = fdf(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
        iterations += 1;
    }
    let mut x = 0.5 * (a + b);
    for _ in 0..opts.max_newton {
        let (fx, dfx) = fdf(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == fa.signum() {
            a = x;
        } else {
            b = x;
        }
        let step = if dfx != 0.0 && dfx.is_finite() { fx / dfx } else { f64::NAN };
        let candidate = x - step;
        let next = if candidate.is_finite() && candidate > a && candidate < b {
            candidate
        } else {
            0.5 * (a + b)
        };
        if (next - x).abs() <= opts.newton_step_tol * x.abs().max(1.0) {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_finds_sqrt_two() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14, "sqrt").unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn newton_polish_reaches_machine_precision() {
        let r = bisect_newton(|x| (x.exp() - 3.0, x.exp()), 0.0, 2.0, RootOptions::default(), "ln3")
            .unwrap();
        assert!((r - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn reports_missing_sign_change() {
        let err = bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-10, "no root").unwrap_err();
        assert!(matches!(err, Error::NoSignChange { .. }));
    }

    #[test]
    fn bad_derivative_falls_back_to_bisection() {
        // derivative deliberately wrong in sign; safeguard keeps iterates in bracket
        let r = bisect_newton(|x| (x - 0.3, -1.0), 0.0, 1.0, RootOptions::default(), "lin").unwrap();
        assert!((r - 0.3).abs() < 1e-12);
    }
}
