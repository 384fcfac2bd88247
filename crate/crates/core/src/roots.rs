//! Scalar root finding.

use crate::error::{Error, Result};

/// Safeguarded Newton on a bracket `[lo, hi]` with `f(lo) < 0 < f(hi)`.
/// `f` returns `(value, derivative)`.
pub fn newton_bracketed<F>(f: F, mut lo: f64, mut hi: f64, xtol: f64, max_iter: usize) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    let mut x = 0.5 * (lo + hi);
    for _ in 0..max_iter {
        let (v, d) = f(x);
        if v == 0.0 {
            return Ok(x);
        }
        if v < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= xtol * (1.0 + x.abs()) {
            return Ok(0.5 * (lo + hi));
        }
        let step = if d != 0.0 { x - v / d } else { f64::NAN };
        let newton_ok = step.is_finite() && step > lo && step < hi;
        let nx = if newton_ok { step } else { 0.5 * (lo + hi) };
        if (nx - x).abs() <= 0.25 * xtol * (1.0 + x.abs()) {
            return Ok(nx);
        }
        x = nx;
    }
    Err(Error::NoConvergence { iters: max_iter })
}

/// First root of `f` on `[0, hi]` with `f(0) < 0`, located by a uniform scan of
/// `scan` cells followed by bracketed Newton. Returns `None` when no sign change is found.
pub fn first_root<F>(f: F, hi: f64, scan: usize, xtol: f64) -> Option<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    let mut prev = 0.0;
    for k in 1..=scan {
        let x = hi * k as f64 / scan as f64;
        if f(x).0 >= 0.0 {
            return newton_bracketed(&f, prev, x, xtol, 200).ok();
        }
        prev = x;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_two() {
        let r = newton_bracketed(|x| (x * x - 2.0, 2.0 * x), 0.0, 2.0, 1e-15, 100).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn first_of_two_roots() {
        // roots at 1 and 3; f(0) = -3 < 0
        let f = |x: f64| (-(x - 1.0) * (x - 3.0), -2.0 * x + 4.0);
        let r = first_root(f, 4.0, 16, 1e-14).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }
}
