//! Derivative-free scalar root finding.

use crate::error::{Error, Result};

/// Outcome of a bisection run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
}

/// Bisection on a sign-changing bracket `[lo, hi]`, stopping when
/// `|g(x)| <= tol` or the bracket collapses to rounding.
pub fn bisect(
    g: impl Fn(f64) -> Result<f64>,
    lo: f64,
    hi: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Root> {
    let (mut lo, mut hi) = (lo, hi);
    let mut g_lo = g(lo)?;
    let g_hi = g(hi)?;
    if g_lo.abs() <= tol {
        return Ok(Root {
            x: lo,
            value: g_lo,
            iterations: 0,
        });
    }
    if g_hi.abs() <= tol {
        return Ok(Root {
            x: hi,
            value: g_hi,
            iterations: 0,
        });
    }
    if g_lo.signum() == g_hi.signum() {
        return Err(Error::RootFind(format!(
            "no sign change on [{lo}, {hi}]: g = {g_lo:e}, {g_hi:e}"
        )));
    }
    let mut best = if g_lo.abs() < g_hi.abs() {
        (lo, g_lo)
    } else {
        (hi, g_hi)
    };
    for it in 1..=max_iter {
        let mid = 0.5 * (lo + hi);
        let g_mid = g(mid)?;
        if g_mid.abs() < best.1.abs() {
            best = (mid, g_mid);
        }
        if g_mid.abs() <= tol {
            return Ok(Root {
                x: mid,
                value: g_mid,
                iterations: it,
            });
        }
        if mid <= lo || mid >= hi {
            break;
        }
        if g_mid.signum() == g_lo.signum() {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::RootFind(format!(
        "bisection stalled at x = {} with |g| = {:e} (tolerance {tol:e})",
        best.0,
        best.1.abs()
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt_two() {
        let r = bisect(|x| Ok(x * x - 2.0), 0.0, 2.0, 1e-14, 200).unwrap();
        assert!((r.x - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn rejects_bad_bracket() {
        assert!(bisect(|x| Ok(x * x + 1.0), -1.0, 1.0, 1e-10, 50).is_err());
    }
}
