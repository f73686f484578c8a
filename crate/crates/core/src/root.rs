//! Bracketed bisection for scalar equations.

use crate::error::{Error, Result};

/// Distance kept from the open ends of the harvest-fraction interval (0, 1).
pub const BRACKET_EPS: f64 = 1e-12;

/// Hard cap on bisection steps. 200 halvings exhaust f64 resolution on any
/// finite bracket.
pub const MAX_ITERATIONS: usize = 200;

/// Finds a root of `f` on `[lo, hi]`, where `f(lo)` and `f(hi)` have
/// opposite signs, by halving until the bracket is narrower than `tol` or
/// stops shrinking. Returns the bracket midpoint.
pub fn bisect<F>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let f_lo = eval(&f, lo)?;
    let f_hi = eval(&f, hi)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoSignChange { lo, hi, f_lo, f_hi });
    }
    let lo_negative = f_lo < 0.0;

    for _ in 0..MAX_ITERATIONS {
        let mid = lo + 0.5 * (hi - lo);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            break;
        }
        let f_mid = eval(&f, mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_mid < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo + 0.5 * (hi - lo))
}

fn eval<F: Fn(f64) -> f64>(f: &F, x: f64) -> Result<f64> {
    let v = f(x);
    if v.is_nan() {
        Err(Error::NonFinite { at: x, value: v })
    } else {
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt_two() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-13).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn decreasing_function() {
        let r = bisect(|x| 1.0 - x, 0.0, 3.0, 1e-12).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn no_sign_change_is_reported() {
        let err = bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-10).unwrap_err();
        assert!(matches!(err, Error::NoSignChange { .. }));
    }

    #[test]
    fn nan_is_reported() {
        let err = bisect(|x| if x > 0.5 { f64::NAN } else { -1.0 }, 0.0, 1.0, 1e-10).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn tolerance_below_resolution_terminates() {
        let r = bisect(|x| x - 0.3, 0.0, 1.0, 0.0).unwrap();
        assert!((r - 0.3).abs() < 1e-15);
    }

    #[test]
    fn infinite_endpoint_value_is_a_sign() {
        let r = bisect(|x| if x >= 1.0 { f64::INFINITY } else { x - 0.25 }, 0.0, 1.0, 1e-12).unwrap();
        assert!((r - 0.25).abs() < 1e-11);
    }
}
