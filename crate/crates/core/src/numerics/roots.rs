//! Safeguarded Newton iteration inside a sign-change bracket.

use crate::error::{KernelError, Result};

/// Root of `f` in `[lo, hi]` where `f(lo)` and `f(hi)` differ in sign.
/// `f` returns the value and the derivative.
pub fn safeguarded_newton<F>(f: F, lo: f64, hi: f64) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    let (mut a, mut b) = (lo, hi);
    let (fa, _) = f(a);
    let (fb, _) = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return Err(KernelError::RootFindFailure { lo, hi });
    }
    let neg_at_a = fa < 0.0;
    let mut x = 0.5 * (a + b);
    for _ in 0..200 {
        let (fx, dfx) = f(x);
        if !fx.is_finite() {
            return Err(KernelError::RootFindFailure { lo, hi });
        }
        if fx == 0.0 {
            return Ok(x);
        }
        if (fx < 0.0) == neg_at_a {
            a = x;
        } else {
            b = x;
        }
        let newton = x - fx / dfx;
        let next = if dfx != 0.0 && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        let step = (next - x).abs();
        x = next;
        if step <= 4.0 * f64::EPSILON * x.abs() || b - a <= 4.0 * f64::EPSILON * x.abs() {
            return Ok(x);
        }
    }
    Err(KernelError::RootFindFailure { lo, hi })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt_two() {
        let r = safeguarded_newton(|x| (x * x - 2.0, 2.0 * x), 0.0, 3.0).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn survives_bad_derivative() {
        // Newton from the midpoint overshoots; bisection keeps it inside.
        let r = safeguarded_newton(|x: f64| (x.atan(), 1.0 / (1.0 + x * x)), -3.0, 20.0).unwrap();
        assert!(r.abs() < 1e-14);
    }

    #[test]
    fn rejects_bracket_without_sign_change() {
        assert!(matches!(
            safeguarded_newton(|x| (x * x + 1.0, 2.0 * x), -1.0, 2.0),
            Err(KernelError::RootFindFailure { .. })
        ));
    }
}
