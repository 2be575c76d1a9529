//! Legendre and Chebyshev polynomials by three-term recurrence.

use crate::error::{KernelError, Result};

/// `P_l(t)` for `t` in `[-1, 1]`.
pub fn legendre_p(degree: usize, t: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&t) {
        return Err(KernelError::Domain(format!("legendre argument {t} outside [-1, 1]")));
    }
    if degree > 200 {
        return Err(KernelError::InvalidParameter(format!("degree {degree} > 200")));
    }
    let mut out = vec![0.0; degree + 1];
    legendre_all(t, &mut out);
    Ok(out[degree])
}

/// Fills `out[l] = P_l(t)` for every `l < out.len()`.
pub fn legendre_all(t: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = t;
    }
    for l in 2..out.len() {
        let lf = l as f64;
        out[l] = ((2.0 * lf - 1.0) * t * out[l - 1] - (lf - 1.0) * out[l - 2]) / lf;
    }
}

/// Fills `out[l] = T_l(t) = cos(l * acos t)`.
pub fn chebyshev_all(t: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = t;
    }
    for l in 2..out.len() {
        out[l] = 2.0 * t * out[l - 1] - out[l - 2];
    }
}
