//! Positive zeros of `J_nu` by interlacing chains.
//!
//! Zeros of order `nu + 1` are bracketed by consecutive zeros of order `nu`,
//! so a table for orders `0..=L` is built upward from the base order.

use super::bessel::{classify_order, z_and_dz, Kind};
use super::roots::safeguarded_newton;
use crate::error::{KernelError, Result};
use std::f64::consts::PI;

fn base_zeros(kind: Kind, count: usize) -> Result<Vec<f64>> {
    match kind {
        Kind::Spherical => Ok((1..=count).map(|k| k as f64 * PI).collect()),
        Kind::Cylindrical => (1..=count)
            .map(|k| {
                let lo = (k as f64 - 0.25) * PI;
                let hi = (k as f64 - 0.125) * PI;
                safeguarded_newton(|x| z_and_dz(kind, 0, x), lo, hi)
            })
            .collect(),
    }
}

fn next_order(kind: Kind, l: usize, prev: &[f64]) -> Result<Vec<f64>> {
    prev.windows(2)
        .map(|w| safeguarded_newton(|x| z_and_dz(kind, l, x), w[0], w[1]))
        .collect()
}

/// `table[l][k - 1] = j_{nu(l), k}` for `l <= lmax`, `k <= kmax`.
pub fn zero_table(kind: Kind, lmax: usize, kmax: usize) -> Result<Vec<Vec<f64>>> {
    let mut cur = base_zeros(kind, kmax + lmax)?;
    let mut table = Vec::with_capacity(lmax + 1);
    for l in 0..=lmax {
        if l > 0 {
            cur = next_order(kind, l, &cur)?;
        }
        table.push(cur[..kmax].to_vec());
    }
    Ok(table)
}

/// The `k`-th positive zero of `J_nu` for integer or half-integer `nu`.
pub fn bessel_j_zero(order: f64, index: usize) -> Result<f64> {
    let (kind, l) = classify_order(order)?;
    if index == 0 || index > 500 {
        return Err(KernelError::InvalidParameter(format!("zero index {index} not in 1..=500")));
    }
    Ok(zero_table(kind, l, index)?[l][index - 1])
}
