//! Angular factors for eigen-series on the unit ball.
//!
//! Kernels only need the pair sum `A_l(c) = sum_m Y_lm(a) Y_lm(b)` with
//! `c = a . b`; projections of data need the real orthonormal harmonics.

use std::f64::consts::PI;

use super::legendre::{chebyshev_all, legendre_all};
use crate::geometry::Point;

/// Fills `out[l] = A_l(c)` for `l < out.len()`.
pub fn pair_factors(n: usize, c: f64, out: &mut [f64]) {
    if n == 2 {
        chebyshev_all(c, out);
        for (l, v) in out.iter_mut().enumerate() {
            *v *= if l == 0 { 1.0 } else { 2.0 } / (2.0 * PI);
        }
    } else {
        legendre_all(c, out);
        for (l, v) in out.iter_mut().enumerate() {
            *v *= (2 * l + 1) as f64 / (4.0 * PI);
        }
    }
}

/// Real orthonormal harmonics on the circle or the sphere up to degree `lmax`.
#[derive(Debug, Clone)]
pub struct Harmonics {
    pub n: usize,
    pub lmax: usize,
}

impl Harmonics {
    pub fn new(n: usize, lmax: usize) -> Self {
        Harmonics { n, lmax }
    }

    /// Number of harmonics of degree `l`.
    pub fn count_of(&self, l: usize) -> usize {
        match (self.n, l) {
            (2, 0) => 1,
            (2, _) => 2,
            _ => 2 * l + 1,
        }
    }

    /// Index of the first harmonic of degree `l`.
    pub fn offset(&self, l: usize) -> usize {
        match (self.n, l) {
            (2, 0) => 0,
            (2, _) => 2 * l - 1,
            _ => l * l,
        }
    }

    pub fn len(&self) -> usize {
        self.offset(self.lmax) + self.count_of(self.lmax)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Degree of the harmonic stored at `index`.
    pub fn degree(&self, index: usize) -> usize {
        if self.n == 2 {
            index.div_ceil(2)
        } else {
            (index as f64).sqrt().floor() as usize
        }
    }

    /// Values of every harmonic at the unit vector `u`; `out.len() == self.len()`.
    pub fn eval(&self, u: &Point, out: &mut [f64]) {
        if self.n == 2 {
            let th = u.get(1).atan2(u.get(0));
            out[0] = 1.0 / (2.0 * PI).sqrt();
            let s = 1.0 / PI.sqrt();
            for l in 1..=self.lmax {
                let a = l as f64 * th;
                out[2 * l - 1] = s * a.cos();
                out[2 * l] = s * a.sin();
            }
            return;
        }
        let ct = u.get(2).clamp(-1.0, 1.0);
        let st = (1.0 - ct * ct).max(0.0).sqrt();
        let ph = u.get(1).atan2(u.get(0));
        let lmax = self.lmax;
        // normalized associated Legendre by column m
        let mut pmm = (1.0 / (4.0 * PI)).sqrt();
        for m in 0..=lmax {
            if m > 0 {
                let mf = m as f64;
                pmm *= -((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * st;
            }
            let (cm, sm) = ((m as f64 * ph).cos(), (m as f64 * ph).sin());
            let mut put = |l: usize, p: f64| {
                let base = l * l + l;
                if m == 0 {
                    out[base] = p;
                } else {
                    out[base + m] = std::f64::consts::SQRT_2 * p * cm;
                    out[base - m] = std::f64::consts::SQRT_2 * p * sm;
                }
            };
            put(m, pmm);
            if m == lmax {
                break;
            }
            let mut p_prev = pmm;
            let mut p_cur = (2.0 * m as f64 + 3.0).sqrt() * ct * pmm;
            put(m + 1, p_cur);
            for l in (m + 2)..=lmax {
                let (lf, mf) = (l as f64, m as f64);
                let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
                let p = a * (ct * p_cur - b * p_prev);
                p_prev = p_cur;
                p_cur = p;
                put(l, p);
            }
        }
    }
}
