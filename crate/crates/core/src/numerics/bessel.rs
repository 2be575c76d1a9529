//! Bessel functions of integer and half-integer order.
//!
//! Half-integer orders go through the spherical functions,
//! `J_{l+1/2}(x) = sqrt(2x/pi) j_l(x)`.

use super::SpecialValue;
use crate::error::{KernelError, Result};
use std::f64::consts::PI;

const MAX_ARG: f64 = 1e4;
const RESCALE_AT: f64 = 1e250;

/// Which radial Bessel family a ball of dimension `n` needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// `J_l`, used on the disk.
    Cylindrical,
    /// `j_l`, used on the 3-ball.
    Spherical,
}

impl Kind {
    pub fn for_dim(n: usize) -> Self {
        if n == 2 {
            Kind::Cylindrical
        } else {
            Kind::Spherical
        }
    }

    /// Order of the underlying cylinder function, `l + n/2 - 1`.
    pub fn nu(self, l: usize) -> f64 {
        match self {
            Kind::Cylindrical => l as f64,
            Kind::Spherical => l as f64 + 0.5,
        }
    }
}

/// Value and first two derivatives of `Z_l` at one argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Zvals {
    pub z: f64,
    pub dz: f64,
    pub d2z: f64,
}

fn ln_gamma_int(m: usize) -> f64 {
    // ln((m-1)!) for m >= 1
    (1..m).map(|k| (k as f64).ln()).sum()
}

fn ln_double_factorial_odd(l: usize) -> f64 {
    // ln((2l+1)!!)
    (0..=l).map(|k| ((2 * k + 1) as f64).ln()).sum()
}

fn series_cyl(l: usize, x: f64) -> f64 {
    if x == 0.0 {
        return if l == 0 { 1.0 } else { 0.0 };
    }
    let h = 0.5 * x;
    let lead = (l as f64 * h.ln() - ln_gamma_int(l + 1)).exp();
    let q = -h * h;
    let mut term = 1.0;
    let mut sum = 1.0;
    for m in 1..200 {
        term *= q / (m as f64 * (m + l) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    lead * sum
}

fn series_sph(l: usize, x: f64) -> f64 {
    if x == 0.0 {
        return if l == 0 { 1.0 } else { 0.0 };
    }
    let lead = (l as f64 * x.ln() - ln_double_factorial_odd(l)).exp();
    let q = -0.5 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for m in 1..200 {
        term *= q / (m as f64 * (2 * l + 2 * m + 1) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    lead * sum
}

fn use_series(lo: usize, x: f64) -> bool {
    x <= 2.0 || x * x <= 4.0 * (lo as f64 + 1.0)
}

fn start_order(hi: usize, x: f64) -> usize {
    let m = (hi as f64).max(x.ceil());
    let n = (m + 30.0 + (80.0 * m).sqrt()) as usize;
    n + (n % 2)
}

/// Values of `Z_k(x)` for `k = lo..=hi`, with `x > 0` on the Miller branch.
fn window(kind: Kind, lo: usize, hi: usize, x: f64) -> Vec<f64> {
    if use_series(lo, x) {
        return (lo..=hi)
            .map(|k| match kind {
                Kind::Cylindrical => series_cyl(k, x),
                Kind::Spherical => series_sph(k, x),
            })
            .collect();
    }
    let top = start_order(hi, x);
    let mut out = vec![0.0; hi - lo + 1];
    let mut next = 0.0; // Z_{k+1}
    let mut cur = 1e-30; // Z_k
    let mut norm_sum = 0.0;
    let mut k = top;
    let mut z1 = 0.0;
    loop {
        if k >= lo && k <= hi {
            out[k - lo] = cur;
        }
        if kind == Kind::Cylindrical && k % 2 == 0 {
            norm_sum += if k == 0 { cur } else { 2.0 * cur };
        }
        if k == 1 {
            z1 = cur;
        }
        if k == 0 {
            break;
        }
        let coef = match kind {
            Kind::Cylindrical => 2.0 * k as f64 / x,
            Kind::Spherical => (2 * k + 1) as f64 / x,
        };
        let prev = coef * cur - next;
        next = cur;
        cur = prev;
        k -= 1;
        if cur.abs() > RESCALE_AT {
            let s = 1.0 / RESCALE_AT;
            cur *= s;
            next *= s;
            norm_sum *= s;
            z1 *= s;
            for v in out.iter_mut() {
                *v *= s;
            }
        }
    }
    let z0 = cur;
    let scale = match kind {
        Kind::Cylindrical => 1.0 / norm_sum,
        Kind::Spherical => {
            let s0 = x.sin() / x;
            let s1 = x.sin() / (x * x) - x.cos() / x;
            if s0.abs() >= s1.abs() {
                s0 / z0
            } else {
                s1 / z1
            }
        }
    };
    for v in out.iter_mut() {
        *v *= scale;
    }
    out
}

/// `Z_l(x)` for `x >= 0`.
pub fn z(kind: Kind, l: usize, x: f64) -> f64 {
    window(kind, l, l, x)[0]
}

/// `Z_l`, `Z_l'` and `Z_l''` at `x > 0` from the recurrences (no use of the ODE).
pub fn zvals(kind: Kind, l: usize, x: f64) -> Zvals {
    let lo = l.saturating_sub(2);
    let w = window(kind, lo, l + 2, x);
    let at = |k: isize| -> f64 {
        match kind {
            Kind::Cylindrical => {
                let v = w[(k.unsigned_abs()) - lo];
                if k < 0 && k % 2 != 0 {
                    -v
                } else {
                    v
                }
            }
            Kind::Spherical => {
                if k < 0 {
                    0.0
                } else {
                    w[k as usize - lo]
                }
            }
        }
    };
    let li = l as isize;
    match kind {
        Kind::Cylindrical => Zvals {
            z: at(li),
            dz: 0.5 * (at(li - 1) - at(li + 1)),
            d2z: 0.25 * (at(li - 2) - 2.0 * at(li) + at(li + 2)),
        },
        Kind::Spherical => {
            let lf = l as f64;
            let d = |k: isize| -> f64 {
                if k < 0 {
                    return 0.0;
                }
                let kf = k as f64;
                (kf * at(k - 1) - (kf + 1.0) * at(k + 1)) / (2.0 * kf + 1.0)
            };
            Zvals {
                z: at(li),
                dz: d(li),
                d2z: (lf * d(li - 1) - (lf + 1.0) * d(li + 1)) / (2.0 * lf + 1.0),
            }
        }
    }
}

/// `Z_l` and `Z_l'` at `x >= 0`.
pub fn z_and_dz(kind: Kind, l: usize, x: f64) -> (f64, f64) {
    if x == 0.0 {
        let z0 = if l == 0 { 1.0 } else { 0.0 };
        let dz0 = match (kind, l) {
            (Kind::Cylindrical, 1) => 0.5,
            (Kind::Spherical, 1) => 1.0 / 3.0,
            _ => 0.0,
        };
        return (z0, dz0);
    }
    let lo = l.saturating_sub(1);
    let w = window(kind, lo, l + 1, x);
    let zl = w[l - lo];
    let up = w[l + 1 - lo];
    let dz = match kind {
        Kind::Cylindrical => {
            if l == 0 {
                -up
            } else {
                0.5 * (w[0] - up)
            }
        }
        Kind::Spherical => {
            if l == 0 {
                -up
            } else {
                let lf = l as f64;
                (lf * w[0] - (lf + 1.0) * up) / (2.0 * lf + 1.0)
            }
        }
    };
    (zl, dz)
}

pub(crate) fn classify_order(order: f64) -> Result<(Kind, usize)> {
    if !(order >= 0.0) || order > 1e4 {
        return Err(KernelError::UnsupportedOrder(order));
    }
    if order.fract() == 0.0 {
        Ok((Kind::Cylindrical, order as usize))
    } else if (order - 0.5).fract() == 0.0 {
        Ok((Kind::Spherical, (order - 0.5) as usize))
    } else {
        Err(KernelError::UnsupportedOrder(order))
    }
}

/// `J_nu(x)` for integer or half-integer `nu >= 0` and `0 <= x <= 1e4`.
pub fn bessel_j(order: f64, x: f64) -> Result<SpecialValue> {
    let (kind, l) = classify_order(order)?;
    if !(x >= 0.0) || x > MAX_ARG {
        return Err(KernelError::Domain(format!("bessel argument {x} outside [0, 1e4]")));
    }
    let steps = if use_series(l, x) { 40.0 } else { start_order(l, x) as f64 };
    let value = match kind {
        Kind::Cylindrical => z(kind, l, x),
        Kind::Spherical => {
            if x == 0.0 {
                0.0
            } else {
                (2.0 * x / PI).sqrt() * z(kind, l, x)
            }
        }
    };
    let scale = value.abs().max(if x > 1.0 { (2.0 / (PI * x)).sqrt() } else { 1.0 });
    Ok(SpecialValue {
        value,
        abs_error: steps.sqrt() * 4.0 * f64::EPSILON * scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values from an independent arbitrary-precision evaluation.
    const CYL: &[(usize, f64, f64)] = &[
        (0, 1.0, 0.7651976865579666),
        (0, 10.0, -0.24593576445134835),
        (1, 10.0, 0.04347274616886144),
        (5, 3.0, 0.043028434877047585),
        (0, 100.0, 0.019985850304223122),
        (3, 57.3, -0.004459438796062093),
        (40, 30.0, 0.0003612023608896585),
        (20, 100.0, 0.062217458498338755),
        (0, 9999.5, -0.004478727403128425),
    ];

    #[test]
    fn cylindrical_reference_values() {
        for &(l, x, want) in CYL {
            let got = bessel_j(l as f64, x).unwrap().value;
            assert!((got - want).abs() < 1e-13, "J_{l}({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn spherical_closed_forms() {
        for &x in &[0.3f64, 1.7, 2.5, 8.0, 45.0, 310.0] {
            let j0 = x.sin() / x;
            let j1 = x.sin() / (x * x) - x.cos() / x;
            let j2 = (3.0 / (x * x) - 1.0) * x.sin() / x - 3.0 * x.cos() / (x * x);
            assert!((z(Kind::Spherical, 0, x) - j0).abs() < 1e-14);
            assert!((z(Kind::Spherical, 1, x) - j1).abs() < 1e-14);
            assert!((z(Kind::Spherical, 2, x) - j2).abs() < 1e-13);
        }
    }

    #[test]
    fn trivial_examples() {
        assert_eq!(bessel_j(0.0, 0.0).unwrap().value, 1.0);
        assert_eq!(bessel_j(1.0, 0.0).unwrap().value, 0.0);
        assert!(bessel_j(0.0, 2.404825557695773).unwrap().value.abs() < 1e-10);
        assert!(matches!(bessel_j(0.3, 1.0), Err(KernelError::UnsupportedOrder(_))));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for kind in [Kind::Cylindrical, Kind::Spherical] {
            for l in [0, 1, 2, 7] {
                for &x in &[0.7, 3.3, 12.0] {
                    let h = 1e-4;
                    let v = zvals(kind, l, x);
                    let fd1 = (z(kind, l, x + h) - z(kind, l, x - h)) / (2.0 * h);
                    let fd2 = (z(kind, l, x + h) - 2.0 * z(kind, l, x) + z(kind, l, x - h)) / (h * h);
                    assert!((v.dz - fd1).abs() < 1e-8, "{kind:?} {l} {x}");
                    assert!((v.d2z - fd2).abs() < 1e-5, "{kind:?} {l} {x}");
                    let (z0, dz) = z_and_dz(kind, l, x);
                    assert_eq!(z0, v.z);
                    assert!((dz - v.dz).abs() < 1e-15);
                }
            }
        }
    }
}
