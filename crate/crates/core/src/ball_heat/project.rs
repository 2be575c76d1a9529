//! Projection of data onto the Dirichlet eigenbasis, and Dirichlet evolution.

use crate::error::{KernelError, Result};
use crate::geometry::Point;
use crate::numerics::harmonics::Harmonics;
use crate::numerics::{QuadratureSpec, SphereRule};
use crate::par::map_indexed;
use crate::value::KernelValue;

use super::basis::EigenBasis;
use super::kernels::direction;

/// Coefficients `c_{lmk} = int f phi_{lmk}` at two radial resolutions; index `h * kmax + k - 1`
/// with `h` the harmonic index.
#[derive(Debug, Clone)]
pub struct ModalCoefficients {
    pub harmonics: Harmonics,
    pub kmax: usize,
    pub fine: Vec<f64>,
    pub coarse: Vec<f64>,
    /// `int |f|`, which scales the truncation tail.
    pub l1: f64,
}

struct SphereTable {
    rule: SphereRule,
    /// `ys[j * len + h] = Y_h(u_j)`.
    ys: Vec<f64>,
}

fn sphere_table(basis: &EigenBasis, h: &Harmonics, order: usize) -> Result<SphereTable> {
    let rule = SphereRule::new(basis.n(), order)?;
    let len = h.len();
    let mut ys = vec![0.0; rule.len() * len];
    for (j, u) in rule.nodes.iter().enumerate() {
        h.eval(u, &mut ys[j * len..(j + 1) * len]);
    }
    Ok(SphereTable { rule, ys })
}

/// Sphere order used for projections: the basis' resolving order or the default rule, whichever is larger.
pub fn projection_sphere_order(basis: &EigenBasis) -> usize {
    let default = if basis.n() == 2 { 256 } else { 32 };
    basis.resolving_sphere_order().max(default)
}

fn project_once(
    basis: &EigenBasis,
    table: &SphereTable,
    h: &Harmonics,
    f: &(dyn Fn(&Point) -> f64 + Sync),
    radial_order: usize,
) -> Result<(Vec<f64>, f64)> {
    let rings = basis.rings(radial_order);
    let len = h.len();
    let kmax = basis.kmax();
    let per_ring = map_indexed(basis.execution(), rings.radii.len(), |j| -> Result<(Vec<f64>, f64)> {
        let r = rings.radii[j];
        let mut p = vec![0.0; len];
        let mut mass = 0.0;
        for (q, (u, w)) in table.rule.nodes.iter().zip(&table.rule.weights).enumerate() {
            let v = f(&u.scale(r));
            if !v.is_finite() {
                return Err(KernelError::IntegrandFailure { node: r });
            }
            mass += w * v.abs();
            let wv = w * v;
            for (ph, y) in p.iter_mut().zip(&table.ys[q * len..(q + 1) * len]) {
                *ph += wv * y;
            }
        }
        Ok((p, mass))
    });
    let mut c = vec![0.0; len * kmax];
    let mut l1 = 0.0;
    for (j, ring) in per_ring.into_iter().enumerate() {
        let (p, mass) = ring?;
        let w = rings.weights[j];
        let rt = &rings.tables[j].values;
        l1 += w * mass;
        for (hi, ph) in p.iter().enumerate() {
            let l = h.degree(hi);
            let base = l * kmax;
            for k in 0..kmax {
                c[hi * kmax + k] += w * ph * rt[base + k];
            }
        }
    }
    Ok((c, l1))
}

/// Projects interior data on the basis with `radial_order` rings (and twice that for the refinement).
pub fn project_interior(
    basis: &EigenBasis,
    f: &(dyn Fn(&Point) -> f64 + Sync),
    radial_order: Option<usize>,
) -> Result<ModalCoefficients> {
    let h = Harmonics::new(basis.n(), basis.lmax());
    let table = sphere_table(basis, &h, projection_sphere_order(basis))?;
    let ro = radial_order.unwrap_or_else(|| basis.resolving_radial_order());
    let (coarse, _) = project_once(basis, &table, &h, f, ro)?;
    let (fine, l1) = project_once(basis, &table, &h, f, 2 * ro)?;
    Ok(ModalCoefficients { harmonics: h, kmax: basis.kmax(), fine, coarse, l1 })
}

/// Single-resolution projection, for repeated use inside time integrals.
pub(crate) fn project_fast(basis: &EigenBasis, f: &(dyn Fn(&Point) -> f64 + Sync)) -> Result<Vec<f64>> {
    let h = Harmonics::new(basis.n(), basis.lmax());
    let table = sphere_table(basis, &h, projection_sphere_order(basis))?;
    Ok(project_once(basis, &table, &h, f, basis.resolving_radial_order())?.0)
}

/// `D_lk = sum_m Y_lm(xhat) c_lmk`, the coefficients seen from direction `xhat`.
pub(crate) fn collapse(basis: &EigenBasis, c: &[f64], x: &Point) -> Vec<f64> {
    let h = Harmonics::new(basis.n(), basis.lmax());
    let mut y = vec![0.0; h.len()];
    h.eval(&direction(x), &mut y);
    let kmax = basis.kmax();
    let mut out = vec![0.0; basis.len()];
    for (hi, yh) in y.iter().enumerate() {
        let l = h.degree(hi);
        for k in 0..kmax {
            out[l * kmax + k] += yh * c[hi * kmax + k];
        }
    }
    out
}

/// `sum e^{-lambda t} c_lmk phi_lmk(x)`, the Dirichlet heat flow of the projected data.
pub fn evolve(basis: &EigenBasis, coeffs: &ModalCoefficients, x: &Point, t: f64) -> Result<KernelValue> {
    if !(t >= 0.0) {
        return Err(KernelError::Domain(format!("t must be non-negative, got {t}")));
    }
    if x.is_ball_boundary() {
        return Ok(KernelValue::exact(0.0));
    }
    let rx = basis.radial_all(x.norm());
    let lam = basis.lambdas();
    let sum = |c: &[f64]| -> f64 {
        collapse(basis, c, x)
            .iter()
            .enumerate()
            .map(|(i, d)| (-lam[i] * t).exp() * d * rx.values[i])
            .sum()
    };
    let (fine, coarse) = (sum(&coeffs.fine), sum(&coeffs.coarse));
    let tail = if t > 0.0 { basis.tail(t) * coeffs.l1 } else { f64::INFINITY };
    Ok(KernelValue::new(fine, (fine - coarse).abs() + tail))
}

/// Harmonic coefficients `b_lm = int phi_b Y_lm dsigma` of boundary data.
pub fn project_boundary(n: usize, lmax: usize, f: &dyn Fn(&Point) -> f64, spec: &QuadratureSpec) -> Result<Vec<f64>> {
    let h = Harmonics::new(n, lmax);
    let need = if n == 2 { 2 * lmax + 2 } else { lmax + 2 };
    let rule = SphereRule::new(n, spec.order.max(need))?;
    let mut y = vec![0.0; h.len()];
    let mut b = vec![0.0; h.len()];
    for (u, w) in rule.nodes.iter().zip(&rule.weights) {
        h.eval(u, &mut y);
        let v = w * f(u);
        for (bh, yh) in b.iter_mut().zip(&y) {
            *bh += v * yh;
        }
    }
    Ok(b)
}
