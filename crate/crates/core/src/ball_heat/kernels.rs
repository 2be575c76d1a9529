//! Heat kernel `Gamma_1` and its boundary kernels `E_1`, `F_1`, `H_1`.

use crate::ball_laplace::{harmonic_extension_fn, poisson_raw};
use crate::error::{KernelError, Result};
use crate::geometry::{check_dims, require_ball_boundary, require_in_ball, Point};
use crate::numerics::harmonics::pair_factors;
use crate::numerics::{QuadratureSpec, SphereRule};
use crate::par::map_indexed;
use crate::value::{BoundaryFunction, KernelValue};

use super::basis::EigenBasis;

/// `Gamma_1(x, y, t) = sum e^{-lambda t} phi(x) phi(y)`; the tail bound is the error.
pub fn gamma1(basis: &EigenBasis, x: &Point, y: &Point, t: f64) -> Result<KernelValue> {
    check_dims(x, y)?;
    same_dim(basis, x)?;
    require_in_ball(x)?;
    require_in_ball(y)?;
    basis.check_t(t)?;
    if x.is_ball_boundary() || y.is_ball_boundary() {
        return Ok(KernelValue::exact(0.0));
    }
    let rx = basis.radial_all(x.norm());
    let ry = basis.radial_all(y.norm());
    let a = basis.angular(x.cos_angle(y));
    let kmax = basis.kmax();
    let lam = basis.lambdas();
    let mut total = 0.0;
    for (l, al) in a.iter().enumerate() {
        let mut s = 0.0;
        for k in 1..=kmax {
            let i = l * kmax + k - 1;
            s += (-lam[i] * t).exp() * (rx.values[i] * ry.values[i]);
        }
        total += al * s;
    }
    Ok(KernelValue::new(total, basis.tail(t)))
}

pub(crate) fn same_dim(basis: &EigenBasis, x: &Point) -> Result<()> {
    if x.dim() != basis.n() {
        return Err(KernelError::InvalidParameter(format!(
            "point has dimension {} but the basis has {}",
            x.dim(),
            basis.n()
        )));
    }
    Ok(())
}

/// Unit direction of `x`, or the first axis at the origin (every `l > 0` term vanishes there).
pub(crate) fn direction(x: &Point) -> Point {
    x.unit().unwrap_or_else(|| Point::axis(x.dim(), 0, 1.0))
}

/// A kernel `y -> P_1(z, y) + sum_l a_l A_l(xhat . y)` on the sphere for fixed `(x, t)`.
#[derive(Debug, Clone)]
pub struct BoundaryProfile {
    pub n: usize,
    pub dir: Point,
    pub poisson_at: Option<Point>,
    /// The Poisson part is a unit point mass at `dir` (source on the sphere).
    pub point_mass: bool,
    pub coef: Vec<f64>,
    pub error: f64,
}

impl BoundaryProfile {
    /// Value at a boundary point `y`.
    pub fn eval(&self, y: &Point) -> Result<KernelValue> {
        require_ball_boundary(y)?;
        let a = {
            let mut out = vec![0.0; self.coef.len()];
            pair_factors(self.n, self.dir.cos_angle(y).clamp(-1.0, 1.0), &mut out);
            out
        };
        let mut v: f64 = a.iter().zip(&self.coef).map(|(a, c)| a * c).sum();
        if let Some(z) = &self.poisson_at {
            if z.dist_sq(y) == 0.0 {
                return Err(KernelError::Singularity("source coincides with y".into()));
            }
            v += poisson_raw(self.n, z, y);
        }
        Ok(KernelValue::new(v, self.error))
    }

    /// `int profile(y) phi_b(y) dsigma_y`.
    pub fn integrate(&self, phi_b: &BoundaryFunction, spec: &QuadratureSpec) -> Result<KernelValue> {
        self.integrate_fn(&|y: &Point| phi_b.eval(y), spec)
    }

    /// [`Self::integrate`] of a borrowed closure.
    pub fn integrate_fn(&self, phi_b: &dyn Fn(&Point) -> f64, spec: &QuadratureSpec) -> Result<KernelValue> {
        let (mut value, mut error) = (0.0, self.error);
        if self.point_mass {
            value += phi_b(&self.dir);
        } else if let Some(z) = &self.poisson_at {
            let h = harmonic_extension_fn(phi_b, z, spec)?;
            value += h.value;
            error += h.error;
        }
        let g = angular_moments(self.n, &self.dir, self.coef.len() - 1, phi_b, spec)?;
        for (c, gl) in self.coef.iter().zip(&g) {
            value += c * gl.value;
            error += (c * gl.error).abs();
        }
        Ok(KernelValue::new(value, error))
    }
}

/// `g_l = int A_l(u . y) phi_b(y) dsigma_y` for `l <= lmax`, one sweep per rule.
pub fn angular_moments(
    n: usize,
    u: &Point,
    lmax: usize,
    phi_b: &dyn Fn(&Point) -> f64,
    spec: &QuadratureSpec,
) -> Result<Vec<KernelValue>> {
    spec.validate()?;
    let need = if n == 2 { 2 * lmax + 2 } else { lmax + 2 };
    let order = spec.order.max(need);
    let run = |order: usize| -> Result<Vec<f64>> {
        let rule = SphereRule::new(n, order)?;
        let mut a = vec![0.0; lmax + 1];
        let mut acc = vec![0.0; lmax + 1];
        for (y, w) in rule.nodes.iter().zip(&rule.weights) {
            let f = phi_b(y);
            if !f.is_finite() {
                return Err(KernelError::IntegrandFailure { node: y.get(0) });
            }
            pair_factors(n, u.dot(y).clamp(-1.0, 1.0), &mut a);
            for (s, al) in acc.iter_mut().zip(&a) {
                *s += w * al * f;
            }
        }
        Ok(acc)
    };
    let coarse = run(order)?;
    let fine = run(2 * order)?;
    Ok(fine.iter().zip(&coarse).map(|(f, c)| KernelValue::new(*f, (f - c).abs())).collect())
}

fn per_degree(basis: &EigenBasis, mut term: impl FnMut(usize) -> f64) -> Vec<f64> {
    let kmax = basis.kmax();
    (0..=basis.lmax()).map(|l| (1..=kmax).map(|k| term(l * kmax + k - 1)).sum()).collect()
}

fn check_boundary_kernel(basis: &EigenBasis, x: &Point, t: f64) -> Result<()> {
    same_dim(basis, x)?;
    require_in_ball(x)?;
    basis.check_t(t)
}

/// `E_1(x, ., t) = -d_nu_y Gamma_1(x, ., t)` as a boundary profile.
pub fn e1_profile(basis: &EigenBasis, x: &Point, t: f64) -> Result<BoundaryProfile> {
    check_boundary_kernel(basis, x, t)?;
    let rx = basis.radial_all(x.norm());
    let (lam, flux) = (basis.lambdas(), basis.fluxes());
    let coef = per_degree(basis, |i| (-lam[i] * t).exp() * rx.values[i] * flux[i]);
    Ok(BoundaryProfile {
        n: basis.n(),
        dir: direction(x),
        poisson_at: None,
        point_mass: false,
        coef,
        error: basis.flux_tail(t),
    })
}

/// `E_1(x, y, t)`.
pub fn e1(basis: &EigenBasis, x: &Point, y: &Point, t: f64) -> Result<KernelValue> {
    e1_profile(basis, x, t)?.eval(y)
}

/// `F_1(x, ., t) = int_0^t E_1(x, ., s) ds = P_1(x, .) - sum e^{-lambda t} phi(x) (-d_nu phi) / lambda`.
pub fn f1_profile(basis: &EigenBasis, x: &Point, t: f64) -> Result<BoundaryProfile> {
    check_boundary_kernel(basis, x, t)?;
    let n = basis.n();
    if x.is_ball_boundary() {
        return Ok(BoundaryProfile {
            n,
            dir: direction(x),
            poisson_at: None,
            point_mass: true,
            coef: vec![0.0; basis.lmax() + 1],
            error: 0.0,
        });
    }
    let rx = basis.radial_all(x.norm());
    let (lam, flux) = (basis.lambdas(), basis.fluxes());
    let coef = per_degree(basis, |i| -(-lam[i] * t).exp() * rx.values[i] * flux[i] / lam[i]);
    Ok(BoundaryProfile {
        n,
        dir: direction(x),
        poisson_at: Some(*x),
        point_mass: false,
        coef,
        error: basis.flux_tail(t) / basis.lambda_cut(),
    })
}

/// `F_1(x, y, t)`.
pub fn f1(basis: &EigenBasis, x: &Point, y: &Point, t: f64) -> Result<KernelValue> {
    f1_profile(basis, x, t)?.eval(y)
}

/// For every mode, `int_0^t e^{-lambda (t - s)} g(s) ds` on the graded rule and its
/// order-doubled refinement. Returns the refined values and the per-mode differences.
pub(crate) fn mode_convolution<G>(basis: &EigenBasis, t: f64, spec: &QuadratureSpec, g: G) -> Result<(Vec<f64>, Vec<f64>)>
where
    G: Fn(f64) -> Vec<f64> + Sync + Send,
{
    spec.validate()?;
    let lam = basis.lambdas();
    let run = |s: &QuadratureSpec| -> Result<Vec<f64>> {
        let rule = s.rule(0.0, t);
        let vals = map_indexed(basis.execution(), rule.nodes.len(), |j| g(rule.nodes[j]));
        let mut acc = vec![0.0; basis.len()];
        for ((s, w), v) in rule.nodes.iter().zip(&rule.weights).zip(&vals) {
            for (i, a) in acc.iter_mut().enumerate() {
                let term = w * (-lam[i] * (t - s)).exp() * v[i];
                if !term.is_finite() {
                    return Err(KernelError::IntegrandFailure { node: *s });
                }
                *a += term;
            }
        }
        Ok(acc)
    };
    let coarse = run(spec)?;
    let fine = run(&spec.doubled())?;
    let err = coarse.iter().zip(&fine).map(|(a, b)| (a - b).abs()).collect();
    Ok((fine, err))
}

/// Default time rule for convolutions singular at `s = t`.
pub fn default_time_spec() -> QuadratureSpec {
    QuadratureSpec::graded_to_end(8)
}

/// `H_1(x, ., t) = int_0^t E_1(x e^{-s}, ., t - s) ds` as a boundary profile.
///
/// With `rho = |x| e^{-t}` the integrand is split as `R(|x| e^{-s}) = R(rho) + (R(|x| e^{-s}) - R(rho))`;
/// the first part sums to `P_1(x e^{-t}, .)` minus an exponentially small series and
/// the second is integrated on the graded rule.
pub fn h1_profile(basis: &EigenBasis, x: &Point, t: f64, spec: &QuadratureSpec) -> Result<BoundaryProfile> {
    check_boundary_kernel(basis, x, t)?;
    let r = x.norm();
    let rho = r * (-t).exp();
    let r_end = basis.radial_all(rho);
    let (lam, flux) = (basis.lambdas(), basis.fluxes());
    let (conv, err) = if r == 0.0 {
        (vec![0.0; basis.len()], vec![0.0; basis.len()])
    } else {
        mode_convolution(basis, t, spec, |s| {
            let rs = basis.radial_all(r * (-s).exp());
            rs.values.iter().zip(&r_end.values).map(|(a, b)| a - b).collect()
        })?
    };
    let coef = per_degree(basis, |i| flux[i] * (conv[i] - (-lam[i] * t).exp() * r_end.values[i] / lam[i]));
    let amax = basis.angular(1.0);
    let kmax = basis.kmax();
    let quad: f64 = (0..basis.len()).map(|i| (flux[i] * err[i]).abs() * amax[i / kmax]).sum();
    Ok(BoundaryProfile {
        n: basis.n(),
        dir: direction(x),
        poisson_at: Some(x.scale((-t).exp())),
        point_mass: false,
        coef,
        error: quad + basis.flux_tail(t) / basis.lambda_cut(),
    })
}

/// `H_1(x, y, t)`.
pub fn h1(basis: &EigenBasis, x: &Point, y: &Point, t: f64, spec: &QuadratureSpec) -> Result<KernelValue> {
    require_ball_boundary(y)?;
    h1_profile(basis, x, t, spec)?.eval(y)
}

/// Envelope `h(x, y, t)` of the two-sided heat kernel estimate.
pub fn bound_h(x: &Point, y: &Point, t: f64) -> f64 {
    let (dx, dy) = (1.0 - x.norm(), 1.0 - y.norm());
    let d2 = x.dist_sq(y);
    (dx * dy / t).min(1.0) + (dx * d2 / t).min(1.0) * (dy * d2 / t).min(1.0)
}

/// Envelope `l(x, y, t)` of the flux kernel estimate.
pub fn bound_l(x: &Point, y: &Point, t: f64) -> f64 {
    let dx = 1.0 - x.norm();
    let d2 = x.dist_sq(y);
    dx / t + (d2 / t) * (dx * d2 / t).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ball_heat::basis::Truncation;
    use crate::numerics::QuadratureSpec;
    use std::sync::OnceLock;

    fn basis2() -> &'static EigenBasis {
        static B: OnceLock<EigenBasis> = OnceLock::new();
        B.get_or_init(|| EigenBasis::new(2, Truncation::default()).unwrap())
    }

    fn basis3() -> &'static EigenBasis {
        static B: OnceLock<EigenBasis> = OnceLock::new();
        B.get_or_init(|| EigenBasis::new(3, Truncation { lmax: 20, kmax: 30 }).unwrap())
    }

    fn radial_moment(b: &EigenBasis, k: usize) -> f64 {
        let n = b.n() as i32;
        QuadratureSpec::gauss(200).rule(0.0, 1.0).apply(|r| b.radial(0, k, r) * r.powi(n - 1))
    }

    #[test]
    fn gamma1_symmetric_and_vanishing() {
        let b = basis2();
        let pts = [Point::d2(0.1, 0.2), Point::d2(-0.5, 0.3), Point::d2(0.0, -0.9), Point::d2(0.7, 0.0)];
        for x in &pts {
            for y in &pts {
                let a = gamma1(b, x, y, 0.1).unwrap().value;
                let c = gamma1(b, y, x, 0.1).unwrap().value;
                assert_eq!(a.to_bits(), c.to_bits());
            }
            assert_eq!(gamma1(b, x, &Point::d2(0.6, 0.8), 0.1).unwrap().value, 0.0);
        }
        let b3 = basis3();
        let (x, y) = (Point::d3(0.1, 0.2, 0.3), Point::d3(-0.3, 0.0, 0.5));
        assert_eq!(gamma1(b3, &x, &y, 0.2).unwrap().value.to_bits(), gamma1(b3, &y, &x, 0.2).unwrap().value.to_bits());
    }

    #[test]
    fn gamma1_refuses_small_t() {
        let b = basis2();
        let e = gamma1(b, &Point::d2(0.1, 0.0), &Point::d2(0.0, 0.1), 0.001).unwrap_err();
        assert_eq!(e.code(), "TRUNCATION_INSUFFICIENT");
    }

    #[test]
    fn gamma1_large_time_rate() {
        let b = basis2();
        let (x, y) = (Point::d2(0.2, 0.1), Point::d2(-0.3, 0.2));
        let g2 = gamma1(b, &x, &y, 2.0).unwrap().value;
        let g3 = gamma1(b, &x, &y, 3.0).unwrap().value;
        let lam1 = b.pairs()[0].lambda;
        assert!(((g3.ln() - g2.ln()) + lam1).abs() < 1e-6);
    }

    #[test]
    fn gamma1_pde_residual_converges() {
        let b = basis2();
        let y = Point::d2(0.1, -0.2);
        let (x, t) = (Point::d2(0.3, 0.1), 0.1);
        let g = |p: Point, s: f64| gamma1(b, &p, &y, s).unwrap().value;
        let res: Vec<f64> = [0.02, 0.01, 0.005]
            .iter()
            .map(|&h| {
                let dt = (g(x, t + h) - g(x, t - h)) / (2.0 * h);
                let lap = (g(x.with(0, 0.3 + h), t) + g(x.with(0, 0.3 - h), t) + g(x.with(1, 0.1 + h), t)
                    + g(x.with(1, 0.1 - h), t)
                    - 4.0 * g(x, t))
                    / (h * h);
                (dt - lap).abs()
            })
            .collect();
        assert!((res[1] / res[2]).log2() > 1.8, "{res:?}");
    }

    #[test]
    fn e1_flux_balance() {
        for b in [basis2(), basis3()] {
            let n = b.n();
            let x = Point::axis(n, 0, 0.4);
            let t = 0.1;
            let surf = e1_profile(b, &x, t).unwrap().integrate(&BoundaryFunction::constant(1.0), &QuadratureSpec::gauss(64)).unwrap();
            let mut d_vol = 0.0;
            for k in 1..=b.kmax() {
                let i = b.index(0, k);
                d_vol -= b.lambdas()[i] * (-b.lambdas()[i] * t).exp() * b.radial(0, k, 0.4) * radial_moment(b, k);
            }
            assert!((surf.value + d_vol).abs() < 1e-6, "n={n} {} {d_vol}", surf.value);
        }
    }

    #[test]
    fn e1_nonnegative_on_grid() {
        let b = basis2();
        for r in [0.0, 0.3, 0.6, 0.9, 0.99] {
            let p = e1_profile(b, &Point::d2(r, 0.0), 0.05).unwrap();
            for j in 0..16 {
                let a = j as f64 * std::f64::consts::PI / 8.0;
                assert!(p.eval(&Point::d2(a.cos(), a.sin())).unwrap().value >= -1e-8);
            }
        }
    }

    #[test]
    fn e1_concentrates() {
        // normalized flux measure from x = (1 - t) target concentrates at target
        let b = basis2();
        let target = Point::d2(1.0, 0.0);
        let test = BoundaryFunction::smooth(|y| (y.get(0) + 0.5 * y.get(1)).exp());
        let spec = QuadratureSpec::gauss(256);
        let mut last = f64::INFINITY;
        for t in [0.2, 0.1, 0.05, 0.025] {
            let p = e1_profile(b, &target.scale(1.0 - t), t).unwrap();
            let num = p.integrate(&test, &spec).unwrap().value;
            let den = p.integrate(&BoundaryFunction::constant(1.0), &spec).unwrap().value;
            let gap = (num / den - test.eval(&target)).abs();
            // tangential spread of the exit point has variance O(t)
            assert!(gap < last, "{t} {gap}");
            last = gap;
        }
        assert!(last < 4.0 * 0.025, "{last}");
    }

    #[test]
    fn f1_mass_identity() {
        let b = basis2();
        let (x, t) = (Point::d2(0.3, 0.0), 0.5);
        let surf = f1_profile(b, &x, t).unwrap().integrate(&BoundaryFunction::constant(1.0), &QuadratureSpec::gauss(256)).unwrap();
        let vol: f64 = (1..=b.kmax())
            .map(|k| (-b.lambdas()[b.index(0, k)] * t).exp() * b.radial(0, k, 0.3) * radial_moment(b, k))
            .sum();
        assert!((surf.value + vol - 1.0).abs() < 1e-4);
    }

    #[test]
    fn f1_matches_quadrature_of_e1() {
        let b = basis2();
        let (x, y) = (Point::d2(0.5, 0.2), Point::d2(0.0, 1.0));
        let (t1, t2) = (0.05, 0.4);
        let q = crate::numerics::integrate_interval(|s| e1(b, &x, &y, s).unwrap().value, t1, t2, &QuadratureSpec::gauss(24)).unwrap();
        let d = f1(b, &x, &y, t2).unwrap().value - f1(b, &x, &y, t1).unwrap().value;
        assert!((q.value - d).abs() < 1e-8, "{} {d}", q.value);
    }

    #[test]
    fn f1_small_time() {
        let b = basis2();
        let (x, y) = (Point::d2(0.3, 0.0), Point::d2(0.0, -1.0));
        let mut last = f64::INFINITY;
        for t in [0.2, 0.1, 0.05, 0.02] {
            let v = f1(b, &x, &y, t).unwrap().value;
            assert!(v < last);
            last = v;
        }
        assert!(last < 1e-2);
    }

    #[test]
    fn h1_origin_equals_f1() {
        let b = basis2();
        let y = Point::d2(0.6, 0.8);
        let o = Point::origin(2);
        let a = h1(b, &o, &y, 0.3, &default_time_spec()).unwrap();
        let c = f1(b, &o, &y, 0.3).unwrap();
        assert!((a.value - c.value).abs() < 1e-12);
    }

    #[test]
    fn h1_matches_direct_quadrature() {
        let b = basis2();
        let (x, y, t) = (Point::d2(0.5, 0.3), Point::d2(0.0, 1.0), 0.4);
        let got = h1(b, &x, &y, t, &default_time_spec()).unwrap();
        // direct rule kept away from the s = t end where e1 needs s >= t_min
        let direct = crate::numerics::integrate_interval(
            |s| e1(b, &x.scale((-s).exp()), &y, t - s).unwrap().value,
            0.0,
            t - 0.05,
            &QuadratureSpec::gauss(24),
        )
        .unwrap()
        .value;
        let rest = crate::numerics::integrate_interval(
            |s| e1(b, &x.scale((-s).exp()), &y, t - s).unwrap().value,
            t - 0.05,
            t - b.t_min(),
            &QuadratureSpec::gauss(24),
        )
        .unwrap()
        .value;
        // the last t_min of the path only sees the Poisson part (x e^{-s} is interior)
        assert!((got.value - direct - rest).abs() < 1e-3, "{} {}", got.value, direct + rest);
    }

    #[test]
    fn h1_small_time() {
        let b = basis2();
        let spec = default_time_spec();
        let (x, y) = (Point::d2(0.3, 0.0), Point::d2(0.0, -1.0));
        let v = h1(b, &x, &y, 0.02, &spec).unwrap().value;
        assert!(v.abs() < 1e-2);
        let xb = Point::d2(0.6, 0.8);
        let phi = BoundaryFunction::smooth(|y| 1.0 + y.get(0) * y.get(1));
        let mut last = f64::INFINITY;
        for t in [0.2, 0.1, 0.05, 0.025] {
            let u = h1_profile(b, &xb, t, &spec).unwrap().integrate(&phi, &QuadratureSpec::gauss(256)).unwrap();
            let gap = (u.value - phi.eval(&xb)).abs();
            // O(sqrt t), like the exit-time deficit of the flat problem
            assert!(gap < last && gap < 1.5 * t.sqrt(), "{t} {gap}");
            last = gap;
        }
    }

    #[test]
    fn bounds() {
        let o = Point::origin(2);
        assert_eq!(bound_h(&o, &o, 2.0), 0.5);
        assert_eq!(bound_h(&o, &o, 0.5), 1.0);
        let near = Point::d2(1.0 - 1e-9, 0.0);
        assert!(bound_h(&near, &near, 0.5) < 1e-8);
        assert_eq!(bound_l(&o, &Point::d2(0.0, 1.0), 1.0), 2.0);
        let y = Point::d2(1.0, 0.0);
        assert!(bound_l(&near, &y, 0.3) < 1e-8);
        let x = Point::d2(0.3, 0.2);
        assert!(bound_l(&x, &y, 0.6) < bound_l(&x, &y, 0.3));
    }
}
