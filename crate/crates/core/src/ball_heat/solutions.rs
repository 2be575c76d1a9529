//! Representation formulas built from `Gamma_1`, `E_1` and `F_1`.

use serde::Serialize;

use crate::ball_laplace::{default_sphere_spec, green_potential};
use crate::error::Result;
use crate::geometry::{require_in_ball, Point};
use crate::halfspace::heat_kernel_free;
use crate::numerics::harmonics::pair_factors;
use crate::numerics::{QuadratureSpec, SphereRule};
use crate::value::{BoundaryFunction, InteriorFunction, KernelValue, SpaceTimeFunction};

use super::basis::EigenBasis;
use super::kernels::{direction, f1_profile, mode_convolution, same_dim};
use super::project::{collapse, evolve, project_fast, project_interior};

/// `int_0^t int E_1(x, z, t - s) f(z, s) dsigma_z ds`.
///
/// With `g_l(s) = int A_l(xhat . z) f(z, s) dsigma_z` this is
/// `int F_1(x, z, t) f(z, t) dsigma_z + sum R(|x|) (-R'(1)) int e^{-lambda (t-s)} (g_l(s) - g_l(t)) ds`.
pub fn boundary_convolution(
    basis: &EigenBasis,
    x: &Point,
    t: f64,
    time_spec: &QuadratureSpec,
    sphere_spec: &QuadratureSpec,
    f: &(dyn Fn(&Point, f64) -> f64 + Sync),
) -> Result<KernelValue> {
    let n = basis.n();
    let lmax = basis.lmax();
    let at_t = |z: &Point| f(z, t);
    let frozen = f1_profile(basis, x, t)?.integrate_fn(&at_t, sphere_spec)?;
    if x.is_ball_boundary() {
        return Ok(frozen);
    }
    let need = if n == 2 { 2 * lmax + 2 } else { lmax + 2 };
    let rule = SphereRule::new(n, sphere_spec.order.max(need))?;
    let u = direction(x);
    let mut a = vec![0.0; (lmax + 1) * rule.len()];
    for (j, z) in rule.nodes.iter().enumerate() {
        pair_factors(n, u.dot(z).clamp(-1.0, 1.0), &mut a[j * (lmax + 1)..(j + 1) * (lmax + 1)]);
    }
    let moments = |s: f64| -> Vec<f64> {
        let mut g = vec![0.0; lmax + 1];
        for (j, (z, w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
            let v = w * f(z, s);
            for (gl, al) in g.iter_mut().zip(&a[j * (lmax + 1)..(j + 1) * (lmax + 1)]) {
                *gl += v * al;
            }
        }
        g
    };
    let g_t = moments(t);
    let kmax = basis.kmax();
    let (conv, err) = mode_convolution(basis, t, time_spec, |s| {
        let g = moments(s);
        (0..basis.len()).map(|i| g[i / kmax] - g_t[i / kmax]).collect()
    })?;
    let rx = basis.radial_all(x.norm());
    let flux = basis.fluxes();
    let mut value = frozen.value;
    let mut error = frozen.error;
    for i in 0..basis.len() {
        value += rx.values[i] * flux[i] * conv[i];
        error += (rx.values[i] * flux[i] * err[i]).abs();
    }
    Ok(KernelValue::new(value, error))
}

/// `int Gamma_1(x, y, t) phi(y) dy`.
pub fn dirichlet_evolution(basis: &EigenBasis, phi: &InteriorFunction, x: &Point, t: f64) -> Result<KernelValue> {
    same_dim(basis, x)?;
    require_in_ball(x)?;
    basis.check_t(t)?;
    let f = |p: &Point| phi.eval(p);
    let c = project_interior(basis, &f, None)?;
    evolve(basis, &c, x, t)
}

/// `int F_1 phi_b dsigma + int Gamma_1 phi_i dy`, the solution whose boundary values are frozen at `phi_b`.
pub fn dirichlet_dynamical_flat_solution(
    basis: &EigenBasis,
    phi_b: &BoundaryFunction,
    phi_i: &InteriorFunction,
    x: &Point,
    t: f64,
    spec: &QuadratureSpec,
) -> Result<KernelValue> {
    same_dim(basis, x)?;
    let b = f1_profile(basis, x, t)?.integrate(phi_b, spec)?;
    let i = dirichlet_evolution(basis, phi_i, x, t)?;
    Ok(KernelValue::new(b.value + i.value, b.error + i.error))
}

/// The three terms of the decomposition of a space-time function.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Decomposition {
    pub initial: KernelValue,
    pub boundary: KernelValue,
    pub volume: KernelValue,
}

impl Decomposition {
    pub fn total(&self) -> KernelValue {
        KernelValue::new(
            self.initial.value + self.boundary.value + self.volume.value,
            self.initial.error + self.boundary.error + self.volume.error,
        )
    }
}

/// `int Gamma_1 f(., 0) + int int E_1 f + int int Gamma_1 (d_t - Delta) f`.
pub fn decompose(basis: &EigenBasis, f: &SpaceTimeFunction, x: &Point, t: f64, spec: &QuadratureSpec) -> Result<Decomposition> {
    same_dim(basis, x)?;
    require_in_ball(x)?;
    basis.check_t(t)?;
    let n = basis.n();
    let f0 = |p: &Point| f.eval(p, 0.0);
    let initial = evolve(basis, &project_interior(basis, &f0, None)?, x, t)?;
    let fb = |z: &Point, s: f64| f.eval(z, s);
    let boundary = boundary_convolution(basis, x, t, spec, &default_sphere_spec(n), &fb)?;
    let volume = match &f.defect {
        None => KernelValue::exact(0.0),
        Some(d) => volume_term(basis, d.as_ref(), x, t)?,
    };
    Ok(Decomposition { initial, boundary, volume })
}

/// Sum of the three decomposition terms; the caller compares it with `f(x, t)`.
pub fn decompose_reconstruct(
    basis: &EigenBasis,
    f: &SpaceTimeFunction,
    x: &Point,
    t: f64,
    spec: &QuadratureSpec,
) -> Result<KernelValue> {
    Ok(decompose(basis, f, x, t, spec)?.total())
}

// int_0^t int Gamma_1(x, y, t - s) D(y, s) dy ds, written as
// int G_1(x, y) D(y, t) dy - sum e^{-lambda t} phi(x) d(t) / lambda + sum phi(x) int e^{-lambda (t-s)} (d(s) - d(t)) ds.
fn volume_term(basis: &EigenBasis, d: &(dyn Fn(&Point, f64) -> f64 + Send + Sync), x: &Point, t: f64) -> Result<KernelValue> {
    let dt = |p: &Point| d(p, t);
    let pot = green_potential(&dt, x, &QuadratureSpec::gauss(basis.resolving_radial_order()))?;
    let d_t = collapse(basis, &project_fast(basis, &dt)?, x);
    let (conv, err) = mode_convolution(basis, t, &QuadratureSpec::gauss(16), |s| {
        let ds = |p: &Point| d(p, s);
        match project_fast(basis, &ds) {
            Ok(c) => collapse(basis, &c, x).iter().zip(&d_t).map(|(a, b)| a - b).collect(),
            Err(_) => vec![f64::NAN; basis.len()],
        }
    })?;
    let rx = basis.radial_all(x.norm());
    let lam = basis.lambdas();
    let mut value = pot.value;
    let mut error = pot.error;
    for i in 0..basis.len() {
        value += rx.values[i] * (conv[i] - (-lam[i] * t).exp() * d_t[i] / lam[i]);
        error += (rx.values[i] * err[i]).abs();
    }
    Ok(KernelValue::new(value, error))
}

/// The corrector `phi_1^y(x, t) = int_0^t int E_1(x, z, t - s) Gamma(z, y, s) dsigma_z ds`,
/// so that `Gamma_1 = Gamma - phi_1^y`.
pub fn corrector_phi1(basis: &EigenBasis, x: &Point, y: &Point, t: f64, spec: &QuadratureSpec) -> Result<KernelValue> {
    same_dim(basis, x)?;
    same_dim(basis, y)?;
    require_in_ball(x)?;
    require_in_ball(y)?;
    basis.check_t(t)?;
    let n = basis.n();
    let heat = |z: &Point, s: f64| if s > 0.0 { heat_kernel_free(z, y, s).unwrap_or(0.0) } else { 0.0 };
    boundary_convolution(basis, x, t, spec, &default_sphere_spec(n), &heat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ball_heat::basis::Truncation;
    use crate::ball_heat::kernels::{default_time_spec, gamma1};
    use std::sync::OnceLock;

    fn basis2() -> &'static EigenBasis {
        static B: OnceLock<EigenBasis> = OnceLock::new();
        B.get_or_init(|| EigenBasis::new(2, Truncation::default()).unwrap())
    }

    #[test]
    fn flat_solution_constants() {
        let b = basis2();
        let spec = default_sphere_spec(2);
        let one_b = BoundaryFunction::constant(1.0);
        let one_i = InteriorFunction::constant(1.0);
        for (x, t) in [(Point::d2(0.3, 0.1), 0.05), (Point::d2(-0.8, 0.1), 0.5), (Point::d2(0.6, 0.8), 0.2)] {
            let u = dirichlet_dynamical_flat_solution(b, &one_b, &one_i, &x, t, &spec).unwrap();
            assert!((u.value - 1.0).abs() < 1e-6, "{x:?} {t} {u:?}");
        }
    }

    #[test]
    fn flat_solution_decays_and_starts_at_data() {
        let b = basis2();
        let spec = default_sphere_spec(2);
        let zero = BoundaryFunction::constant(0.0);
        let bump = crate::value::bump(0.6);
        let x = Point::d2(0.1, 0.05);
        let late = dirichlet_dynamical_flat_solution(b, &zero, &bump, &x, 5.0, &spec).unwrap();
        assert!(late.value.abs() < 1e-10);
        // 1 - |x|^2 has Laplacian -4, so u = phi - 4t until the boundary is felt
        let para = InteriorFunction::with_laplacian(|p| 1.0 - p.norm_sq(), |_| -4.0);
        let t = b.t_min();
        let early = dirichlet_dynamical_flat_solution(b, &zero, &para, &x, t, &spec).unwrap();
        assert!((early.value - (para.eval(&x) - 4.0 * t)).abs() < 1e-4, "{early:?}");
    }

    #[test]
    fn reconstruct_caloric_polynomial() {
        // x1^2 + 2t is caloric in two dimensions
        let b = basis2();
        let f = SpaceTimeFunction::caloric(|p, s| p.get(0).powi(2) + 2.0 * s);
        let (x, t) = (Point::d2(0.3, 0.0), 0.5);
        let r = decompose_reconstruct(b, &f, &x, t, &default_time_spec()).unwrap();
        assert!((r.value - (0.09 + 1.0)).abs() < 1e-3, "{r:?}");
    }

    #[test]
    fn reconstruct_constant_and_mode() {
        let b = basis2();
        let one = SpaceTimeFunction::caloric(|_, _| 1.0);
        let x = Point::d2(-0.2, 0.4);
        let d = decompose(b, &one, &x, 0.3, &default_time_spec()).unwrap();
        assert!((d.total().value - 1.0).abs() < 1e-6);
        assert_eq!(d.volume.value, 0.0);
        let bb = b.clone();
        let lam1 = b.pairs()[0].lambda;
        let mode = SpaceTimeFunction::caloric(move |p, s| {
            (-lam1 * s).exp() * bb.radial(0, 1, p.norm()) / (2.0 * std::f64::consts::PI).sqrt()
        });
        let d = decompose(b, &mode, &x, 0.3, &default_time_spec()).unwrap();
        let want = mode.eval(&x, 0.3);
        assert!(d.boundary.value.abs() < 1e-8);
        assert!((d.total().value - want).abs() < 1e-8, "{d:?} {want}");
    }

    #[test]
    fn reconstruct_with_defect() {
        // f = t: defect 1, initial value 0, boundary values t
        let b = basis2();
        let f = SpaceTimeFunction::with_defect(|_, s| s, |_, _| 1.0);
        let x = Point::d2(0.2, 0.3);
        let d = decompose(b, &f, &x, 0.4, &default_time_spec()).unwrap();
        assert!((d.total().value - 0.4).abs() < 1e-5, "{d:?}");
    }

    #[test]
    fn corrector_closes_gamma1() {
        let b = basis2();
        let spec = default_time_spec();
        let mut seed = 7u64;
        let mut rnd = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..10 {
            let (r1, a1, r2, a2) = (0.8 * rnd(), std::f64::consts::TAU * rnd(), 0.8 * rnd(), std::f64::consts::TAU * rnd());
            let t = 0.05 + 0.5 * rnd();
            let x = Point::d2(r1 * a1.cos(), r1 * a1.sin());
            let y = Point::d2(r2 * a2.cos(), r2 * a2.sin());
            let c = corrector_phi1(b, &x, &y, t, &spec).unwrap();
            let g = gamma1(b, &x, &y, t).unwrap();
            let free = heat_kernel_free(&x, &y, t).unwrap();
            assert!(c.value >= -1e-8);
            assert!((free - c.value - g.value).abs() <= 1e-6 + 2.0 * (c.error + g.error), "{x:?} {y:?} {t} {} {}", free - c.value, g.value);
        }
    }

    #[test]
    fn corrector_small_time() {
        let b = basis2();
        let (x, y) = (Point::d2(0.1, 0.0), Point::d2(-0.2, 0.1));
        let mut last = f64::INFINITY;
        for t in [0.2, 0.1, 0.05, 0.025] {
            let c = corrector_phi1(b, &x, &y, t, &default_time_spec()).unwrap().value;
            assert!(c < last && c >= -1e-10, "{t} {c}");
            last = c;
        }
        assert!(last < 1e-3);
    }
}
