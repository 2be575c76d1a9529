//! Laplace kernels on the unit ball with Dirichlet and dynamical boundary laws.

use crate::error::{KernelError, Result};
use crate::geometry::{check_dims, require_ball_boundary, require_in_ball, require_positive_t, sphere_area, BallClass, Point};
use crate::numerics::{integrate_ball, integrate_sphere, QuadratureSpec};
use crate::value::{BoundaryFunction, InteriorFunction, KernelValue};

/// Default sphere order: 256 nodes on the circle, 32 x 64 on the sphere.
pub fn default_sphere_spec(n: usize) -> QuadratureSpec {
    QuadratureSpec::gauss(if n == 2 { 256 } else { 32 })
}

/// Default volume rule: 48 radial nodes times the default sphere rule.
pub fn default_ball_spec(n: usize) -> QuadratureSpec {
    let _ = n;
    QuadratureSpec::gauss(48)
}

/// `Phi_n(sqrt(d2))`.
#[inline]
pub(crate) fn phi_of_sq(n: usize, d2: f64) -> f64 {
    if n == 2 {
        -0.25 * d2.ln() / std::f64::consts::PI
    } else {
        1.0 / (4.0 * std::f64::consts::PI * d2.sqrt())
    }
}

fn require_interior(p: &Point) -> Result<()> {
    match p.ball_class() {
        BallClass::Interior => Ok(()),
        _ => Err(KernelError::Domain(format!("expected an interior point, |x| = {}", p.norm()))),
    }
}

/// `|x|^2 |y|^2 - 2 x.y + 1`, the squared distance from `|x| y` to `x/|x|`.
#[inline]
fn dual_sq(x: &Point, y: &Point) -> f64 {
    x.norm_sq() * y.norm_sq() - 2.0 * x.dot(y) + 1.0
}

/// Dirichlet Green's function of `-Delta` on the unit ball.
/// At `x = 0` this is the radial limit `Phi(y) - Phi(1)`.
pub fn green_ball(x: &Point, y: &Point) -> Result<f64> {
    let n = check_dims(x, y)?;
    require_in_ball(x)?;
    require_in_ball(y)?;
    let d1 = x.dist_sq(y);
    if d1 == 0.0 {
        return Err(KernelError::Singularity("x = y".into()));
    }
    Ok(phi_of_sq(n, d1) - phi_of_sq(n, dual_sq(x, y)))
}

/// `d/d rho G_1(rho u, y)` for a unit vector `u`.
pub fn green_ball_radial_derivative(rho: f64, u: &Point, y: &Point) -> Result<f64> {
    let n = check_dims(u, y)?;
    let a = u.dot(y);
    let y2 = y.norm_sq();
    let d1 = rho * rho - 2.0 * rho * a + y2;
    let d2 = rho * rho * y2 - 2.0 * rho * a + 1.0;
    if d1 <= 0.0 {
        return Err(KernelError::Singularity("x = y".into()));
    }
    let w = sphere_area(n);
    let p = 0.5 * n as f64;
    Ok(-(rho - a) / (w * d1.powf(p)) + (rho * y2 - a) / (w * d2.powf(p)))
}

/// `1 / |S^{n-1}|`.
pub fn poisson_ball_constant(n: usize) -> f64 {
    1.0 / sphere_area(n)
}

#[inline]
pub(crate) fn poisson_raw(n: usize, x: &Point, y: &Point) -> f64 {
    poisson_ball_constant(n) * (1.0 - x.norm_sq()) / x.dist_sq(y).powf(0.5 * n as f64)
}

/// Poisson kernel of the unit ball.
pub fn poisson_ball(x: &Point, y: &Point) -> Result<f64> {
    let n = check_dims(x, y)?;
    require_interior(x)?;
    require_ball_boundary(y)?;
    Ok(poisson_raw(n, x, y))
}

/// `P_1(x e^{-t}, y)`; `x` may be on the sphere.
pub fn k1(x: &Point, y: &Point, t: f64) -> Result<f64> {
    let n = check_dims(x, y)?;
    require_positive_t(t)?;
    require_in_ball(x)?;
    require_ball_boundary(y)?;
    Ok(poisson_raw(n, &x.scale((-t).exp()), y))
}

/// `d/dt K_1(x, y, t)` in closed form.
pub fn dt_k1(x: &Point, y: &Point, t: f64) -> Result<f64> {
    let n = check_dims(x, y)?;
    require_positive_t(t)?;
    require_in_ball(x)?;
    require_ball_boundary(y)?;
    let z = x.scale((-t).exp());
    let z2 = z.norm_sq();
    let d2 = z.dist_sq(y);
    let num = 2.0 * z2 * d2 + n as f64 * (1.0 - z2) * (z2 - z.dot(y));
    Ok(poisson_ball_constant(n) * num / d2.powf(0.5 * n as f64 + 1.0))
}

/// `G_1(x e^{-t}, y)`.
pub fn j1(x: &Point, y: &Point, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(KernelError::Domain(format!("t must be non-negative, got {t}")));
    }
    green_ball(&x.scale((-t).exp()), y)
}

/// Sphere order that resolves `P_1(x, .)`: the kernel has width `1 - |x|`, so
/// the order grows like `37 / (1 - |x|)` up to a cap.
pub fn resolved_sphere_spec(x: &Point, spec: &QuadratureSpec) -> QuadratureSpec {
    let gap = (1.0 - x.norm()).max(1e-12);
    let (k, cap) = if x.dim() == 2 { (37.0, 1 << 16) } else { (12.0, 512) };
    let need = ((k / gap).ceil() as usize).min(cap);
    QuadratureSpec { order: spec.order.max(need), ..*spec }
}

/// `int P_1(x, y) phi_b(y) dsigma_y` by sphere quadrature.
pub fn harmonic_extension(phi_b: &BoundaryFunction, x: &Point, spec: &QuadratureSpec) -> Result<KernelValue> {
    harmonic_extension_fn(&|y: &Point| phi_b.eval(y), x, spec)
}

/// [`harmonic_extension`] of a borrowed closure.
pub fn harmonic_extension_fn(phi_b: &dyn Fn(&Point) -> f64, x: &Point, spec: &QuadratureSpec) -> Result<KernelValue> {
    require_interior(x)?;
    let n = x.dim();
    let spec = resolved_sphere_spec(x, spec);
    let v = integrate_sphere(n, &spec, |y| poisson_raw(n, x, y) * phi_b(y))?;
    Ok(KernelValue::new(v.value, v.abs_error))
}

/// `int K_1(x, y, t) phi_b(y) dsigma_y`.
pub fn laplace_dynamical_solution(
    phi_b: &BoundaryFunction,
    x: &Point,
    t: f64,
    spec: &QuadratureSpec,
) -> Result<KernelValue> {
    require_positive_t(t)?;
    require_in_ball(x)?;
    harmonic_extension(phi_b, &x.scale((-t).exp()), spec)
}

/// `int J_1(x, y, t) (-Delta phi_i)(y) dy`, with `spec.order` radial nodes.
pub fn laplace_dynamical_interior_solution(
    phi_i: &InteriorFunction,
    x: &Point,
    t: f64,
    spec: &QuadratureSpec,
) -> Result<KernelValue> {
    if !(t >= 0.0) {
        return Err(KernelError::Domain(format!("t must be non-negative, got {t}")));
    }
    require_interior(x)?;
    let lap = phi_i
        .laplacian
        .as_ref()
        .ok_or_else(|| KernelError::Contract("interior data needs an analytic Laplacian".into()))?;
    let z = x.scale((-t).exp());
    green_potential(&|y: &Point| -lap.eval(y), &z, spec)
}

/// `int G_1(z, y) g(y) dy` with `spec.order` radial nodes.
///
/// The kernel singularity is removed by subtracting `g(z)` and adding back
/// `g(z) int G_1(z, y) dy = g(z) (1 - |z|^2) / 2n`.
pub fn green_potential(g: &dyn Fn(&Point) -> f64, z: &Point, spec: &QuadratureSpec) -> Result<KernelValue> {
    spec.validate()?;
    require_in_ball(z)?;
    let n = z.dim();
    let gz = g(z);
    let sphere = default_sphere_spec(n).order;
    let v = integrate_ball(n, spec.order, sphere, |y| {
        let d1 = z.dist_sq(y);
        if d1 == 0.0 {
            return 0.0;
        }
        let k = phi_of_sq(n, d1) - phi_of_sq(n, dual_sq(z, y));
        k * (g(y) - gz)
    })?;
    let closed = gz * (1.0 - z.norm_sq()) / (2.0 * n as f64);
    Ok(KernelValue::new(v.value + closed, v.abs_error))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::bump;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn green_examples() {
        let v = green_ball(&Point::origin(2), &Point::d2(0.5, 0.0)).unwrap();
        assert!((v + 0.5f64.ln() / (2.0 * PI)).abs() < 1e-16);
        let x = Point::d3(0.1, 0.3, -0.2);
        let y = Point::d3(0.0, 1.0 - 1e-10, 0.0);
        assert!(green_ball(&x, &y).unwrap().abs() < 1e-9);
        assert!(green_ball(&x, &x).is_err());
    }

    proptest! {
        #[test]
        fn green_symmetry(a in -0.7f64..0.7, b in -0.7f64..0.7, c in -0.7f64..0.7, d in -0.7f64..0.7) {
            let x = Point::d2(a, b);
            let y = Point::d2(c, d);
            prop_assume!(x.dist(&y) > 1e-3);
            let g = green_ball(&x, &y).unwrap();
            prop_assert!((g - green_ball(&y, &x).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn poisson_positive(a in -0.99f64..0.99, th in 0.0f64..std::f64::consts::TAU) {
            let x = Point::d2(a, 0.0);
            let y = Point::d2(th.cos(), th.sin());
            prop_assert!(poisson_ball(&x, &y).unwrap() > 0.0);
        }
    }

    #[test]
    fn green_radial_derivative_matches_fd() {
        for (u, y) in [
            (Point::d2(0.6, 0.8), Point::d2(0.2, -0.4)),
            (Point::d3(0.0, 0.6, 0.8), Point::d3(0.3, 0.1, 0.2)),
        ] {
            let (rho, h) = (0.55, 1e-5);
            let fd = (green_ball(&u.scale(rho + h), &y).unwrap() - green_ball(&u.scale(rho - h), &y).unwrap()) / (2.0 * h);
            let d = green_ball_radial_derivative(rho, &u, &y).unwrap();
            assert!((fd - d).abs() < 1e-8, "{fd} {d}");
        }
    }

    #[test]
    fn poisson_examples() {
        let y2 = Point::d2(0.0, 1.0);
        assert!((poisson_ball(&Point::origin(2), &y2).unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-16);
        let y3 = Point::d3(0.0, 0.0, 1.0);
        assert!((poisson_ball(&Point::origin(3), &y3).unwrap() - 1.0 / (4.0 * PI)).abs() < 1e-16);
        let x = Point::d3(0.7, 0.0, 0.0);
        let m = integrate_sphere(3, &QuadratureSpec::gauss(64), |y| poisson_ball(&x, y).unwrap()).unwrap();
        assert!((m.value - 1.0).abs() < 1e-10, "{m:?}");
    }

    #[test]
    fn k1_examples() {
        let x = Point::d2(0.9, 0.0);
        let m = integrate_sphere(2, &default_sphere_spec(2), |y| k1(&x, y, 0.1).unwrap()).unwrap();
        assert!((m.value - 1.0).abs() < 1e-10);
        let y = Point::d2(0.0, 1.0);
        assert!((k1(&x, &y, 50.0).unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-15);
        let xb = Point::d2(1.0, 0.0);
        let mut last = f64::INFINITY;
        for t in [1e-1, 1e-2, 1e-3, 1e-4] {
            let v = k1(&xb, &y, t).unwrap();
            assert!(v < last);
            last = v;
        }
        assert!(last < 1e-3);
    }

    #[test]
    fn dt_k1_matches_fd() {
        for (x, y) in [
            (Point::d2(0.5, 0.3), Point::d2(0.6, 0.8)),
            (Point::d3(0.1, -0.4, 0.6), Point::d3(0.0, 0.0, 1.0)),
        ] {
            let (t, h) = (0.3, 1e-5);
            let fd = (k1(&x, &y, t + h).unwrap() - k1(&x, &y, t - h).unwrap()) / (2.0 * h);
            let d = dt_k1(&x, &y, t).unwrap();
            assert!((fd - d).abs() < 1e-8 * (1.0 + d.abs()), "{fd} {d}");
        }
    }

    #[test]
    fn k1_is_harmonic_under_refinement() {
        let y = Point::d2(0.0, 1.0);
        let x = Point::d2(0.3, 0.2);
        let f = |p: Point| k1(&p, &y, 0.2).unwrap();
        let errs: Vec<f64> = [0.02, 0.01, 0.005]
            .iter()
            .map(|&h| {
                ((f(x.with(0, 0.3 + h)) + f(x.with(0, 0.3 - h)) + f(x.with(1, 0.2 + h)) + f(x.with(1, 0.2 - h))
                    - 4.0 * f(x))
                    / (h * h))
                    .abs()
            })
            .collect();
        assert!((errs[1] / errs[2]).log2() > 1.8, "{errs:?}");
    }

    #[test]
    fn k1_dynamical_boundary_residual() {
        let x = Point::d2(0.6, 0.8);
        let y = Point::d2(0.0, -1.0);
        let t = 0.4;
        let mut res = Vec::new();
        for h in [1e-2, 5e-3, 2.5e-3] {
            let dt = (k1(&x, &y, t + h).unwrap() - k1(&x, &y, t).unwrap()) / h;
            let dn = (k1(&x, &y, t).unwrap() - k1(&x.scale(1.0 - h), &y, t).unwrap()) / h;
            res.push((dt + dn).abs());
        }
        assert!(res[2] < res[1] && res[1] < res[0], "{res:?}");
        assert!(res[2] < 1e-3);
    }

    #[test]
    fn j1_examples() {
        let x = Point::d2(0.5, 0.0);
        let y = Point::d2(0.5, 0.0);
        let a = j1(&x, &y, 2f64.ln()).unwrap();
        let b = green_ball(&Point::d2(0.25, 0.0), &y).unwrap();
        assert!((a - b).abs() < 1e-15);
        let y2 = Point::d2(-0.2, 0.3);
        assert_eq!(j1(&x, &y2, 0.0).unwrap(), green_ball(&x, &y2).unwrap());
    }

    #[test]
    fn harmonic_extension_examples() {
        for n in [2, 3] {
            let spec = default_sphere_spec(n);
            let x = Point::axis(n, 0, 0.4).add(&Point::axis(n, 1, -0.3));
            let one = harmonic_extension(&BoundaryFunction::constant(1.0), &x, &spec).unwrap();
            assert!((one.value - 1.0).abs() < 1e-10);
            let lin = harmonic_extension(&BoundaryFunction::smooth(|y| y.get(0)), &x, &spec).unwrap();
            assert!((lin.value - 0.4).abs() < 1e-10);
            let f = BoundaryFunction::smooth(|y| (3.0 * y.get(1)).sin() + y.get(0).powi(2));
            let at0 = harmonic_extension(&f, &Point::origin(n), &spec).unwrap();
            let avg = integrate_sphere(n, &spec, |y| f.eval(y)).unwrap().value / sphere_area(n);
            assert!((at0.value - avg).abs() < 1e-12);
        }
    }

    #[test]
    fn dynamical_solution_examples() {
        let spec = default_sphere_spec(2);
        let one = BoundaryFunction::constant(1.0);
        for t in [0.01, 0.5, 3.0] {
            let v = laplace_dynamical_solution(&one, &Point::d2(1.0, 0.0), t, &spec).unwrap();
            assert!((v.value - 1.0).abs() < 1e-10);
        }
        let f = BoundaryFunction::smooth(|y| (2.0 * y.get(0)).cos());
        let xb = Point::d2(0.6, 0.8);
        let v = laplace_dynamical_solution(&f, &xb, 0.02, &spec).unwrap();
        assert!((v.value - f.eval(&xb)).abs() < 0.05);
        let x = Point::d2(0.3, 0.1);
        let a = laplace_dynamical_solution(&f, &x, 0.7, &spec).unwrap();
        let b = harmonic_extension(&f, &x.scale((-0.7f64).exp()), &spec).unwrap();
        assert!((a.value - b.value).abs() <= 2.0 * (a.error + b.error) + 1e-15);
    }

    #[test]
    fn interior_solution_examples() {
        let spec = default_ball_spec(2);
        let zero = InteriorFunction::constant(0.0);
        let v = laplace_dynamical_interior_solution(&zero, &Point::d2(0.2, 0.1), 0.3, &spec).unwrap();
        assert_eq!(v.value, 0.0);
        let no_lap = InteriorFunction::new(|_| 1.0);
        assert!(matches!(
            laplace_dynamical_interior_solution(&no_lap, &Point::d2(0.2, 0.1), 0.3, &spec),
            Err(KernelError::Contract(_))
        ));
        for n in [2, 3] {
            let b = bump(0.6);
            for x in [
                Point::origin(n),
                Point::axis(n, 0, 0.2),
                Point::axis(n, 1, -0.35),
                Point::axis(n, 0, 0.3).add(&Point::axis(n, 1, 0.3)),
                Point::axis(n, 0, 0.8),
            ] {
                let v = laplace_dynamical_interior_solution(&b, &x, 0.0, &spec).unwrap();
                assert!((v.value - b.eval(&x)).abs() < 1e-6 + v.error, "n={n} x={x:?} {v:?} {}", b.eval(&x));
            }
        }
    }

    #[test]
    fn interior_solution_satisfies_pde() {
        // (d_t - Delta) w = -e^{-2t} Delta phi(x e^{-t}) + r.grad phi... checked via w(x,t) = phi(x e^{-t}).
        let b = bump(0.6);
        let spec = default_ball_spec(2);
        let x = Point::d2(0.25, 0.1);
        let t = 0.3;
        let w = laplace_dynamical_interior_solution(&b, &x, t, &spec).unwrap();
        assert!((w.value - b.eval(&x.scale((-t).exp()))).abs() < 1e-6 + w.error);
    }

    #[test]
    fn decomposition_identity() {
        // f = 1 - |x|^2, -Delta f = 2n, f = 0 on the sphere
        for n in [2, 3] {
            let f = InteriorFunction::with_laplacian(|p| 1.0 - p.norm_sq(), move |_| -2.0 * n as f64);
            for k in 0..10 {
                let r = 0.09 * k as f64;
                let x = Point::axis(n, k % n, r);
                let vol = laplace_dynamical_interior_solution(&f, &x, 0.0, &default_ball_spec(n)).unwrap();
                let surf = harmonic_extension(&BoundaryFunction::constant(0.0), &x, &default_sphere_spec(n)).unwrap();
                assert!((vol.value + surf.value - f.eval(&x)).abs() < 1e-6);
            }
        }
    }
}
