//! Laplace and heat kernels on the upper half-space `x_n > 0`.

use std::f64::consts::PI;

use crate::error::{KernelError, Result};
use crate::geometry::{check_dims, check_n, require_positive_t, Point};
use crate::numerics::{integrate_interval, QuadratureSpec, Rule};
use crate::value::KernelValue;

/// Which displayed expression of the dynamical heat Green's function to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GPlusForm {
    Difference,
    Image,
}

/// Fundamental solution of `-Delta`: `-ln|x|/(2 pi)` or `1/(4 pi |x|)`.
pub fn phi_laplace(n: usize, x: &Point) -> Result<f64> {
    check_n(n)?;
    let r = x.norm();
    if r == 0.0 {
        return Err(KernelError::Singularity("fundamental solution at the origin".into()));
    }
    Ok(if n == 2 { -r.ln() / (2.0 * PI) } else { 1.0 / (4.0 * PI * r) })
}

fn require_upper(p: &Point, strict: bool) -> Result<()> {
    let xn = p.last();
    if xn < 0.0 || (strict && xn == 0.0) {
        return Err(KernelError::Domain(format!("x_n = {xn} outside the half-space")));
    }
    Ok(())
}

/// Dirichlet Green's function of the Laplacian on the half-space.
pub fn green_halfspace_laplace(x: &Point, y: &Point) -> Result<f64> {
    let n = check_dims(x, y)?;
    require_upper(x, true)?;
    require_upper(y, true)?;
    if x == y {
        return Err(KernelError::Singularity("x = y".into()));
    }
    Ok(phi_laplace(n, &y.sub(x))? - phi_laplace(n, &y.sub(&x.reflect()))?)
}

/// Normalizing constant of the half-space Poisson kernel: `1/pi` or `1/(2 pi)`.
pub fn poisson_halfspace_constant(n: usize) -> f64 {
    if n == 2 {
        1.0 / PI
    } else {
        1.0 / (2.0 * PI)
    }
}

/// Poisson kernel `c_n x_n / |x - y|^n` with `y` on `x_n = 0`.
pub fn poisson_halfspace(x: &Point, y: &Point) -> Result<f64> {
    let n = check_dims(x, y)?;
    require_upper(x, true)?;
    if y.last() != 0.0 {
        return Err(KernelError::Domain(format!("y_n = {} is not on the boundary", y.last())));
    }
    let d2 = x.dist_sq(y);
    Ok(poisson_halfspace_constant(n) * x.last() / d2.powf(0.5 * n as f64))
}

/// Dynamical Laplace kernel `P_+(x + t e_n, y)`.
pub fn k_plus(x: &Point, y: &Point, t: f64) -> Result<f64> {
    require_positive_t(t)?;
    require_upper(x, false)?;
    let shifted = x.with(x.dim() - 1, x.last() + t);
    poisson_halfspace(&shifted, y)
}

/// Free heat kernel `(4 pi t)^(-n/2) exp(-|x-y|^2 / 4t)`.
pub fn heat_kernel_free(x: &Point, y: &Point, t: f64) -> Result<f64> {
    let n = check_dims(x, y)?;
    require_positive_t(t)?;
    Ok(gauss(n, x.dist_sq(y), t))
}

#[inline]
pub(crate) fn gauss(n: usize, d2: f64, t: f64) -> f64 {
    (4.0 * PI * t).powf(-0.5 * n as f64) * (-d2 / (4.0 * t)).exp()
}

/// `d/dx_n Gamma(x, y, t)`.
#[inline]
fn d_gauss_last(n: usize, x: &Point, y: &Point, t: f64) -> f64 {
    -(x.last() - y.last()) / (2.0 * t) * gauss(n, x.dist_sq(y), t)
}

/// Dirichlet heat kernel of the half-space by reflection.
pub fn gamma_plus(x: &Point, y: &Point, t: f64) -> Result<f64> {
    let n = check_dims(x, y)?;
    require_positive_t(t)?;
    Ok(gauss(n, x.dist_sq(y), t) - gauss(n, x.dist_sq(&y.reflect()), t))
}

/// `Phi_{n-1}(x' - y', t) (Phi_1(x_n - y_n, t) - Phi_1(x_n + y_n, t))`.
pub fn gamma_plus_factorized(x: &Point, y: &Point, t: f64) -> Result<f64> {
    let n = check_dims(x, y)?;
    require_positive_t(t)?;
    let mut tang = 0.0;
    for k in 0..n - 1 {
        tang += (x.get(k) - y.get(k)).powi(2);
    }
    let a = x.last() - y.last();
    let b = x.last() + y.last();
    Ok(gauss(n - 1, tang, t) * (gauss(1, a * a, t) - gauss(1, b * b, t)))
}

/// Heat Green's function with the dynamical boundary law on the half-space.
pub fn g_plus_heat(x: &Point, y: &Point, t: f64, spec: &QuadratureSpec, form: GPlusForm) -> Result<KernelValue> {
    let n = check_dims(x, y)?;
    require_positive_t(t)?;
    require_upper(x, false)?;
    require_upper(y, false)?;
    let base = gamma_plus(x, y, t)?;
    let shift = |s: f64| x.with(n - 1, x.last() + s);
    let ys = y.reflect();
    let integral = match form {
        GPlusForm::Difference => integrate_interval(
            |s| {
                let z = shift(s);
                d_gauss_last(n, &z, y, t - s) - d_gauss_last(n, &z, &ys, t - s)
            },
            0.0,
            t,
            spec,
        )?,
        GPlusForm::Image => {
            let mut v = integrate_interval(|s| d_gauss_last(n, &shift(s), &ys, t - s), 0.0, t, spec)?;
            v.value *= -2.0;
            v.abs_error *= 2.0;
            v
        }
    };
    Ok(KernelValue::new(base + integral.value, integral.abs_error))
}

/// `int_{x_n=0} G_+ dy' + int_{x_n>0} G_+ dy` on a truncated box, with the
/// Gaussian tail of the truncation added to the error.
pub fn g_plus_mass(x: &Point, t: f64, spec: &QuadratureSpec, form: GPlusForm, nodes: usize) -> Result<KernelValue> {
    let n = x.dim();
    check_n(n)?;
    require_positive_t(t)?;
    let half = (4.0 * t * 30.0).sqrt();
    let tang: Vec<Rule> = (0..n - 1)
        .map(|k| QuadratureSpec::gauss(nodes).rule(x.get(k) - half, x.get(k) + half))
        .collect();
    let top = x.last() + t + half;
    let normal = QuadratureSpec::gauss(nodes).rule(0.0, top);
    let mut err = 0.0;
    let mut eval = |y: &Point| -> Result<f64> {
        let v = g_plus_heat(x, y, t, spec, form)?;
        err += v.error.abs();
        Ok(v.value)
    };
    let mut tangential_points: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 1.0)];
    for r in &tang {
        let mut next = Vec::new();
        for (c, w) in &tangential_points {
            for (&u, &wu) in r.nodes.iter().zip(&r.weights) {
                let mut c2 = c.clone();
                c2.push(u);
                next.push((c2, w * wu));
            }
        }
        tangential_points = next;
    }
    let mut boundary = 0.0;
    let mut volume = 0.0;
    for (c, w) in &tangential_points {
        let mut coords = c.clone();
        coords.push(0.0);
        let y0 = Point::new(&coords)?;
        boundary += w * eval(&y0)?;
        for (&yn, &wn) in normal.nodes.iter().zip(&normal.weights) {
            volume += w * wn * eval(&y0.with(n - 1, yn))?;
        }
    }
    let tail = 2.0 * n as f64 * (-half * half / (4.0 * t)).exp();
    let quad_err = err / tangential_points.len() as f64;
    Ok(KernelValue::new(boundary + volume, tail + quad_err))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn phi_examples() {
        assert_eq!(phi_laplace(2, &Point::d2(1.0, 0.0)).unwrap(), 0.0);
        assert!((phi_laplace(3, &Point::d3(0.0, 1.0, 0.0)).unwrap() - 1.0 / (4.0 * PI)).abs() < 1e-16);
        let e = std::f64::consts::E;
        assert!((phi_laplace(2, &Point::d2(0.0, e)).unwrap() + 1.0 / (2.0 * PI)).abs() < 1e-16);
        assert!(phi_laplace(2, &Point::origin(2)).is_err());
    }

    #[test]
    fn phi_flux_is_one() {
        // -int_{|x|=r} d_nu Phi = 1, by central differences in r on a sphere rule.
        use crate::numerics::SphereRule;
        for n in [2, 3] {
            let rule = SphereRule::new(n, 16).unwrap();
            let (r, h) = (0.7, 1e-5);
            let flux = rule.integrate(|u| {
                let d = (phi_laplace(n, &u.scale(r + h)).unwrap() - phi_laplace(n, &u.scale(r - h)).unwrap()) / (2.0 * h);
                -d * r.powi(n as i32 - 1)
            });
            assert!((flux - 1.0).abs() < 1e-8, "n={n} flux={flux}");
        }
    }

    #[test]
    fn green_examples() {
        let v = green_halfspace_laplace(&Point::d3(0.0, 0.0, 1.0), &Point::d3(0.0, 0.0, 2.0)).unwrap();
        assert!((v - (1.0 / (4.0 * PI) - 1.0 / (12.0 * PI))).abs() < 1e-16);
        let x = Point::d2(0.3, 0.7);
        let near = green_halfspace_laplace(&x, &Point::d2(-0.5, 1e-9)).unwrap();
        assert!(near.abs() < 1e-9);
        assert!(green_halfspace_laplace(&x, &x).is_err());
    }

    #[test]
    fn poisson_examples() {
        let x = Point::d2(0.0, 1.0);
        assert!((poisson_halfspace(&x, &Point::d2(0.0, 0.0)).unwrap() - 1.0 / PI).abs() < 1e-16);
        // truncated mass equals (2/pi) atan(R)
        let r = 5.0;
        let rule = QuadratureSpec::gauss(200).rule(-r, r);
        let m = rule.apply(|u| poisson_halfspace(&x, &Point::d2(u, 0.0)).unwrap());
        assert!((m - 2.0 / PI * r.atan()).abs() < 1e-12);
        let y = Point::d3(0.2, -0.1, 0.0);
        let x3 = Point::d3(0.5, 0.4, 0.9);
        let s = 2.5;
        let lhs = poisson_halfspace(&x3.scale(s), &y.scale(s)).unwrap();
        assert!((lhs - s.powi(-2) * poisson_halfspace(&x3, &y).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn k_plus_examples() {
        let x = Point::d2(0.0, 0.5);
        let y = Point::d2(0.3, 0.0);
        assert_eq!(k_plus(&x, &y, 0.5).unwrap(), poisson_halfspace(&Point::d2(0.0, 1.0), &y).unwrap());
        let r = 5.0;
        let rule = QuadratureSpec::gauss(200).rule(-r, r);
        let m = rule.apply(|u| k_plus(&x, &Point::d2(u, 0.0), 0.5).unwrap());
        assert!((m - 2.0 / PI * r.atan()).abs() < 1e-12);
        // Dirac concentration on the boundary
        let xb = Point::d2(0.0, 0.0);
        let far = Point::d2(0.5, 0.0);
        let mut last = f64::INFINITY;
        for t in [1e-1, 1e-2, 1e-3, 1e-4] {
            let v = k_plus(&xb, &far, t).unwrap();
            assert!(v < last);
            last = v;
        }
        assert!(last < 1e-3);
    }

    #[test]
    fn five_point_laplacian_of_k_plus() {
        let y = Point::d2(0.1, 0.0);
        let mut errs = Vec::new();
        for h in [0.02, 0.01, 0.005] {
            let x = Point::d2(0.3, 0.4);
            let f = |p: Point| k_plus(&p, &y, 0.2).unwrap();
            let lap = (f(x.with(0, 0.3 + h)) + f(x.with(0, 0.3 - h)) + f(x.with(1, 0.4 + h)) + f(x.with(1, 0.4 - h))
                - 4.0 * f(x))
                / (h * h);
            errs.push(lap.abs());
        }
        let order = (errs[1] / errs[2]).log2();
        assert!(order > 1.8, "{errs:?}");
    }

    #[test]
    fn heat_kernel_examples() {
        let x = Point::d3(0.1, 0.2, 0.3);
        assert!((heat_kernel_free(&x, &x, 0.3).unwrap() - (4.0 * PI * 0.3f64).powf(-1.5)).abs() < 1e-15);
        assert!(heat_kernel_free(&x, &x, 0.0).is_err());
        let rule = QuadratureSpec::gauss(120).rule(-10.0, 10.0);
        let y0 = Point::d2(0.2, -0.1);
        let m: f64 = rule.apply(|a| rule.apply(|b| heat_kernel_free(&y0, &Point::d2(a, b), 0.5).unwrap()));
        assert!((m - 1.0).abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn heat_kernel_symmetry(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0, t in 0.01f64..3.0) {
            let x = Point::d2(a, b);
            let y = Point::d2(c, a - b);
            prop_assert_eq!(heat_kernel_free(&x, &y, t).unwrap(), heat_kernel_free(&y, &x, t).unwrap());
        }

        #[test]
        fn gamma_plus_forms_agree(a in -1.0f64..1.0, b in 0.0f64..2.0, c in -1.0f64..1.0, d in 0.0f64..2.0, e in -1.0f64..1.0, t in 0.01f64..2.0) {
            let x = Point::d3(a, e, b);
            let y = Point::d3(c, -e, d);
            let g = gamma_plus(&x, &y, t).unwrap();
            let f = gamma_plus_factorized(&x, &y, t).unwrap();
            prop_assert!((g - f).abs() <= 1e-13 * (1.0 + g.abs()));
            prop_assert!(g <= heat_kernel_free(&x, &y, t).unwrap());
        }

        #[test]
        fn green_symmetry(a in -1.0f64..1.0, b in 0.05f64..2.0, c in -1.0f64..1.0, d in 0.05f64..2.0) {
            let x = Point::d2(a, b);
            let y = Point::d2(c, d);
            prop_assume!(x.dist(&y) > 1e-3);
            let g1 = green_halfspace_laplace(&x, &y).unwrap();
            let g2 = green_halfspace_laplace(&y, &x).unwrap();
            prop_assert!((g1 - g2).abs() < 1e-13);
        }
    }

    #[test]
    fn gamma_plus_vanishes_on_boundary() {
        let y = Point::d2(0.3, 0.6);
        assert_eq!(gamma_plus(&Point::d2(-0.2, 0.0), &y, 0.4).unwrap(), 0.0);
    }

    #[test]
    fn g_plus_small_time_vanishes() {
        let spec = QuadratureSpec::graded_to_end(8);
        let x = Point::d2(0.0, 0.5);
        let y = Point::d2(0.8, 0.9);
        for form in [GPlusForm::Difference, GPlusForm::Image] {
            let v = g_plus_heat(&x, &y, 1e-3, &spec, form).unwrap();
            assert!(v.value.abs() < 1e-30);
        }
    }

    #[test]
    fn g_plus_image_mass_identity() {
        let spec = QuadratureSpec::graded_to_end(8);
        let m = g_plus_mass(&Point::d2(0.0, 0.5), 0.25, &spec, GPlusForm::Image, 64).unwrap();
        assert!((m.value - 1.0).abs() < 1e-4 + m.error, "{m:?}");
    }

    #[test]
    fn g_plus_image_symmetry() {
        let spec = QuadratureSpec::graded_to_end(8);
        let x = Point::d2(0.0, 0.5);
        let y = Point::d2(0.7, 0.2);
        let a = g_plus_heat(&x, &y, 0.5, &spec, GPlusForm::Image).unwrap();
        let b = g_plus_heat(&y, &x, 0.5, &spec, GPlusForm::Image).unwrap();
        assert!((a.value - b.value).abs() <= 2.0 * (a.error + b.error) + 1e-15, "{a:?} {b:?}");
        assert!((a.value - 0.118_230_623_514_694_2).abs() < 1e-10);
    }
}
