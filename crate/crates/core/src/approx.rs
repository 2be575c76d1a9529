//! Two approximations of the heat flow with the dynamical boundary law on the unit ball,
//! and finite-difference measurements of what they leave over.
//!
//! `script_*` build `G_1 ~ Gamma_1 + H_1` by pushing `Gamma_1` along the ray `x e^{-s}`.
//! `tilde_*` split the solution into a Dirichlet heat flow plus a dynamical harmonic part.

use serde::Serialize;

use crate::ball_heat::kernels::{default_time_spec, direction, mode_convolution, same_dim};
use crate::ball_heat::project::{collapse, projection_sphere_order};
use crate::ball_heat::{evolve, gamma1, project_boundary, project_interior, EigenBasis, ModalCoefficients};
use crate::ball_laplace::{green_ball_radial_derivative, k1, poisson_raw};
use crate::error::{KernelError, Result};
use crate::geometry::{check_dims, require_ball_boundary, require_in_ball, Point};
use crate::numerics::bessel::{z, Kind};
use crate::numerics::harmonics::Harmonics;
use crate::numerics::zeros::bessel_j_zero;
use crate::numerics::{BallRule, QuadratureSpec};
use crate::par::map_indexed;
use crate::value::{BoundaryFunction, InteriorFunction, KernelValue};

fn check_pair(basis: &EigenBasis, x: &Point, y: &Point, t: f64) -> Result<()> {
    check_dims(x, y)?;
    same_dim(basis, x)?;
    require_in_ball(x)?;
    require_in_ball(y)?;
    basis.check_t(t)
}

fn check_nonzero(x: &Point) -> Result<()> {
    if x.norm() == 0.0 {
        return Err(KernelError::OriginSingularity);
    }
    Ok(())
}

/// `nu + 1` for the Bessel order of degree `l`.
fn nu_plus_one(n: usize, l: usize) -> f64 {
    l as f64 + if n == 2 { 1.0 } else { 1.5 }
}

/// `H_1(x, y, t) = -int_0^t d_{e_x} Gamma_1(x e^{-s}, y, t - s) ds`, for `0 < |x| <= 1`.
///
/// The radial factor is frozen at `rho = |x| e^{-t}`; the frozen part sums to the radial
/// derivative of the Dirichlet Green's function, the rest is a convolution whose integrand
/// vanishes at `s = t`. Boundary `y` gives exactly 0 since `Gamma_1(., y, .)` vanishes there.
pub fn script_h1(basis: &EigenBasis, x: &Point, y: &Point, t: f64, spec: &QuadratureSpec) -> Result<KernelValue> {
    check_pair(basis, x, y, t)?;
    check_nonzero(x)?;
    if y.is_ball_boundary() {
        return Ok(KernelValue::exact(0.0));
    }
    let r = x.norm().min(1.0);
    let u = direction(x);
    let rho = r * (-t).exp();
    let lam = basis.lambdas();
    let kmax = basis.kmax();
    let ry = basis.radial_all(y.norm());
    let a = basis.angular(u.cos_angle(y));
    let d_end = basis.radial_derivative_all(rho);
    let (conv, err) = mode_convolution(basis, t, spec, |s| {
        basis.radial_derivative_all(r * (-s).exp()).iter().zip(&d_end).map(|(p, q)| p - q).collect()
    })?;
    let mut series = 0.0;
    let mut quad = 0.0;
    let mut shell = 0.0;
    for i in 0..basis.len() {
        let (l, k) = (i / kmax, i % kmax + 1);
        let w = ry.values[i] * a[l];
        let term = w * (conv[i] - (-lam[i] * t).exp() * d_end[i] / lam[i]);
        series += term;
        quad += (w * err[i]).abs();
        if k == kmax || l == basis.lmax() {
            shell += term;
        }
    }
    let frozen = green_ball_radial_derivative(rho, &u, y)?;
    Ok(KernelValue::new(-(frozen + series), quad + shell.abs()))
}

/// `G_1 ~ Gamma_1 + H_1`.
pub fn script_g1(basis: &EigenBasis, x: &Point, y: &Point, t: f64, spec: &QuadratureSpec) -> Result<KernelValue> {
    let h = script_h1(basis, x, y, t, spec)?;
    let g = gamma1(basis, x, y, t)?;
    Ok(KernelValue::new(g.value + h.value, g.error + h.error))
}

/// `Gamma_1(x, y, t) - int_0^t int_S K_1(x, z, t - s) d_nu Gamma_1(z, y, s) dsigma_z ds`.
///
/// The sphere and time integrals are done mode by mode: `K_1(x, ., tau)` maps `r^l Y_l` to
/// `(|x| e^{-tau})^l Y_l`. The `1/lambda` part of the result sums to a Poisson kernel.
pub fn tilde_gamma1(basis: &EigenBasis, x: &Point, y: &Point, t: f64) -> Result<KernelValue> {
    check_pair(basis, x, y, t)?;
    let n = basis.n();
    let g = gamma1(basis, x, y, t)?;
    let (rx, ry) = (x.norm().min(1.0), y.norm());
    if rx == 0.0 || y.is_ball_boundary() {
        // only l = 0 survives at the origin; boundary y kills every term
        if y.is_ball_boundary() {
            return Ok(g);
        }
    }
    let c = direction(x).cos_angle(&direction(y));
    let a = basis.angular(c);
    let lam = basis.lambdas();
    let flux = basis.fluxes();
    let kmax = basis.kmax();
    let ryv = basis.radial_all(ry);
    let mut rest = 0.0;
    let mut shell = 0.0;
    for l in 0..=basis.lmax() {
        let lf = l as f64;
        let scale = rx.powi(l as i32) * a[l];
        if scale == 0.0 {
            continue;
        }
        for k in 1..=kmax {
            let i = l * kmax + k - 1;
            let d = lam[i] - lf;
            let term = flux[i] * ryv.values[i] * scale * (lf * (-lf * t).exp() / (lam[i] * d) - (-lam[i] * t).exp() / d);
            rest += term;
            if k == kmax {
                shell += term.abs() * kmax as f64;
            }
        }
    }
    let q = direction(x).scale(rx * ry * (-t).exp());
    let poisson = poisson_raw(n, &q, &direction(y));
    let lt = (rx * ry * (-t).exp()).powi(basis.lmax() as i32 + 1);
    let value = g.value + poisson + rest;
    Ok(KernelValue::new(value, g.error + shell + lt * a[0].abs() * 4.0 / (1.0 - rx * ry).max(1e-3)))
}

/// `K_1(x, y, t) - int Gamma_1(x, z, t) P_1(z, y) dz + int int int K_1 d_nu Gamma_1 P_1` for boundary `y`.
///
/// `int Gamma_1(x, z, t) P_1(z, y) dz = sum e^{-lambda t} phi(x) (-d_nu phi(y)) / lambda` by Green's
/// identity. The triple integral reduces to `-sum_l |x|^l A_l sum_k 2 (e^{-lt} - e^{-lambda t}) / (lambda - l)`,
/// whose slow part `sum_k 2 / lambda_{lk} = 1 / (2 (nu + 1))` is summed exactly.
pub fn tilde_h1(basis: &EigenBasis, x: &Point, y: &Point, t: f64) -> Result<KernelValue> {
    check_dims(x, y)?;
    same_dim(basis, x)?;
    require_in_ball(x)?;
    require_ball_boundary(y)?;
    basis.check_t(t)?;
    let n = basis.n();
    let rx = x.norm().min(1.0);
    let a = basis.angular(direction(x).cos_angle(y));
    let lam = basis.lambdas();
    let flux = basis.fluxes();
    let kmax = basis.kmax();
    let rxv = basis.radial_all(rx);
    let mut evolved = 0.0;
    let mut triple = 0.0;
    let mut shell = 0.0;
    for l in 0..=basis.lmax() {
        let lf = l as f64;
        let pw = rx.powi(l as i32);
        let mut inner = (-lf * t).exp() / (2.0 * nu_plus_one(n, l));
        for k in 1..=kmax {
            let i = l * kmax + k - 1;
            let e = (-lam[i] * t).exp();
            evolved += e * rxv.values[i] * flux[i] * a[l] / lam[i];
            let d = lam[i] - lf;
            let term = 2.0 * ((-lf * t).exp() * lf / (lam[i] * d) - e / d);
            inner += term;
            if k == kmax {
                shell += (pw * a[l] * term).abs() * kmax as f64;
            }
        }
        triple -= pw * a[l] * inner;
    }
    let ltail = (rx * (-t).exp()).powi(basis.lmax() as i32 + 1) * a[0].abs() * 4.0 / (1.0 - rx * (-t).exp()).max(1e-3);
    let value = k1(x, y, t)? - evolved + triple;
    Ok(KernelValue::new(value, shell + ltail + basis.flux_tail(t) / basis.lambda_cut()))
}

/// Pieces of the second approximation at one `(x, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ApproxParts {
    /// Dirichlet flow of `phi_i - Phi_b`.
    pub v: f64,
    /// Dynamical harmonic part.
    pub w: f64,
    /// `int_S P_1(x, y) (-d_nu v(y, t)) dsigma_y`.
    pub g_tilde: f64,
    pub error: f64,
}

/// `u = int_S tilde_H_1 phi_b + int_B tilde_Gamma_1 phi_i`, held as modal coefficients.
#[derive(Debug, Clone)]
pub struct ApproxSolution<'a> {
    basis: &'a EigenBasis,
    harmonics: Harmonics,
    /// Harmonic coefficients of `phi_b`.
    b: Vec<f64>,
    /// Dirichlet coefficients of `phi_i - Phi_b`.
    c: ModalCoefficients,
    /// `m_h = int (phi_i - Phi_b) r^l Y_h = sum_k c_hk flux_k / lambda_k`, summed exactly.
    m: Vec<f64>,
}

/// `int_B f(y) |y|^l Y_h(yhat) dy` for every harmonic `h`.
fn solid_moments(h: &Harmonics, f: &(dyn Fn(&Point) -> f64 + Sync), rule: &BallRule) -> Vec<f64> {
    let mut y = vec![0.0; h.len()];
    let mut m = vec![0.0; h.len()];
    for (u, wu) in rule.sphere.nodes.iter().zip(&rule.sphere.weights) {
        h.eval(u, &mut y);
        for (&r, &wr) in rule.radii.iter().zip(&rule.radial_weights) {
            let v = wu * wr * f(&u.scale(r));
            for (i, (mi, yi)) in m.iter_mut().zip(&y).enumerate() {
                *mi += v * yi * r.powi(h.degree(i) as i32);
            }
        }
    }
    m
}

/// `Phi_b(x) = sum b_lm |x|^l Y_lm(xhat)`.
fn harmonic_sum(h: &Harmonics, b: &[f64], x: &Point) -> f64 {
    let mut y = vec![0.0; h.len()];
    h.eval(&direction(x), &mut y);
    let r = x.norm();
    (0..h.len()).map(|i| b[i] * y[i] * r.powi(h.degree(i) as i32)).sum()
}

impl<'a> ApproxSolution<'a> {
    pub fn new(basis: &'a EigenBasis, phi_b: &BoundaryFunction, phi_i: &InteriorFunction, spec: &QuadratureSpec) -> Result<Self> {
        let n = basis.n();
        let harmonics = Harmonics::new(n, basis.lmax());
        let b = project_boundary(n, basis.lmax(), &|p| phi_b.eval(p), spec)?;
        let (hb, bb) = (&harmonics, &b);
        let f = |p: &Point| phi_i.eval(p) - harmonic_sum(hb, bb, p);
        let c = project_interior(basis, &f, None)?;
        let rule = BallRule::new(n, 2 * basis.resolving_radial_order(), projection_sphere_order(basis))?;
        let m = solid_moments(&harmonics, &f, &rule);
        Ok(ApproxSolution { basis, harmonics, b, c, m })
    }

    fn w_and_g(&self, coef: &[f64], x: &Point, t: f64) -> (f64, f64) {
        let basis = self.basis;
        let r = x.norm().min(1.0);
        let d = collapse(basis, coef, x);
        let lam = basis.lambdas();
        let flux = basis.fluxes();
        let kmax = basis.kmax();
        let mut y = vec![0.0; self.harmonics.len()];
        self.harmonics.eval(&direction(x), &mut y);
        let mut w = 0.0;
        for (i, yi) in y.iter().enumerate() {
            w += (self.b[i] + self.m[i]) * yi * (r * (-t).exp()).powi(self.harmonics.degree(i) as i32);
        }
        let mut g = 0.0;
        for (i, di) in d.iter().enumerate() {
            let l = (i / kmax) as f64;
            let s = di * flux[i] * r.powi(l as i32);
            let e = (-lam[i] * t).exp();
            // exp_mix minus its e^{-lt} / lambda part, which m carries
            w += s * ((-l * t).exp() * l / (lam[i] * (lam[i] - l)) - e / (lam[i] - l));
            g += s * e;
        }
        (w, g)
    }

    pub fn parts(&self, x: &Point, t: f64) -> Result<ApproxParts> {
        same_dim(self.basis, x)?;
        require_in_ball(x)?;
        if !(t >= 0.0) {
            return Err(KernelError::Domain(format!("t must be non-negative, got {t}")));
        }
        let v = if x.is_ball_boundary() { KernelValue::exact(0.0) } else { evolve(self.basis, &self.c, x, t)? };
        let (w, g) = self.w_and_g(&self.c.fine, x, t);
        let (wc, gc) = self.w_and_g(&self.c.coarse, x, t);
        Ok(ApproxParts { v: v.value, w, g_tilde: g, error: v.error + (w - wc).abs() + (g - gc).abs() })
    }

    pub fn value(&self, x: &Point, t: f64) -> Result<KernelValue> {
        let p = self.parts(x, t)?;
        Ok(KernelValue::new(p.v + p.w, p.error))
    }
}

/// `u(x, t)` of the second approximation.
pub fn approx_solution(
    basis: &EigenBasis,
    phi_b: &BoundaryFunction,
    phi_i: &InteriorFunction,
    x: &Point,
    t: f64,
    spec: &QuadratureSpec,
) -> Result<KernelValue> {
    basis.check_t(t)?;
    ApproxSolution::new(basis, phi_b, phi_i, spec)?.value(x, t)
}

/// `u = int_S G phi_b + int_B G phi_i` for `G = Gamma_1 + H_1`, held as modal coefficients.
/// The boundary part vanishes identically (see [`script_h1`]).
#[derive(Debug, Clone)]
pub struct ScriptSolution<'a> {
    basis: &'a EigenBasis,
    c: ModalCoefficients,
    /// Modes `(l, k)` carrying a coefficient above round-off; only these are convolved.
    active: Vec<usize>,
    time_spec: QuadratureSpec,
}

impl<'a> ScriptSolution<'a> {
    pub fn new(basis: &'a EigenBasis, phi_i: &InteriorFunction) -> Result<Self> {
        let c = project_interior(basis, &|p| phi_i.eval(p), None)?;
        let kmax = basis.kmax();
        let mut size = vec![0.0f64; basis.len()];
        for (j, (a, b)) in c.fine.iter().zip(&c.coarse).enumerate() {
            let i = c.harmonics.degree(j / kmax) * kmax + j % kmax;
            size[i] = size[i].max(a.abs()).max(b.abs());
        }
        let top = size.iter().cloned().fold(0.0, f64::max);
        let active = (0..basis.len()).filter(|&i| size[i] > 1e-13 * top).collect();
        Ok(ScriptSolution { basis, c, active, time_spec: QuadratureSpec::graded_to_end(12) })
    }

    /// `int_0^t e^{-lambda (t - s)} R'(r e^{-s}) ds` for the active modes, on the rule and its refinement.
    fn convolutions(&self, r: f64, t: f64) -> (Vec<f64>, Vec<f64>) {
        let basis = self.basis;
        let kmax = basis.kmax();
        let lam = basis.lambdas();
        let run = |spec: &QuadratureSpec| -> Vec<f64> {
            let rule = spec.rule(0.0, t);
            self.active
                .iter()
                .map(|&i| {
                    let (l, k) = (i / kmax, i % kmax + 1);
                    rule.nodes
                        .iter()
                        .zip(&rule.weights)
                        .map(|(s, w)| w * (-lam[i] * (t - s)).exp() * basis.radial_with_derivative(l, k, r * (-s).exp()).1)
                        .sum()
                })
                .collect()
        };
        let coarse = run(&self.time_spec);
        let fine = run(&self.time_spec.doubled());
        let err = coarse.iter().zip(&fine).map(|(a, b)| (a - b).abs()).collect();
        (fine, err)
    }

    /// `(Dirichlet flow, H_1 part)` at `(x, t)`.
    pub fn parts(&self, x: &Point, t: f64) -> Result<(KernelValue, KernelValue)> {
        same_dim(self.basis, x)?;
        require_in_ball(x)?;
        check_nonzero(x)?;
        let basis = self.basis;
        let v = evolve(basis, &self.c, x, t)?;
        let (conv, err) = self.convolutions(x.norm().min(1.0), t);
        let d = collapse(basis, &self.c.fine, x);
        let dc = collapse(basis, &self.c.coarse, x);
        let mut h = 0.0;
        let mut hc = 0.0;
        let mut q = 0.0;
        for (j, &i) in self.active.iter().enumerate() {
            h -= d[i] * conv[j];
            hc -= dc[i] * conv[j];
            q += (d[i] * err[j]).abs();
        }
        Ok((v, KernelValue::new(h, (h - hc).abs() + q)))
    }

    pub fn value(&self, x: &Point, t: f64) -> Result<KernelValue> {
        let (v, h) = self.parts(x, t)?;
        Ok(KernelValue::new(v.value + h.value, v.error + h.error))
    }
}

/// Finite-difference steps for residual measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stencil {
    pub h: f64,
    pub k: f64,
}

impl Default for Stencil {
    fn default() -> Self {
        Stencil { h: 1e-3, k: 1e-4 }
    }
}

/// `|d_t u - Laplace u|` at `(x, t)` by centered differences.
fn defect(u: &(dyn Fn(&Point, f64) -> Result<f64> + Sync), x: &Point, t: f64, st: Stencil) -> Result<f64> {
    let n = x.dim();
    let c = u(x, t)?;
    let dt = (u(x, t + st.k)? - u(x, t - st.k)?) / (2.0 * st.k);
    let mut lap = 0.0;
    for j in 0..n {
        let e = Point::axis(n, j, st.h);
        lap += u(&x.add(&e), t)? + u(&x.sub(&e), t)? - 2.0 * c;
    }
    Ok(dt - lap / (st.h * st.h))
}

/// One measured residual value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualRow {
    pub x: Point,
    pub t: f64,
    /// `F`, `Ftilde` or `Gtilde`.
    pub component: &'static str,
    pub residual: f64,
    /// Same quantity with doubled steps; the gap is a Richardson check.
    pub residual_coarse: f64,
    /// `|x|` below 0.1, where the `1/|x|^2` terms dominate.
    pub near_origin: bool,
}

/// Residual magnitudes over an `(x, t)` grid and their trend verdicts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub x_grid: Vec<Point>,
    /// Strictly decreasing.
    pub t_grid: Vec<f64>,
    pub stencil: Stencil,
    pub rows: Vec<ResidualRow>,
    /// `(component, verdict)`; a verdict holds when each value is at most twice its predecessor.
    pub verdicts: Vec<(String, bool)>,
}

impl ResidualReport {
    pub fn magnitude(&self, component: &str, xi: usize, ti: usize) -> Option<f64> {
        let x = self.x_grid.get(xi)?;
        let t = *self.t_grid.get(ti)?;
        self.rows.iter().find(|r| r.component == component && r.x == *x && r.t == t).map(|r| r.residual.abs())
    }

    pub fn all_verdicts(&self) -> bool {
        self.verdicts.iter().all(|(_, v)| *v)
    }

    /// CSV with header `x0,..,t,residual,component`.
    pub fn to_csv(&self) -> String {
        let n = self.x_grid.first().map_or(2, |p| p.dim());
        let mut s: String = (0..n).map(|k| format!("x{k},")).collect();
        s.push_str("t,residual,component\n");
        for r in &self.rows {
            for c in r.x.coords() {
                s.push_str(&format!("{c:.16e},"));
            }
            s.push_str(&format!("{:.16e},{:.16e},{}\n", r.t, r.residual.abs(), r.component));
        }
        s
    }
}

/// Each value at most twice its predecessor.
pub fn trend_holds(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] <= 2.0 * w[0])
}

fn validate_grids(x_grid: &[Point], t_grid: &[f64], forbid_origin: bool) -> Result<()> {
    if x_grid.is_empty() || t_grid.is_empty() {
        return Err(KernelError::InvalidParameter("grids must be nonempty".into()));
    }
    if !t_grid.windows(2).all(|w| w[1] < w[0]) || t_grid.iter().any(|&t| !(t > 0.0)) {
        return Err(KernelError::InvalidParameter("t-grid must be positive and strictly decreasing".into()));
    }
    for x in x_grid {
        require_in_ball(x)?;
        if x.is_ball_boundary() {
            return Err(KernelError::Domain("residual grid points must be interior".into()));
        }
        if forbid_origin && x.norm() == 0.0 {
            return Err(KernelError::OriginSingularity);
        }
    }
    Ok(())
}

fn sweep(
    basis: &EigenBasis,
    x_grid: &[Point],
    t_grid: &[f64],
    st: Stencil,
    f: &(dyn Fn(&Point, f64, Stencil) -> Result<Vec<(&'static str, f64)>> + Sync),
) -> Result<Vec<ResidualRow>> {
    let cells: Vec<(usize, usize)> = (0..x_grid.len()).flat_map(|i| (0..t_grid.len()).map(move |j| (i, j))).collect();
    let coarse_st = Stencil { h: 2.0 * st.h, k: 2.0 * st.k };
    let out = map_indexed(basis.execution(), cells.len(), |c| -> Result<Vec<ResidualRow>> {
        let (i, j) = cells[c];
        let (x, t) = (x_grid[i], t_grid[j]);
        let fine = f(&x, t, st)?;
        let coarse = f(&x, t, coarse_st)?;
        Ok(fine
            .into_iter()
            .zip(coarse)
            .map(|((component, residual), (_, rc))| ResidualRow {
                x,
                t,
                component,
                residual,
                residual_coarse: rc,
                near_origin: x.norm() < 0.1,
            })
            .collect())
    });
    let mut rows = Vec::new();
    for r in out {
        rows.extend(r?);
    }
    Ok(rows)
}

/// Measures `F = d_t u - Laplace u` for `u` built from `Gamma_1 + H_1`, with the `t`-trend verdict.
pub fn approx_residual_g1(
    basis: &EigenBasis,
    _phi_b: &BoundaryFunction,
    phi_i: &InteriorFunction,
    x_grid: &[Point],
    t_grid: &[f64],
    stencil: Stencil,
) -> Result<ResidualReport> {
    validate_grids(x_grid, t_grid, true)?;
    let sol = ScriptSolution::new(basis, phi_i)?;
    let u = |p: &Point, s: f64| sol.value(p, s).map(|v| v.value);
    let rows = sweep(basis, x_grid, t_grid, stencil, &|x, t, st| Ok(vec![("F", defect(&u, x, t, st)?)]))?;
    let mut report = ResidualReport { x_grid: x_grid.to_vec(), t_grid: t_grid.to_vec(), stencil, rows, verdicts: vec![] };
    let ok = (0..x_grid.len()).all(|i| {
        let v: Vec<f64> = (0..t_grid.len()).filter_map(|j| report.magnitude("F", i, j)).collect();
        trend_holds(&v)
    });
    report.verdicts.push(("F".into(), ok));
    Ok(report)
}

/// Measures the defect of the second approximation, split into `Gtilde` (evaluated directly)
/// and `Ftilde` (the rest). Verdicts: `Ftilde` along decreasing `|x|` for each `t`, `Gtilde`
/// along decreasing `t` for each `x`.
pub fn approx_residual_u(
    basis: &EigenBasis,
    phi_b: &BoundaryFunction,
    phi_i: &InteriorFunction,
    x_grid: &[Point],
    t_grid: &[f64],
    stencil: Stencil,
    spec: &QuadratureSpec,
) -> Result<ResidualReport> {
    validate_grids(x_grid, t_grid, false)?;
    let sol = ApproxSolution::new(basis, phi_b, phi_i, spec)?;
    let u = |p: &Point, s: f64| sol.value(p, s).map(|v| v.value);
    let rows = sweep(basis, x_grid, t_grid, stencil, &|x, t, st| {
        let d = defect(&u, x, t, st)?;
        let g = sol.parts(x, t)?.g_tilde;
        Ok(vec![("Ftilde", d - g), ("Gtilde", g)])
    })?;
    let mut report = ResidualReport { x_grid: x_grid.to_vec(), t_grid: t_grid.to_vec(), stencil, rows, verdicts: vec![] };
    let mut order: Vec<usize> = (0..x_grid.len()).collect();
    order.sort_by(|&a, &b| x_grid[b].norm().total_cmp(&x_grid[a].norm()));
    let f_ok = (0..t_grid.len()).all(|j| {
        let v: Vec<f64> = order.iter().filter_map(|&i| report.magnitude("Ftilde", i, j)).collect();
        trend_holds(&v)
    });
    let g_ok = (0..x_grid.len()).all(|i| {
        let v: Vec<f64> = (0..t_grid.len()).filter_map(|j| report.magnitude("Gtilde", i, j)).collect();
        trend_holds(&v)
    });
    report.verdicts.push(("Ftilde".into(), f_ok));
    report.verdicts.push(("Gtilde".into(), g_ok));
    Ok(report)
}

/// Default residual grids: `|x|` in {0.5, 0.25, 0.1, 0.05} along `e_1`, `t` in {0.4, 0.2, 0.1, 0.05}.
pub fn default_grids(n: usize) -> (Vec<Point>, Vec<f64>) {
    (
        [0.5, 0.25, 0.1, 0.05].iter().map(|&r| Point::axis(n, 0, r)).collect(),
        vec![0.4, 0.2, 0.1, 0.05],
    )
}

/// Default `t`-grid of the second approximation: the first approximation's grid plus `t = 0.3`,
/// where the `|x|` trend is read.
pub fn default_u_times() -> Vec<f64> {
    vec![0.4, 0.3, 0.2, 0.1, 0.05]
}

/// Default data for the second approximation: `phi_b = y_1^2` and `phi_i = Phi_b + (1 - |x|^2)^4`
/// with `Phi_b = 1/n + x_1^2 - |x|^2 / n` the harmonic extension. `phi_i - Phi_b` vanishes to fourth
/// order at the sphere, so its Dirichlet flux starts like `t^{3/2}`.
pub fn default_data() -> (BoundaryFunction, InteriorFunction) {
    let phi = |p: &Point| {
        let (n, r2) = (p.dim() as f64, p.norm_sq());
        1.0 / n + p.get(0) * p.get(0) - r2 / n + (1.0 - r2).powi(4)
    };
    // Laplace of (1 - r^2)^4 is 8 (1 - r^2)^2 (2 (n + 6) r^2 - n (1 - r^2) - 6 r^2) / ..., expanded:
    let lap = |p: &Point| {
        let (n, r2) = (p.dim() as f64, p.norm_sq());
        let q = 1.0 - r2;
        48.0 * r2 * q * q - 8.0 * n * q * q * q
    };
    (BoundaryFunction::smooth(|p| p.get(0) * p.get(0)), InteriorFunction::with_laplacian(phi, lap))
}

/// Time rule used by the first approximation's convolutions.
pub fn script_time_spec() -> QuadratureSpec {
    default_time_spec()
}

/// Default data for the first approximation: `phi_b = 0` and the first radial Dirichlet mode `Z_0(mu_01 |x|)`.
pub fn default_g1_data(n: usize) -> Result<(BoundaryFunction, InteriorFunction)> {
    let kind = Kind::for_dim(n);
    let mu = bessel_j_zero(kind.nu(0), 1)?;
    let phi = move |p: &Point| z(kind, 0, mu * p.norm());
    Ok((BoundaryFunction::constant(0.0), InteriorFunction::with_laplacian(phi, move |p| -mu * mu * phi(p))))
}
