//! Eigenpairs of the Laplacian on the unit ball with the boundary law
//! `d_nu psi = lambda psi`, and the heat kernel built from them.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::ball_heat::Truncation;
use crate::error::{KernelError, Result};
use crate::geometry::{check_dims, check_n, require_in_ball, sphere_area, Point};
use crate::numerics::bessel::{z, z_and_dz, zvals, Kind};
use crate::numerics::harmonics::{pair_factors, Harmonics};
use crate::numerics::roots::safeguarded_newton;
use crate::numerics::zeros::zero_table;
use crate::numerics::{BallRule, QuadratureSpec, SphereRule};
use crate::par::{map_indexed, Execution};
use crate::value::{BoundaryFunction, InteriorFunction, KernelValue};

/// One eigenpair; `k = 0` is the constant mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WentzellPair {
    pub l: usize,
    pub k: usize,
    pub lambda: f64,
    pub mu: f64,
    /// `R(r) = c Z_l(mu r)`, or `R = c` for the constant mode.
    pub norm: f64,
    pub boundary_value: f64,
    pub boundary_flux: f64,
}

/// One row of the exported table.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WentzellRow {
    pub n: usize,
    pub l: usize,
    pub k: usize,
    pub lambda: f64,
    pub norm_constant: f64,
    pub boundary_value: f64,
    pub boundary_flux: f64,
}

/// `F(mu) = Z'(mu) - mu Z(mu)` and `F'(mu)`.
fn secular(kind: Kind, l: usize, mu: f64) -> (f64, f64) {
    let v = zvals(kind, l, mu);
    (v.dz - mu * v.z, v.d2z - v.z - mu * v.dz)
}

/// `int_0^1 Z_l(mu r)^2 r^(n-1) dr` in closed form.
fn lommel(kind: Kind, l: usize, mu: f64) -> f64 {
    let (zv, dz) = z_and_dz(kind, l, mu);
    match kind {
        Kind::Cylindrical => {
            let lf = l as f64;
            0.5 * (dz * dz + (1.0 - lf * lf / (mu * mu)) * zv * zv)
        }
        Kind::Spherical => {
            let nu = l as f64 + 0.5;
            let d = dz + zv / (2.0 * mu);
            0.5 * (d * d + (1.0 - nu * nu / (mu * mu)) * zv * zv)
        }
    }
}

/// Brackets of the nonzero roots for degree `l`, from the Dirichlet zeros `zeros`.
fn brackets(l: usize, zeros: &[f64], count: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(count);
    if l > 0 {
        out.push((0.5 * (l as f64).sqrt().min(zeros[0]), zeros[0]));
    }
    for w in zeros.windows(2) {
        if out.len() == count {
            break;
        }
        out.push((w[0], w[1]));
    }
    out
}

fn roots_for(kind: Kind, l: usize, zeros: &[f64], count: usize) -> Result<Vec<f64>> {
    let br = brackets(l, zeros, count);
    if br.len() < count {
        return Err(KernelError::RootFindFailure { lo: 0.0, hi: *zeros.last().unwrap_or(&0.0) });
    }
    br.into_iter()
        .map(|(lo, hi)| safeguarded_newton(|m| secular(kind, l, m), lo, hi))
        .collect()
}

fn envelope(n: usize, lambda_cut: f64, t: f64) -> f64 {
    let nf = n as f64;
    let s = 2.0 * PI * t;
    (-0.5 * lambda_cut * t).exp() * (s.powf(-0.5 * nf) + s.powf(-0.5 * (nf - 1.0)))
}

fn shell_tail(n: usize, lmax: usize, t: f64) -> f64 {
    let area = sphere_area(n);
    let mut sum = 0.0;
    for l in lmax + 1.. {
        let mult = if n == 2 { 2.0 } else { (2 * l + 1) as f64 };
        let term = mult / area * (-((l - 1) as f64) * t).exp();
        sum += term;
        if term < 1e-18 * sum || l > lmax + 1_000_000 {
            break;
        }
    }
    sum
}

/// Eigenpairs with `l <= lmax` and `k <= kmax`, plus the constant mode.
#[derive(Debug, Clone)]
pub struct WentzellBasis {
    n: usize,
    kind: Kind,
    trunc: Truncation,
    pairs: Vec<WentzellPair>,
    lambda_cut: f64,
    t_min: f64,
    exec: Execution,
}

impl WentzellBasis {
    pub fn new(n: usize, trunc: Truncation) -> Result<Self> {
        check_n(n)?;
        if trunc.lmax > 100 || trunc.kmax > 200 || trunc.kmax == 0 {
            return Err(KernelError::InvalidParameter(format!(
                "truncation needs lmax <= 100 and 1 <= kmax <= 200, got {} and {}",
                trunc.lmax, trunc.kmax
            )));
        }
        let kind = Kind::for_dim(n);
        let zeros = zero_table(kind, trunc.lmax + 1, trunc.kmax + 1)?;
        let per_l = map_indexed(Execution::default(), trunc.lmax + 1, |l| roots_for(kind, l, &zeros[l], trunc.kmax));
        let mut pairs = Vec::new();
        let c0 = (n as f64 / (n as f64 + 1.0)).sqrt();
        pairs.push(WentzellPair { l: 0, k: 0, lambda: 0.0, mu: 0.0, norm: c0, boundary_value: c0, boundary_flux: 0.0 });
        for (l, roots) in per_l.into_iter().enumerate() {
            for (j, mu) in roots?.into_iter().enumerate() {
                let (zv, dz) = z_and_dz(kind, l, mu);
                let c = 1.0 / (lommel(kind, l, mu) + zv * zv).sqrt();
                pairs.push(WentzellPair {
                    l,
                    k: j + 1,
                    lambda: mu * mu,
                    mu,
                    norm: c,
                    boundary_value: c * zv,
                    boundary_flux: c * mu * dz,
                });
            }
        }
        // every omitted mode other than (l > lmax, k = 1) lies above one of these bracket ends
        let lambda_cut = zeros[0][trunc.kmax - 1].min(zeros[trunc.lmax + 1][0]).powi(2);
        let mut basis = WentzellBasis { n, kind, trunc, pairs, lambda_cut, t_min: 0.0, exec: Execution::default() };
        basis.t_min = basis.solve_t_min();
        Ok(basis)
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    fn solve_t_min(&self) -> f64 {
        let (mut lo, mut hi) = (1e-10f64, 1e3f64);
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if self.tail(mid) < crate::ball_heat::basis::TAIL_TARGET {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn truncation(&self) -> Truncation {
        self.trunc
    }

    /// Pairs in `(l, k)` order.
    pub fn pairs(&self) -> &[WentzellPair] {
        &self.pairs
    }

    /// Pairs sorted by `(lambda, l, k)`.
    pub fn sorted(&self) -> Vec<WentzellPair> {
        let mut p = self.pairs.clone();
        p.sort_by(|a, b| a.lambda.total_cmp(&b.lambda).then(a.l.cmp(&b.l)).then(a.k.cmp(&b.k)));
        p
    }

    /// Lower bound for every omitted eigenvalue except the boundary shell `(l > lmax, k = 1)`.
    pub fn lambda_cut(&self) -> f64 {
        self.lambda_cut
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    /// Bound on the omitted part of the series at any `x = y`.
    ///
    /// The modes `(l > lmax, k = 1)` live near the sphere with `lambda` close to `l`, so they are
    /// summed with `lambda_{l,1} >= l - 1` and `R(1)^2 <= 1`; the rest share the Gaussian envelope.
    pub fn tail(&self, t: f64) -> f64 {
        shell_tail(self.n, self.trunc.lmax, t) + envelope(self.n, self.lambda_cut, t)
    }

    pub fn check_t(&self, t: f64) -> Result<()> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(KernelError::Domain(format!("t must be positive, got {t}")));
        }
        if t >= self.t_min {
            return Ok(());
        }
        let target = crate::ball_heat::basis::TAIL_TARGET;
        let required_lmax = (self.trunc.lmax..100_000)
            .find(|&l| shell_tail(self.n, l, t) < 0.5 * target)
            .unwrap_or(100_000);
        let nf = self.n as f64;
        let need = (2.0 / t) * ((2.0 / target).ln() + 0.5 * nf * (1.0 / (2.0 * PI * t)).ln().max(0.0) + 2f64.ln());
        Err(KernelError::TruncationInsufficient {
            t,
            t_min: self.t_min,
            required_lmax,
            required_kmax: (need.max(0.0).sqrt() / PI + 1.0).ceil() as usize,
        })
    }

    /// `R(r)` for pair `p`.
    pub fn radial(&self, p: &WentzellPair, r: f64) -> f64 {
        if p.k == 0 {
            p.norm
        } else {
            p.norm * z(self.kind, p.l, p.mu * r)
        }
    }

    /// `R(r)`, `R'(r)` and `R''(r)` for pair `p` at `r > 0`.
    pub fn radial_derivatives(&self, p: &WentzellPair, r: f64) -> (f64, f64, f64) {
        if p.k == 0 {
            return (p.norm, 0.0, 0.0);
        }
        let v = zvals(self.kind, p.l, p.mu * r);
        (p.norm * v.z, p.norm * p.mu * v.dz, p.norm * p.mu * p.mu * v.d2z)
    }

    fn radial_all(&self, r: f64) -> Vec<f64> {
        self.pairs.iter().map(|p| self.radial(p, r)).collect()
    }

    pub fn rows(&self) -> Vec<WentzellRow> {
        self.sorted()
            .into_iter()
            .map(|p| WentzellRow {
                n: self.n,
                l: p.l,
                k: p.k,
                lambda: p.lambda,
                norm_constant: p.norm,
                boundary_value: p.boundary_value,
                boundary_flux: p.boundary_flux,
            })
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "n": self.n,
            "lmax": self.trunc.lmax,
            "kmax": self.trunc.kmax,
            "t_min": self.t_min,
            "modes": self.rows(),
        })
    }

    /// Number of sign changes of `F` on a fine grid over each bracket; all ones when no root is missed.
    pub fn root_counts(&self, l: usize) -> Result<Vec<usize>> {
        let zeros = zero_table(self.kind, l, self.trunc.kmax + 1)?;
        let count = self.trunc.kmax;
        Ok(brackets(l, &zeros[l], count)
            .into_iter()
            .map(|(lo, hi)| {
                let m = 400;
                let mut changes = 0;
                let mut prev = secular(self.kind, l, lo + 1e-9 * (hi - lo)).0;
                for j in 1..=m {
                    let x = lo + (hi - lo) * (j as f64 / m as f64) * (1.0 - 2e-9) + 1e-9 * (hi - lo);
                    let cur = secular(self.kind, l, x).0;
                    if cur.signum() != prev.signum() && cur != 0.0 {
                        changes += 1;
                    }
                    prev = cur;
                }
                changes
            })
            .collect())
    }
}

/// `G_1(x, y, t) = sum e^{-lambda t} psi(x) psi(y)`; `x` and `y` may lie on the sphere.
pub fn g1_dyn(basis: &WentzellBasis, x: &Point, y: &Point, t: f64) -> Result<KernelValue> {
    let n = check_dims(x, y)?;
    if n != basis.n {
        return Err(KernelError::InvalidParameter(format!("point has dimension {n} but the basis has {}", basis.n)));
    }
    require_in_ball(x)?;
    require_in_ball(y)?;
    basis.check_t(t)?;
    let rx = basis.radial_all(x.norm().min(1.0));
    let ry = basis.radial_all(y.norm().min(1.0));
    let mut a = vec![0.0; basis.trunc.lmax + 1];
    pair_factors(n, x.cos_angle(y).clamp(-1.0, 1.0), &mut a);
    let mut total = 0.0;
    for (i, p) in basis.pairs.iter().enumerate() {
        total += (-p.lambda * t).exp() * (rx[i] * ry[i]) * a[p.l];
    }
    Ok(KernelValue::new(total, basis.tail(t)))
}

/// `G_1(x, ., t)` with the `x` factors folded in, for sweeps over `y`.
#[derive(Debug, Clone)]
pub struct G1DynSection<'a> {
    basis: &'a WentzellBasis,
    x_hat: Option<Point>,
    weights: Vec<f64>,
    tail: f64,
}

impl<'a> G1DynSection<'a> {
    pub fn new(basis: &'a WentzellBasis, x: &Point, t: f64) -> Result<Self> {
        if x.dim() != basis.n {
            return Err(KernelError::InvalidParameter("dimension mismatch".into()));
        }
        require_in_ball(x)?;
        basis.check_t(t)?;
        let rx = basis.radial_all(x.norm().min(1.0));
        let weights = basis.pairs.iter().zip(&rx).map(|(p, r)| (-p.lambda * t).exp() * r).collect();
        Ok(G1DynSection { basis, x_hat: x.unit(), weights, tail: basis.tail(t) })
    }

    /// Radial sums `b_l(r)` shared by every `y` with `|y| = r`.
    pub fn ring(&self, r: f64) -> Vec<f64> {
        let mut b = vec![0.0; self.basis.trunc.lmax + 1];
        for (p, w) in self.basis.pairs.iter().zip(&self.weights) {
            b[p.l] += w * self.basis.radial(p, r);
        }
        b
    }

    /// Value at `y` from the ring sums of `|y|`.
    pub fn eval_on_ring(&self, ring: &[f64], y: &Point) -> f64 {
        let c = match (&self.x_hat, y.unit()) {
            (Some(a), Some(b)) => a.dot(&b).clamp(-1.0, 1.0),
            _ => 1.0,
        };
        let mut a = vec![0.0; ring.len()];
        pair_factors(self.basis.n, c, &mut a);
        ring.iter().zip(&a).map(|(b, a)| b * a).sum()
    }

    pub fn eval(&self, y: &Point) -> KernelValue {
        KernelValue::new(self.eval_on_ring(&self.ring(y.norm().min(1.0)), y), self.tail)
    }

    /// `(int_B G_1(x, y, t) dy, int_S G_1(x, y, t) dsigma_y)` on a product rule.
    pub fn integrate(&self, rule: &BallRule) -> (f64, f64) {
        let rings = map_indexed(self.basis.exec, rule.radii.len(), |j| {
            let r = rule.radii[j];
            let b = self.ring(r);
            rule.sphere.integrate(|u| self.eval_on_ring(&b, &u.scale(r)))
        });
        let vol = rings.iter().zip(&rule.radial_weights).map(|(v, w)| v * w).sum();
        let b = self.ring(1.0);
        (vol, rule.sphere.integrate(|u| self.eval_on_ring(&b, u)))
    }
}

/// Coefficients `<phi_i, psi>_B + <phi_b, psi>_S` of a data pair, at two radial resolutions.
#[derive(Debug, Clone)]
pub struct DynCoefficients {
    harmonics: Harmonics,
    /// `fine[i][m]` for pair `i` and harmonic `m` of its degree.
    fine: Vec<Vec<f64>>,
    coarse: Vec<Vec<f64>>,
    l1: f64,
}

impl DynCoefficients {
    /// Coefficient of the constant mode.
    pub fn constant(&self) -> f64 {
        self.fine[0][0]
    }

    /// `int_B u dx + int_S u dsigma` for the truncated series at time `t`, mode by mode.
    pub fn combined_integral(&self, basis: &WentzellBasis, t: f64) -> f64 {
        let area = sphere_area(basis.n);
        let rule = QuadratureSpec::gauss(400).rule(0.0, 1.0);
        basis
            .pairs
            .iter()
            .zip(&self.fine)
            .map(|(p, a)| {
                let radial = rule.apply(|r| basis.radial(p, r) * r.powi(basis.n as i32 - 1));
                let angular: f64 = if p.l == 0 { a[0] * area.sqrt() } else { 0.0 };
                (-p.lambda * t).exp() * angular * (radial + p.boundary_value)
            })
            .sum()
    }
}

fn dyn_project(
    basis: &WentzellBasis,
    phi_i: &InteriorFunction,
    phi_b: &BoundaryFunction,
    radial_order: usize,
    sphere: &SphereRule,
    ys: &[f64],
    h: &Harmonics,
) -> Result<(Vec<Vec<f64>>, f64)> {
    let len = h.len();
    let rule = QuadratureSpec::gauss(radial_order).rule(0.0, 1.0);
    let rings = map_indexed(basis.exec, radial_order, |j| {
        let r = rule.nodes[j];
        let mut p = vec![0.0; len];
        let mut mass = 0.0;
        for (q, (u, w)) in sphere.nodes.iter().zip(&sphere.weights).enumerate() {
            let v = phi_i.eval(&u.scale(r));
            mass += w * v.abs();
            for (ph, y) in p.iter_mut().zip(&ys[q * len..(q + 1) * len]) {
                *ph += w * v * y;
            }
        }
        (p, mass, basis.radial_all(r))
    });
    let mut b = vec![0.0; len];
    let mut l1 = 0.0;
    for (q, (u, w)) in sphere.nodes.iter().zip(&sphere.weights).enumerate() {
        let v = phi_b.eval(u);
        l1 += w * v.abs();
        for (bh, y) in b.iter_mut().zip(&ys[q * len..(q + 1) * len]) {
            *bh += w * v * y;
        }
    }
    let mut out: Vec<Vec<f64>> = basis.pairs.iter().map(|p| vec![0.0; h.count_of(p.l)]).collect();
    for (j, (p, mass, rt)) in rings.iter().enumerate() {
        let wr = rule.weights[j] * rule.nodes[j].powi(basis.n as i32 - 1);
        l1 += wr * mass;
        for (i, pair) in basis.pairs.iter().enumerate() {
            let off = h.offset(pair.l);
            for (m, c) in out[i].iter_mut().enumerate() {
                *c += wr * p[off + m] * rt[i];
            }
        }
    }
    for (i, pair) in basis.pairs.iter().enumerate() {
        let off = h.offset(pair.l);
        for (m, c) in out[i].iter_mut().enumerate() {
            *c += b[off + m] * pair.boundary_value;
        }
    }
    if out.iter().flatten().any(|v| !v.is_finite()) {
        return Err(KernelError::IntegrandFailure { node: f64::NAN });
    }
    Ok((out, l1))
}

/// Projects a data pair on the basis; `spec.order` sets the radial rule (refined by doubling).
pub fn dyn_coefficients(
    basis: &WentzellBasis,
    phi_i: &InteriorFunction,
    phi_b: &BoundaryFunction,
    spec: &QuadratureSpec,
) -> Result<DynCoefficients> {
    spec.validate()?;
    let n = basis.n;
    let lmax = basis.trunc.lmax;
    let h = Harmonics::new(n, lmax);
    let order = if n == 2 { (2 * lmax + 2).max(256) } else { (lmax + 2).max(32) };
    let sphere = SphereRule::new(n, order)?;
    let len = h.len();
    let mut ys = vec![0.0; sphere.len() * len];
    for (q, u) in sphere.nodes.iter().enumerate() {
        h.eval(u, &mut ys[q * len..(q + 1) * len]);
    }
    let mu_max = basis.pairs.iter().map(|p| p.mu).fold(0.0, f64::max);
    let ro = spec.order.max((0.6 * mu_max).ceil() as usize + 16);
    let (coarse, _) = dyn_project(basis, phi_i, phi_b, ro, &sphere, &ys, &h)?;
    let (fine, l1) = dyn_project(basis, phi_i, phi_b, 2 * ro, &sphere, &ys, &h)?;
    Ok(DynCoefficients { harmonics: h, fine, coarse, l1 })
}

/// `sum e^{-lambda t} a psi(x)` from a precomputed coefficient table.
pub fn dyn_evaluate(basis: &WentzellBasis, coeffs: &DynCoefficients, x: &Point, t: f64) -> Result<KernelValue> {
    if x.dim() != basis.n {
        return Err(KernelError::InvalidParameter("dimension mismatch".into()));
    }
    require_in_ball(x)?;
    basis.check_t(t)?;
    let h = &coeffs.harmonics;
    let mut y = vec![0.0; h.len()];
    h.eval(&x.unit().unwrap_or_else(|| Point::axis(x.dim(), 0, 1.0)), &mut y);
    let rx = basis.radial_all(x.norm().min(1.0));
    let sum = |c: &[Vec<f64>]| -> f64 {
        basis
            .pairs
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let off = h.offset(p.l);
                let ang: f64 = c[i].iter().enumerate().map(|(m, a)| a * y[off + m]).sum();
                (-p.lambda * t).exp() * rx[i] * ang
            })
            .sum()
    };
    let (fine, coarse) = (sum(&coeffs.fine), sum(&coeffs.coarse));
    Ok(KernelValue::new(fine, (fine - coarse).abs() + basis.tail(t) * coeffs.l1))
}

/// Solution of the heat equation with the dynamical boundary law for data `(phi_i, phi_b)`.
pub fn dyn_solution(
    basis: &WentzellBasis,
    phi_i: &InteriorFunction,
    phi_b: &BoundaryFunction,
    x: &Point,
    t: f64,
    spec: &QuadratureSpec,
) -> Result<KernelValue> {
    basis.check_t(t)?;
    let c = dyn_coefficients(basis, phi_i, phi_b, spec)?;
    dyn_evaluate(basis, &c, x, t)
}

/// `(int_B phi_i + int_S phi_b) / (|B| + |S|)`, the long-time limit of [`dyn_solution`].
pub fn combined_average(n: usize, phi_i: &InteriorFunction, phi_b: &BoundaryFunction) -> Result<f64> {
    let rule = BallRule::default_for(n)?;
    let vol = rule.integrate(|p| phi_i.eval(p));
    let surf = SphereRule::default_for(n)?.integrate(|u| phi_b.eval(u));
    let area = sphere_area(n);
    Ok((vol + surf) / (area / n as f64 + area))
}
