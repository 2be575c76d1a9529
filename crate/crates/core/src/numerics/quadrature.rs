//! Interval, circle/sphere and ball quadrature rules.

use super::SpecialValue;
use crate::error::{KernelError, Result};
use crate::geometry::Point;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleKind {
    GaussLegendre,
    TrapezoidPeriodic,
    CompositeMidpoint,
}

/// Geometric panel grading toward an endpoint with an integrable singularity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grading {
    /// Grade toward `b` if true, toward `a` otherwise.
    pub toward_end: bool,
    pub ratio: f64,
    pub panels: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    pub kind: RuleKind,
    /// Node count (per panel when graded).
    pub order: usize,
    #[serde(default)]
    pub grading: Option<Grading>,
}

impl QuadratureSpec {
    pub fn gauss(order: usize) -> Self {
        QuadratureSpec { kind: RuleKind::GaussLegendre, order, grading: None }
    }

    pub fn trapezoid(order: usize) -> Self {
        QuadratureSpec { kind: RuleKind::TrapezoidPeriodic, order, grading: None }
    }

    /// Default for time convolutions that are singular as `s -> b`:
    /// 40 panels shrinking by 1/2, Gauss-Legendre nodes on each panel.
    pub fn graded_to_end(order: usize) -> Self {
        QuadratureSpec {
            kind: RuleKind::GaussLegendre,
            order,
            grading: Some(Grading { toward_end: true, ratio: 0.5, panels: 40 }),
        }
    }

    pub fn doubled(&self) -> Self {
        QuadratureSpec { order: 2 * self.order, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.order == 0 {
            return Err(KernelError::InvalidParameter("quadrature order must be positive".into()));
        }
        if let Some(g) = self.grading {
            if !(g.ratio > 0.0 && g.ratio < 1.0) || g.panels == 0 {
                return Err(KernelError::InvalidParameter(
                    "grading needs 0 < ratio < 1 and at least one panel".into(),
                ));
            }
        }
        Ok(())
    }

    /// Concrete nodes and weights on `[a, b]`.
    pub fn rule(&self, a: f64, b: f64) -> Rule {
        match self.grading {
            None => base_rule(self.kind, self.order, a, b),
            Some(g) => {
                let mut edges = Vec::with_capacity(g.panels + 1);
                let len = b - a;
                for j in 0..g.panels {
                    let w = len * g.ratio.powi(j as i32);
                    edges.push(if g.toward_end { b - w } else { a + w });
                }
                edges.push(if g.toward_end { b } else { a });
                if !g.toward_end {
                    edges.reverse();
                }
                let mut nodes = Vec::new();
                let mut weights = Vec::new();
                for p in edges.windows(2) {
                    let r = base_rule(self.kind, self.order, p[0], p[1]);
                    nodes.extend(r.nodes);
                    weights.extend(r.weights);
                }
                Rule { nodes, weights }
            }
        }
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec::gauss(32)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn apply<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

fn base_rule(kind: RuleKind, m: usize, a: f64, b: f64) -> Rule {
    let h = b - a;
    match kind {
        RuleKind::GaussLegendre => {
            let gl = gauss_legendre(m);
            Rule {
                nodes: gl.0.iter().map(|&x| a + 0.5 * h * (x + 1.0)).collect(),
                weights: gl.1.iter().map(|&w| 0.5 * h * w).collect(),
            }
        }
        RuleKind::TrapezoidPeriodic => Rule {
            nodes: (0..m).map(|j| a + h * j as f64 / m as f64).collect(),
            weights: vec![h / m as f64; m],
        },
        RuleKind::CompositeMidpoint => Rule {
            nodes: (0..m).map(|j| a + h * (j as f64 + 0.5) / m as f64).collect(),
            weights: vec![h / m as f64; m],
        },
    }
}

type GlPair = Arc<(Vec<f64>, Vec<f64>)>;

/// Gauss-Legendre nodes and weights on `[-1, 1]`, ascending, cached per order.
pub fn gauss_legendre(m: usize) -> GlPair {
    static CACHE: OnceLock<Mutex<HashMap<usize, GlPair>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = cache.lock().unwrap().get(&m) {
        return r.clone();
    }
    let r = Arc::new(compute_gauss_legendre(m));
    cache.lock().unwrap().insert(m, r.clone());
    r
}

fn compute_gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    let mf = m as f64;
    for i in 0..m.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=m {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pm = if m == 1 { z } else { p1 };
            let pm1 = if m == 1 { 1.0 } else { p0 };
            dp = mf * (z * pm - pm1) / (z * z - 1.0);
            let dz = pm / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        if m == 1 {
            z = 0.0;
            dp = 1.0;
        }
        x[i] = -z;
        x[m - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[m - 1 - i] = wi;
    }
    (x, w)
}

/// `int_a^b f` with an order-doubling error estimate.
pub fn integrate_interval<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<SpecialValue> {
    spec.validate()?;
    if !(a < b) {
        return Err(KernelError::InvalidParameter(format!("need a < b, got [{a}, {b}]")));
    }
    let mut run = |s: &QuadratureSpec| -> Result<f64> {
        let r = s.rule(a, b);
        let mut acc = 0.0;
        for (&x, &w) in r.nodes.iter().zip(&r.weights) {
            let v = f(x);
            if !v.is_finite() {
                return Err(KernelError::IntegrandFailure { node: x });
            }
            acc += w * v;
        }
        Ok(acc)
    };
    let coarse = run(spec)?;
    let fine = run(&spec.doubled())?;
    Ok(SpecialValue { value: fine, abs_error: (fine - coarse).abs() })
}

/// Nodes and weights on the unit circle or unit sphere.
#[derive(Debug, Clone)]
pub struct SphereRule {
    pub dim: usize,
    pub nodes: Vec<Point>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    /// `dim = 2`: `order` equispaced angles. `dim = 3`: `order` Gauss-Legendre
    /// nodes in `cos(polar)` times `2 * order` azimuths.
    pub fn new(dim: usize, order: usize) -> Result<Self> {
        if order == 0 {
            return Err(KernelError::InvalidParameter("sphere order must be positive".into()));
        }
        match dim {
            2 => {
                let w = 2.0 * PI / order as f64;
                let nodes = (0..order)
                    .map(|j| {
                        let a = w * j as f64;
                        Point::d2(a.cos(), a.sin())
                    })
                    .collect();
                Ok(SphereRule { dim, nodes, weights: vec![w; order] })
            }
            3 => {
                let gl = gauss_legendre(order);
                let naz = 2 * order;
                let waz = 2.0 * PI / naz as f64;
                let mut nodes = Vec::with_capacity(order * naz);
                let mut weights = Vec::with_capacity(order * naz);
                for (&c, &wc) in gl.0.iter().zip(&gl.1) {
                    let s = (1.0 - c * c).max(0.0).sqrt();
                    for j in 0..naz {
                        let a = waz * j as f64;
                        nodes.push(Point::d3(s * a.cos(), s * a.sin(), c));
                        weights.push(wc * waz);
                    }
                }
                Ok(SphereRule { dim, nodes, weights })
            }
            _ => Err(KernelError::InvalidParameter(format!("sphere dimension {dim}"))),
        }
    }

    /// Default rule: 256 nodes on the circle, 32 x 64 on the sphere.
    pub fn default_for(dim: usize) -> Result<Self> {
        SphereRule::new(dim, if dim == 2 { 256 } else { 32 })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(&Point) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(p, &w)| w * f(p)).sum()
    }
}

/// Product rule on the unit ball: Gauss-Legendre in radius times a sphere rule.
#[derive(Debug, Clone)]
pub struct BallRule {
    pub dim: usize,
    pub radii: Vec<f64>,
    /// Radial weights including the Jacobian `r^(n-1)`.
    pub radial_weights: Vec<f64>,
    pub sphere: SphereRule,
}

impl BallRule {
    pub fn new(dim: usize, radial_order: usize, sphere_order: usize) -> Result<Self> {
        let sphere = SphereRule::new(dim, sphere_order)?;
        if radial_order == 0 {
            return Err(KernelError::InvalidParameter("radial order must be positive".into()));
        }
        let r = base_rule(RuleKind::GaussLegendre, radial_order, 0.0, 1.0);
        let radial_weights = r
            .nodes
            .iter()
            .zip(&r.weights)
            .map(|(&x, &w)| w * x.powi(dim as i32 - 1))
            .collect();
        Ok(BallRule { dim, radii: r.nodes, radial_weights, sphere })
    }

    /// Defaults: 48 radial nodes with 256 (n=2) or 32 x 64 (n=3) angular nodes.
    pub fn default_for(dim: usize) -> Result<Self> {
        BallRule::new(dim, 48, if dim == 2 { 256 } else { 32 })
    }

    pub fn integrate<F: FnMut(&Point) -> f64>(&self, mut f: F) -> f64 {
        let mut total = 0.0;
        for (&r, &wr) in self.radii.iter().zip(&self.radial_weights) {
            let ring: f64 = self
                .sphere
                .nodes
                .iter()
                .zip(&self.sphere.weights)
                .map(|(p, &w)| w * f(&p.scale(r)))
                .sum();
            total += wr * ring;
        }
        total
    }
}

/// `int_{S^{n-1}} f` with `spec.order` as the sphere order and an order-doubling error estimate.
pub fn integrate_sphere<F: FnMut(&Point) -> f64>(dim: usize, spec: &QuadratureSpec, mut f: F) -> Result<SpecialValue> {
    spec.validate()?;
    let mut run = |order: usize| -> Result<f64> {
        let rule = SphereRule::new(dim, order)?;
        let mut acc = 0.0;
        for (p, &w) in rule.nodes.iter().zip(&rule.weights) {
            let v = f(p);
            if !v.is_finite() {
                return Err(KernelError::IntegrandFailure { node: p.get(0) });
            }
            acc += w * v;
        }
        Ok(acc)
    };
    let coarse = run(spec.order)?;
    let fine = run(2 * spec.order)?;
    Ok(SpecialValue { value: fine, abs_error: (fine - coarse).abs() })
}

/// `int_{B_1} f` on the product rule; both orders are doubled for the error estimate.
pub fn integrate_ball<F: FnMut(&Point) -> f64>(
    dim: usize,
    radial_order: usize,
    sphere_order: usize,
    mut f: F,
) -> Result<SpecialValue> {
    let mut run = |ro: usize, so: usize| -> Result<f64> {
        let rule = BallRule::new(dim, ro, so)?;
        let mut bad = None;
        let v = rule.integrate(|p| {
            let v = f(p);
            if !v.is_finite() && bad.is_none() {
                bad = Some(p.norm());
            }
            v
        });
        match bad {
            Some(node) => Err(KernelError::IntegrandFailure { node }),
            None => Ok(v),
        }
    };
    let coarse = run(radial_order, sphere_order)?;
    let fine = run(2 * radial_order, 2 * sphere_order)?;
    Ok(SpecialValue { value: fine, abs_error: (fine - coarse).abs() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exactness() {
        for m in [1, 2, 5, 8, 32, 64] {
            for deg in 0..(2 * m) {
                let got = integrate_once(&QuadratureSpec::gauss(m), 0.0, 1.0, |x| x.powi(deg as i32));
                let want = 1.0 / (deg as f64 + 1.0);
                assert!(((got - want) / want).abs() < 1e-13, "m={m} deg={deg}");
            }
        }
    }

    fn integrate_once<F: FnMut(f64) -> f64>(s: &QuadratureSpec, a: f64, b: f64, f: F) -> f64 {
        s.rule(a, b).apply(f)
    }

    #[test]
    fn interval_examples() {
        let v = integrate_interval(|x| x * x, 0.0, 1.0, &QuadratureSpec::gauss(8)).unwrap();
        assert!((v.value - 1.0 / 3.0).abs() < 1e-14);
        let v = integrate_interval(|_| 1.0, 0.0, 1.0, &QuadratureSpec::gauss(8)).unwrap();
        assert!((v.value - 1.0).abs() <= 4.0 * f64::EPSILON);
        let v = integrate_interval(|x| x.cos().powi(2), 0.0, 2.0 * PI, &QuadratureSpec::trapezoid(64))
            .unwrap();
        assert!((v.value - PI).abs() < 1e-13);
        let w: f64 = QuadratureSpec::trapezoid(64).rule(0.0, 2.0 * PI).weights.iter().sum();
        assert!((w - 2.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn nonfinite_sample_reports_node() {
        let e = integrate_interval(|x| 1.0 / (x - 0.5), 0.0, 1.0, &QuadratureSpec::trapezoid(2));
        assert!(matches!(e, Err(KernelError::IntegrandFailure { node }) if node == 0.5));
    }

    #[test]
    fn graded_rule_handles_endpoint_singularity() {
        let s = QuadratureSpec::graded_to_end(8);
        let v = integrate_interval(|x| (1.0 - x).powf(-0.5), 0.0, 1.0, &s).unwrap();
        assert!((v.value - 2.0).abs() < 1e-5, "{}", v.value);
        let w: f64 = s.rule(0.0, 3.0).weights.iter().sum();
        assert!((w - 3.0).abs() < 1e-13);
        let left = QuadratureSpec {
            grading: Some(Grading { toward_end: false, ratio: 0.5, panels: 40 }),
            ..s
        };
        let v = integrate_interval(|x| x.powf(-0.5), 0.0, 1.0, &left).unwrap();
        assert!((v.value - 2.0).abs() < 1e-5);
    }

    #[test]
    fn sphere_rules() {
        let c = SphereRule::new(2, 4).unwrap();
        assert!(c.weights.iter().all(|&w| (w - PI / 2.0).abs() < 1e-15));
        for order in [1, 3, 16, 32] {
            let s = SphereRule::new(3, order).unwrap();
            assert!((s.integrate(|_| 1.0) - 4.0 * PI).abs() < 1e-13);
            assert!(s.nodes.iter().all(|p| (p.norm() - 1.0).abs() < 1e-15));
        }
        let s = SphereRule::new(3, 16).unwrap();
        assert!((s.integrate(|p| p.get(2) * p.get(2)) - 4.0 * PI / 3.0).abs() < 1e-13);
        assert!(SphereRule::new(4, 3).is_err());
    }

    #[test]
    fn ball_rule_volume_and_moment() {
        for n in [2, 3] {
            let b = BallRule::new(n, 24, 16).unwrap();
            let vol = b.integrate(|_| 1.0);
            assert!((vol - crate::geometry::ball_volume(n)).abs() < 1e-13);
            let m2 = b.integrate(|p| p.norm_sq());
            let want = crate::geometry::sphere_area(n) / (n as f64 + 2.0);
            assert!((m2 - want).abs() < 1e-13);
        }
    }
}
