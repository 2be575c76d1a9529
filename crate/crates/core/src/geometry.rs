//! Dimension-tagged points in R^2 and R^3.

use crate::error::{KernelError, Result};
use serde::{Deserialize, Serialize};

/// Tolerance on `|x| - 1` used to classify boundary points of the unit ball.
pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    n: usize,
    c: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BallClass {
    Interior,
    Boundary,
    Outside,
}

impl Point {
    pub fn new(coords: &[f64]) -> Result<Self> {
        match coords.len() {
            2 => Ok(Self::d2(coords[0], coords[1])),
            3 => Ok(Self::d3(coords[0], coords[1], coords[2])),
            k => Err(KernelError::InvalidParameter(format!(
                "points must have 2 or 3 coordinates, got {k}"
            ))),
        }
    }

    pub fn d2(x: f64, y: f64) -> Self {
        Point { n: 2, c: [x, y, 0.0] }
    }

    pub fn d3(x: f64, y: f64, z: f64) -> Self {
        Point { n: 3, c: [x, y, z] }
    }

    pub fn origin(n: usize) -> Self {
        Point { n, c: [0.0; 3] }
    }

    /// `s * e_k` in dimension `n`.
    pub fn axis(n: usize, k: usize, s: f64) -> Self {
        let mut c = [0.0; 3];
        c[k] = s;
        Point { n, c }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn coords(&self) -> &[f64] {
        &self.c[..self.n]
    }

    pub fn get(&self, k: usize) -> f64 {
        self.c[k]
    }

    pub fn with(&self, k: usize, v: f64) -> Self {
        let mut p = *self;
        p.c[k] = v;
        p
    }

    /// Last coordinate (x_n).
    pub fn last(&self) -> f64 {
        self.c[self.n - 1]
    }

    pub fn dot(&self, o: &Point) -> f64 {
        self.c[0] * o.c[0] + self.c[1] * o.c[1] + self.c[2] * o.c[2]
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist_sq(&self, o: &Point) -> f64 {
        let a = self.c[0] - o.c[0];
        let b = self.c[1] - o.c[1];
        let d = self.c[2] - o.c[2];
        a * a + b * b + d * d
    }

    pub fn dist(&self, o: &Point) -> f64 {
        self.dist_sq(o).sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Point {
            n: self.n,
            c: [self.c[0] * s, self.c[1] * s, self.c[2] * s],
        }
    }

    pub fn add(&self, o: &Point) -> Self {
        Point {
            n: self.n,
            c: [self.c[0] + o.c[0], self.c[1] + o.c[1], self.c[2] + o.c[2]],
        }
    }

    pub fn sub(&self, o: &Point) -> Self {
        Point {
            n: self.n,
            c: [self.c[0] - o.c[0], self.c[1] - o.c[1], self.c[2] - o.c[2]],
        }
    }

    /// Unit vector along `self`; `None` at the origin.
    pub fn unit(&self) -> Option<Self> {
        let r = self.norm();
        (r > 0.0).then(|| self.scale(1.0 / r))
    }

    /// Mirror image across `x_n = 0`.
    pub fn reflect(&self) -> Self {
        let mut p = *self;
        p.c[self.n - 1] = -p.c[self.n - 1];
        p
    }

    /// Kelvin inversion `x / |x|^2`; `None` at the origin.
    pub fn invert(&self) -> Option<Self> {
        let r2 = self.norm_sq();
        (r2 > 0.0).then(|| self.scale(1.0 / r2))
    }

    pub fn ball_class(&self) -> BallClass {
        let d = self.norm() - 1.0;
        if d.abs() <= BOUNDARY_TOL {
            BallClass::Boundary
        } else if d < 0.0 {
            BallClass::Interior
        } else {
            BallClass::Outside
        }
    }

    pub fn is_ball_boundary(&self) -> bool {
        self.ball_class() == BallClass::Boundary
    }

    /// Cosine of the angle between two points; 1 when either is the origin.
    pub fn cos_angle(&self, o: &Point) -> f64 {
        let d = self.norm() * o.norm();
        if d == 0.0 {
            1.0
        } else {
            (self.dot(o) / d).clamp(-1.0, 1.0)
        }
    }
}

pub(crate) fn check_dims(a: &Point, b: &Point) -> Result<usize> {
    if a.dim() != b.dim() {
        return Err(KernelError::InvalidParameter(format!(
            "dimension mismatch: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    check_n(a.dim())
}

pub(crate) fn check_n(n: usize) -> Result<usize> {
    if n == 2 || n == 3 {
        Ok(n)
    } else {
        Err(KernelError::InvalidParameter(format!("dimension must be 2 or 3, got {n}")))
    }
}

pub(crate) fn require_in_ball(p: &Point) -> Result<()> {
    if p.ball_class() == BallClass::Outside {
        return Err(KernelError::Domain(format!("|x| = {} > 1", p.norm())));
    }
    Ok(())
}

pub(crate) fn require_ball_boundary(p: &Point) -> Result<()> {
    if !p.is_ball_boundary() {
        return Err(KernelError::Domain(format!(
            "expected a boundary point, |y| = {}",
            p.norm()
        )));
    }
    Ok(())
}

pub(crate) fn require_positive_t(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(KernelError::Domain(format!("t must be positive, got {t}")));
    }
    Ok(())
}

/// Volume of the unit ball.
pub fn ball_volume(n: usize) -> f64 {
    match n {
        2 => std::f64::consts::PI,
        _ => 4.0 * std::f64::consts::PI / 3.0,
    }
}

/// Surface area of the unit sphere.
pub fn sphere_area(n: usize) -> f64 {
    match n {
        2 => 2.0 * std::f64::consts::PI,
        _ => 4.0 * std::f64::consts::PI,
    }
}
