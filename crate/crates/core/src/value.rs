//! Kernel values with error estimates, and callable data.

use crate::geometry::Point;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

/// A kernel evaluation and its estimated absolute error (quadrature plus series tail).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub value: f64,
    pub error: f64,
}

impl KernelValue {
    pub fn exact(value: f64) -> Self {
        KernelValue { value, error: 0.0 }
    }

    pub fn new(value: f64, error: f64) -> Self {
        KernelValue { value, error }
    }
}

/// A real function of one point, shareable across threads.
#[derive(Clone)]
pub struct Field(Arc<dyn Fn(&Point) -> f64 + Send + Sync>);

impl Field {
    pub fn new<F: Fn(&Point) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        Field(Arc::new(f))
    }

    pub fn constant(c: f64) -> Self {
        Field::new(move |_| c)
    }

    pub fn eval(&self, p: &Point) -> f64 {
        (self.0)(p)
    }
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Field(..)")
    }
}

/// Continuity class of boundary data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Smoothness {
    Continuous,
    Smooth,
}

/// Boundary data on the unit sphere.
#[derive(Debug, Clone)]
pub struct BoundaryFunction {
    pub f: Field,
    pub smoothness: Smoothness,
}

impl BoundaryFunction {
    pub fn smooth<F: Fn(&Point) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        BoundaryFunction { f: Field::new(f), smoothness: Smoothness::Smooth }
    }

    pub fn constant(c: f64) -> Self {
        BoundaryFunction { f: Field::constant(c), smoothness: Smoothness::Smooth }
    }

    pub fn eval(&self, p: &Point) -> f64 {
        self.f.eval(p)
    }
}

/// Interior data on the unit ball, optionally with its Laplacian.
#[derive(Debug, Clone)]
pub struct InteriorFunction {
    pub f: Field,
    pub laplacian: Option<Field>,
}

impl InteriorFunction {
    pub fn new<F: Fn(&Point) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        InteriorFunction { f: Field::new(f), laplacian: None }
    }

    pub fn with_laplacian<F, G>(f: F, lap: G) -> Self
    where
        F: Fn(&Point) -> f64 + Send + Sync + 'static,
        G: Fn(&Point) -> f64 + Send + Sync + 'static,
    {
        InteriorFunction { f: Field::new(f), laplacian: Some(Field::new(lap)) }
    }

    pub fn constant(c: f64) -> Self {
        InteriorFunction::with_laplacian(move |_| c, |_| 0.0)
    }

    pub fn eval(&self, p: &Point) -> f64 {
        self.f.eval(p)
    }
}

/// `exp(-1/(1-s^2))` bump of radius `a` centred at the origin, with its Laplacian.
pub fn bump(a: f64) -> InteriorFunction {
    let val = move |p: &Point| {
        let s2 = p.norm_sq() / (a * a);
        if s2 >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - s2)).exp()
        }
    };
    let lap = move |p: &Point| {
        let n = p.dim() as f64;
        let s2 = p.norm_sq() / (a * a);
        if s2 >= 1.0 {
            return 0.0;
        }
        // f = exp(g(q)), q = |x|^2/a^2, g = -1/(1-q)
        let u = 1.0 - s2;
        let g1 = -1.0 / (u * u);
        let g2 = -2.0 / (u * u * u);
        let f = (-1.0 / u).exp();
        let dq = 1.0 / (a * a);
        // Laplacian of h(q) with q = |x|^2/a^2: 2n dq h' + 4 q dq h''
        let h1 = f * g1;
        let h2 = f * (g1 * g1 + g2);
        2.0 * n * dq * h1 + 4.0 * s2 * dq * h2
    };
    InteriorFunction::with_laplacian(val, lap)
}

/// A function of `(x, t)` with its caloric defect `(d_t - Delta) f` when that is not zero.
#[derive(Clone)]
pub struct SpaceTimeFunction {
    pub f: Arc<dyn Fn(&Point, f64) -> f64 + Send + Sync>,
    pub defect: Option<Arc<dyn Fn(&Point, f64) -> f64 + Send + Sync>>,
}

impl SpaceTimeFunction {
    /// A solution of the heat equation.
    pub fn caloric<F: Fn(&Point, f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        SpaceTimeFunction { f: Arc::new(f), defect: None }
    }

    pub fn with_defect<F, D>(f: F, defect: D) -> Self
    where
        F: Fn(&Point, f64) -> f64 + Send + Sync + 'static,
        D: Fn(&Point, f64) -> f64 + Send + Sync + 'static,
    {
        SpaceTimeFunction { f: Arc::new(f), defect: Some(Arc::new(defect)) }
    }

    pub fn eval(&self, x: &Point, t: f64) -> f64 {
        (self.f)(x, t)
    }
}

impl fmt::Debug for SpaceTimeFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SpaceTimeFunction(defect: {})", self.defect.is_some())
    }
}
