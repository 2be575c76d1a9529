//! Special functions and quadrature rules.

pub mod bessel;
pub mod harmonics;
pub mod legendre;
pub mod quadrature;
pub mod roots;
pub mod zeros;

pub use bessel::bessel_j;
pub use legendre::legendre_p;
pub use quadrature::{integrate_ball, integrate_interval, integrate_sphere, BallRule, QuadratureSpec, Rule, RuleKind, SphereRule};
pub use zeros::bessel_j_zero;

use serde::{Deserialize, Serialize};

/// A computed value with an estimate of its absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpecialValue {
    pub value: f64,
    pub abs_error: f64,
}
