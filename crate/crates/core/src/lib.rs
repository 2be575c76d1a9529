//! Green's functions and heat kernels for the heat and Laplace equations with
//! dynamical boundary conditions on the half-space and the unit ball.

pub mod approx;
pub mod ball_heat;
pub mod ball_laplace;
pub mod dyn_eigen;
pub mod error;
pub mod geometry;
pub mod numerics;

pub use error::{KernelError, Result};
pub use geometry::Point;
pub mod par;
pub mod stochastic;
pub mod halfspace;
pub mod value;

pub use value::{BoundaryFunction, Field, InteriorFunction, KernelValue};
