//! Dirichlet heat kernel of the unit ball by eigen-series, and its boundary kernels.

pub mod basis;

pub use basis::{EigenBasis, EigenPair, EigenRow, RadialTable, Truncation};
pub mod kernels;

pub use kernels::{bound_h, bound_l, e1, e1_profile, f1, f1_profile, gamma1, h1, h1_profile, BoundaryProfile};
pub mod project;

pub use project::{evolve, project_boundary, project_interior, ModalCoefficients};
pub mod solutions;

pub use solutions::{
    corrector_phi1, decompose, decompose_reconstruct, dirichlet_dynamical_flat_solution, dirichlet_evolution, Decomposition,
};
