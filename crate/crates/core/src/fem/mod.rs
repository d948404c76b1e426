//! Shared 2D linear-triangle finite-element core.

mod assemble;
pub mod band;
pub mod material;
mod mesh;

use thiserror::Error;

pub use assemble::{
    assemble_elastic, assemble_scalar, current_density, element_fields, full_elastic_matrix,
    shape_gradients, solve_elastic, ElasticBc, ElasticSolution, ElasticSystem, ElementMaterial,
    GroundedSystem, ScalarSystem,
};
pub use band::{solve_spd, BandCholesky, SymBandMatrix};
pub use mesh::{build_mesh, Mesh, MeshShape};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FemError {
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("non-positive conductivity {value} in element {element}")]
    NonPositiveConductivity { element: usize, value: f64 },
    #[error("expected {expected} per-element values, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("invalid boundary condition: {0}")]
    InvalidBoundaryCondition(String),
    #[error("stiffness singular after boundary conditions (insufficient Dirichlet data)")]
    SingularAfterBc,
    #[error("matrix not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },
    #[error("solve did not reach the residual tolerance (relative residual {residual:e})")]
    NoConvergence { residual: f64 },
}

#[cfg(test)]
mod tests;
