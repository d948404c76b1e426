//! Physics-informed evolutionary optimization: optimizers, constraint
//! handling, ODE and FEM substrates, benchmark problems and explainability
//! tools.

pub mod algorithms;
pub mod archive;
pub mod constraints;
pub mod explain;
pub mod fem;
pub mod ode;
pub mod problem;
pub mod problems;
pub mod rng;
pub mod testfns;
pub mod types;

pub use problem::{EvalCounter, EvalError, Problem};
pub use types::{Bounds, EvalResult, Evaluation, SolutionVector, VectorError};
