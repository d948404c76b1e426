//! The five physics-informed benchmark problems.

pub mod eit;
pub mod fpp;
pub mod pet;
pub mod scara;
pub mod shape;
