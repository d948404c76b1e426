//! Genotype, bounds and evaluation-result types shared by every module.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VectorError {
    #[error("solution vector is empty")]
    Empty,
    #[error("non-finite entry {value} at coordinate {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("bounds length mismatch: lower has {lower}, upper has {upper}")]
    LengthMismatch { lower: usize, upper: usize },
    #[error("inverted bounds at coordinate {index}: {lower} > {upper}")]
    Inverted {
        index: usize,
        lower: f64,
        upper: f64,
    },
}

/// A bounded real vector; the genotype for every problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SolutionVector(Vec<f64>);

impl SolutionVector {
    pub fn new(values: Vec<f64>) -> Result<Self, VectorError> {
        if values.is_empty() {
            return Err(VectorError::Empty);
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(VectorError::NonFinite { index, value });
        }
        Ok(Self(values))
    }

    /// Wraps values that are known to be finite (e.g. produced by a repair).
    pub(crate) fn from_finite(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self(values)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Deref for SolutionVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Axis-aligned box constraint on the genotype.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, VectorError> {
        if lower.len() != upper.len() {
            return Err(VectorError::LengthMismatch {
                lower: lower.len(),
                upper: upper.len(),
            });
        }
        if lower.is_empty() {
            return Err(VectorError::Empty);
        }
        for (index, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() {
                return Err(VectorError::NonFinite { index, value: lo });
            }
            if !hi.is_finite() {
                return Err(VectorError::NonFinite { index, value: hi });
            }
            if lo > hi {
                return Err(VectorError::Inverted {
                    index,
                    lower: lo,
                    upper: hi,
                });
            }
        }
        Ok(Self { lower, upper })
    }

    /// The same interval `[lo, hi]` on every coordinate.
    pub fn uniform(dim: usize, lo: f64, hi: f64) -> Result<Self, VectorError> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| lo <= v && v <= hi)
    }

    /// Maps `x` into `[0, 1]^d`; zero-width coordinates map to 0.
    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(i, v)| {
                let w = self.width(i);
                if w > 0.0 {
                    ((v - self.lower[i]) / w).clamp(0.0, 1.0)
                } else {
                    0.0
                }
            })
            .collect()
    }
}

/// Objective plus constraint decomposition as returned by a problem, before
/// the evaluation counter and fidelity are attached.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Evaluation {
    pub objective: f64,
    pub hard_violations: Vec<f64>,
    pub soft_penalties: Vec<f64>,
}

impl Evaluation {
    pub fn unconstrained(objective: f64) -> Self {
        Self {
            objective,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub objective: f64,
    pub hard_violations: Vec<f64>,
    pub soft_penalties: Vec<f64>,
    pub fidelity: usize,
    pub eval_index: u64,
}

impl EvalResult {
    pub fn total_violation(&self) -> f64 {
        self.hard_violations.iter().fold(0.0, |a, v| a + v)
    }

    pub fn is_feasible(&self) -> bool {
        self.hard_violations.iter().all(|&v| v == 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_entries() {
        assert!(matches!(
            SolutionVector::new(vec![1.0, f64::NAN]),
            Err(VectorError::NonFinite { index: 1, .. })
        ));
        assert!(matches!(
            SolutionVector::new(vec![f64::INFINITY]),
            Err(VectorError::NonFinite { index: 0, .. })
        ));
        assert_eq!(SolutionVector::new(vec![]), Err(VectorError::Empty));
    }

    #[test]
    fn bounds_validation() {
        assert!(matches!(
            Bounds::new(vec![0.0, 2.0], vec![1.0, 1.0]),
            Err(VectorError::Inverted { index: 1, .. })
        ));
        assert!(matches!(
            Bounds::new(vec![0.0], vec![1.0, 1.0]),
            Err(VectorError::LengthMismatch { .. })
        ));
        let b = Bounds::uniform(2, -1.0, 1.0).unwrap();
        assert!(b.contains(&[0.0, 1.0]));
        assert!(!b.contains(&[0.0, 1.5]));
        assert_eq!(b.normalize(&[-1.0, 0.0]), vec![0.0, 0.5]);
    }
}
