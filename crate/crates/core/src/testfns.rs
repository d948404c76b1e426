//! Cheap analytic problems for optimizer sanity checks.

use serde::{Deserialize, Serialize};

use crate::problem::{EvalError, Problem};
use crate::types::{Bounds, Evaluation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalyticKind {
    Sphere,
    Rosenbrock,
    Rastrigin,
}

#[derive(Debug, Clone)]
pub struct AnalyticProblem {
    kind: AnalyticKind,
    bounds: Bounds,
}

impl AnalyticProblem {
    pub fn new(kind: AnalyticKind, dim: usize, lo: f64, hi: f64) -> Self {
        let bounds = Bounds::uniform(dim.max(1), lo, hi).expect("valid analytic bounds");
        Self { kind, bounds }
    }

    pub fn sphere(dim: usize) -> Self {
        Self::new(AnalyticKind::Sphere, dim, -5.0, 5.0)
    }

    pub fn rosenbrock(dim: usize) -> Self {
        Self::new(AnalyticKind::Rosenbrock, dim, -5.0, 10.0)
    }

    pub fn rastrigin(dim: usize) -> Self {
        Self::new(AnalyticKind::Rastrigin, dim, -5.12, 5.12)
    }

    pub fn kind(&self) -> AnalyticKind {
        self.kind
    }
}

pub fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

pub fn rosenbrock(x: &[f64]) -> f64 {
    x.windows(2)
        .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
        .sum()
}

pub fn rastrigin(x: &[f64]) -> f64 {
    use std::f64::consts::TAU;
    10.0 * x.len() as f64
        + x.iter()
            .map(|v| v * v - 10.0 * (TAU * v).cos())
            .sum::<f64>()
}

impl Problem for AnalyticProblem {
    fn id(&self) -> &str {
        match self.kind {
            AnalyticKind::Sphere => "sphere",
            AnalyticKind::Rosenbrock => "rosenbrock",
            AnalyticKind::Rastrigin => "rastrigin",
        }
    }

    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn evaluate_raw(&self, x: &[f64], _fidelity: usize) -> Result<Evaluation, EvalError> {
        let f = match self.kind {
            AnalyticKind::Sphere => sphere(x),
            AnalyticKind::Rosenbrock => rosenbrock(x),
            AnalyticKind::Rastrigin => rastrigin(x),
        };
        Ok(Evaluation::unconstrained(f))
    }
}
