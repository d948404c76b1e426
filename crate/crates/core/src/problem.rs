//! The evaluation contract every optimization problem implements.

use thiserror::Error;

use crate::types::{Bounds, EvalResult, Evaluation, SolutionVector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("fidelity level {level} not supported (problem has {available})")]
    UnknownFidelity { level: usize, available: usize },
    #[error("non-finite input at coordinate {index}")]
    NonFiniteInput { index: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{problem}: {message}")]
    Problem { problem: String, message: String },
}

impl EvalError {
    pub fn problem(problem: &str, message: impl std::fmt::Display) -> Self {
        Self::Problem {
            problem: problem.to_string(),
            message: message.to_string(),
        }
    }
}

/// Objective, constraints, bounds, fidelity levels and optional seed solutions
/// of one optimization problem. All objectives are minimized.
pub trait Problem: Send + Sync {
    fn id(&self) -> &str;

    fn bounds(&self) -> &Bounds;

    fn dim(&self) -> usize {
        self.bounds().dim()
    }

    /// Number of fidelity levels; level 0 is the cheapest.
    fn fidelity_levels(&self) -> usize {
        1
    }

    fn hard_constraint_names(&self) -> Vec<String> {
        Vec::new()
    }

    fn soft_constraint_names(&self) -> Vec<String> {
        Vec::new()
    }

    /// Weights of the soft penalties, aligned with `soft_constraint_names`.
    fn soft_weights(&self) -> Vec<f64> {
        vec![1.0; self.soft_constraint_names().len()]
    }

    /// Known good starting points (analytic solutions, expert layouts).
    fn seeds(&self) -> Vec<SolutionVector> {
        Vec::new()
    }

    /// Evaluates `x` at `fidelity`. Must be a pure function of its inputs.
    fn evaluate_raw(&self, x: &[f64], fidelity: usize) -> Result<Evaluation, EvalError>;
}

/// Monotone evaluation counter owned by one run.
#[derive(Debug, Default, Clone)]
pub struct EvalCounter {
    next: u64,
}

impl EvalCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self) -> u64 {
        self.next
    }

    pub fn next_index(&mut self) -> u64 {
        let i = self.next;
        self.next += 1;
        i
    }
}

fn check_input(problem: &dyn Problem, x: &[f64], fidelity: usize) -> Result<(), EvalError> {
    if fidelity >= problem.fidelity_levels() {
        return Err(EvalError::UnknownFidelity {
            level: fidelity,
            available: problem.fidelity_levels(),
        });
    }
    if x.len() != problem.dim() {
        return Err(EvalError::DimensionMismatch {
            expected: problem.dim(),
            got: x.len(),
        });
    }
    if let Some(index) = x.iter().position(|v| !v.is_finite()) {
        return Err(EvalError::NonFiniteInput { index });
    }
    Ok(())
}

/// Checked evaluation without touching a counter; used for concurrent
/// population evaluation where indices are assigned afterwards in order.
pub fn evaluate_unindexed(
    problem: &dyn Problem,
    x: &[f64],
    fidelity: usize,
) -> Result<Evaluation, EvalError> {
    check_input(problem, x, fidelity)?;
    let ev = problem.evaluate_raw(x, fidelity)?;
    if !ev.objective.is_finite() {
        return Err(EvalError::problem(
            problem.id(),
            format!("non-finite objective {}", ev.objective),
        ));
    }
    if ev
        .hard_violations
        .iter()
        .chain(&ev.soft_penalties)
        .any(|v| !v.is_finite() || *v < 0.0)
    {
        return Err(EvalError::problem(
            problem.id(),
            "violations must be finite and non-negative",
        ));
    }
    Ok(ev)
}

pub fn attach_index(ev: Evaluation, fidelity: usize, eval_index: u64) -> EvalResult {
    EvalResult {
        objective: ev.objective,
        hard_violations: ev.hard_violations,
        soft_penalties: ev.soft_penalties,
        fidelity,
        eval_index,
    }
}

/// Evaluates `x` and stamps the result with the next counter index.
pub fn evaluate(
    problem: &dyn Problem,
    x: &[f64],
    fidelity: usize,
    counter: &mut EvalCounter,
) -> Result<EvalResult, EvalError> {
    let ev = evaluate_unindexed(problem, x, fidelity)?;
    Ok(attach_index(ev, fidelity, counter.next_index()))
}
