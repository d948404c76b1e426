use rayon::prelude::*;
use serde::Serialize;

use super::ExplainError;
use crate::constraints::{penalized_objective, PenaltyModel};
use crate::problem::{attach_index, evaluate_unindexed, EvalError, Problem};

/// Caveat carried into every robustness report.
pub const ROBUSTNESS_NOTE: &str = "intervals vary one coordinate at a time with the others held fixed; interactions are not probed";

const BISECTIONS: usize = 60;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessIntervals {
    pub solution: Vec<f64>,
    pub objective: f64,
    pub delta: f64,
    /// `[low, high]` per coordinate.
    pub intervals: Vec<[f64; 2]>,
    pub note: &'static str,
}

fn objective(
    problem: &dyn Problem,
    model: &PenaltyModel,
    x: &[f64],
    fidelity: usize,
) -> Result<f64, EvalError> {
    let ev = evaluate_unindexed(problem, x, fidelity)?;
    Ok(penalized_objective(&attach_index(ev, fidelity, 0), model))
}

/// Walks from `x*_i` towards `end` in `scan` equal steps until the objective
/// moves by `delta` or more, then bisects the last bracket.
fn reach(
    problem: &dyn Problem,
    model: &PenaltyModel,
    x: &[f64],
    i: usize,
    end: f64,
    f0: f64,
    delta: f64,
    scan: usize,
    fidelity: usize,
) -> Result<f64, EvalError> {
    let start = x[i];
    let mut probe = x.to_vec();
    let mut eval_at = |v: f64| {
        probe[i] = v;
        objective(problem, model, &probe, fidelity).map(|f| (f - f0).abs() < delta)
    };
    let mut good = start;
    for k in 1..=scan {
        let v = start + (end - start) * k as f64 / scan as f64;
        if eval_at(v)? {
            good = v;
            continue;
        }
        let mut bad = v;
        for _ in 0..BISECTIONS {
            let mid = 0.5 * (good + bad);
            if mid == good || mid == bad {
                break;
            }
            if eval_at(mid)? {
                good = mid;
            } else {
                bad = mid;
            }
        }
        return Ok(good);
    }
    Ok(end)
}

/// Per-coordinate range around `x_star` over which the objective (with soft
/// penalties folded in) stays within `delta` of its value at `x_star`.
/// Coordinates are probed concurrently with fresh evaluations.
pub fn robustness_intervals(
    problem: &dyn Problem,
    x_star: &[f64],
    delta: f64,
    scan: usize,
    fidelity: usize,
) -> Result<RobustnessIntervals, ExplainError> {
    if !(delta > 0.0) || scan == 0 {
        return Err(ExplainError::InvalidArgument(
            "delta must be positive and scan at least 1".into(),
        ));
    }
    let bounds = problem.bounds();
    if x_star.len() != bounds.dim() {
        return Err(ExplainError::DimensionMismatch {
            expected: bounds.dim(),
            got: x_star.len(),
        });
    }
    if !bounds.contains(x_star) {
        return Err(ExplainError::InvalidArgument(
            "solution lies outside the bounds".into(),
        ));
    }
    let model = PenaltyModel::new(problem.soft_weights(), Default::default());
    let bad = |e: EvalError| ExplainError::InvalidArgument(format!("evaluation failed: {e}"));
    let f0 = objective(problem, &model, x_star, fidelity).map_err(bad)?;
    let intervals = (0..bounds.dim())
        .into_par_iter()
        .map(|i| {
            let lo = reach(
                problem,
                &model,
                x_star,
                i,
                bounds.lower()[i],
                f0,
                delta,
                scan,
                fidelity,
            )?;
            let hi = reach(
                problem,
                &model,
                x_star,
                i,
                bounds.upper()[i],
                f0,
                delta,
                scan,
                fidelity,
            )?;
            Ok([lo, hi])
        })
        .collect::<Result<Vec<_>, EvalError>>()
        .map_err(bad)?;
    Ok(RobustnessIntervals {
        solution: x_star.to_vec(),
        objective: f0,
        delta,
        intervals,
        note: ROBUSTNESS_NOTE,
    })
}
