//! Hard/soft constraint evaluation, penalty aggregation, feasibility-rule
//! comparison and boundary repair.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::rng::RngStream;
use crate::types::{Bounds, EvalResult, SolutionVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundsPolicy {
    Clamp,
    #[default]
    Reflect,
    Resample,
}

/// How hard violations enter selection.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum HardMode {
    /// Feasible beats infeasible; infeasible ordered by total violation.
    #[default]
    FeasibilityRules,
    /// Violations folded into the objective as `R * sum(violations)`. When
    /// `coefficient` is unset the run estimates it from generation 0.
    StaticPenalty { coefficient: Option<f64> },
}

/// Multiplier applied to the generation-0 objective scale when the static
/// penalty coefficient is estimated.
pub const STATIC_PENALTY_SCALE: f64 = 1e3;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PenaltyModel {
    pub soft_weights: Vec<f64>,
    pub hard_mode: HardMode,
}

impl PenaltyModel {
    pub fn new(soft_weights: Vec<f64>, hard_mode: HardMode) -> Self {
        assert!(
            soft_weights.iter().all(|w| w.is_finite() && *w >= 0.0),
            "soft weights must be finite and non-negative"
        );
        Self {
            soft_weights,
            hard_mode,
        }
    }

    fn soft_weight(&self, k: usize) -> f64 {
        self.soft_weights.get(k).copied().unwrap_or(1.0)
    }

    /// Fixes an unset static-penalty coefficient to `1e3 * scale`, where scale
    /// is the mean absolute objective of `generation0` (1 if that is zero).
    pub fn resolve_static_coefficient(&mut self, generation0: &[EvalResult]) {
        if let HardMode::StaticPenalty { coefficient: None } = self.hard_mode {
            let n = generation0.len().max(1) as f64;
            let mut scale = generation0.iter().map(|r| r.objective.abs()).sum::<f64>() / n;
            if !(scale.is_finite() && scale > 0.0) {
                scale = 1.0;
            }
            self.hard_mode = HardMode::StaticPenalty {
                coefficient: Some(STATIC_PENALTY_SCALE * scale),
            };
        }
    }

    fn static_coefficient(&self) -> Option<f64> {
        match self.hard_mode {
            HardMode::FeasibilityRules => None,
            HardMode::StaticPenalty { coefficient } => {
                Some(coefficient.unwrap_or(STATIC_PENALTY_SCALE))
            }
        }
    }
}

/// `objective + sum_k w_k soft_k`, plus `R * sum(hard)` in static-penalty mode.
pub fn penalized_objective(result: &EvalResult, model: &PenaltyModel) -> f64 {
    let soft: f64 = result
        .soft_penalties
        .iter()
        .enumerate()
        .map(|(k, p)| model.soft_weight(k) * p)
        .sum();
    let hard = model
        .static_coefficient()
        .map_or(0.0, |r| r * result.total_violation());
    result.objective + soft + hard
}

/// Total order used for every selection decision. `Less` means `a` is preferred.
pub fn lexicographic_compare(a: &EvalResult, b: &EvalResult, model: &PenaltyModel) -> Ordering {
    let primary = match model.hard_mode {
        HardMode::FeasibilityRules => {
            let (va, vb) = (a.total_violation(), b.total_violation());
            match (va == 0.0, vb == 0.0) {
                (true, false) => Ordering::Less,
                (false, true) => Ordering::Greater,
                (false, false) => va.total_cmp(&vb),
                (true, true) => {
                    penalized_objective(a, model).total_cmp(&penalized_objective(b, model))
                }
            }
        }
        HardMode::StaticPenalty { .. } => {
            penalized_objective(a, model).total_cmp(&penalized_objective(b, model))
        }
    };
    primary.then(a.eval_index.cmp(&b.eval_index))
}

/// Returns `x` moved inside `bounds` according to `policy`.
pub fn repair_bounds(
    x: &[f64],
    bounds: &Bounds,
    policy: BoundsPolicy,
    rng: &mut RngStream,
) -> SolutionVector {
    let repaired = x
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let (lo, hi) = (bounds.lower()[i], bounds.upper()[i]);
            if (lo..=hi).contains(&v) {
                return v;
            }
            match policy {
                BoundsPolicy::Clamp => v.clamp(lo, hi),
                BoundsPolicy::Reflect => reflect(v, lo, hi),
                BoundsPolicy::Resample => rng.uniform_in(lo, hi),
            }
        })
        .collect();
    SolutionVector::from_finite(repaired)
}

/// Folds `v` back into `[lo, hi]` by repeated mirroring about the faces.
fn reflect(v: f64, lo: f64, hi: f64) -> f64 {
    let w = hi - lo;
    if !(w > 0.0) || !v.is_finite() {
        return lo;
    }
    let period = 2.0 * w;
    let y = (v - lo).rem_euclid(period);
    let folded = if y > w { period - y } else { y };
    (lo + folded).clamp(lo, hi)
}

type ConstraintFn<S> = Box<dyn Fn(&[f64], &S) -> f64 + Send + Sync>;

struct NamedConstraint<S: ?Sized> {
    name: String,
    measure: ConstraintFn<S>,
}

/// Hard violation measures and weighted soft penalties over a problem-specific
/// evaluation state `S` (e.g. a solved FEM field).
pub struct ConstraintSet<S: ?Sized = ()> {
    hard: Vec<NamedConstraint<S>>,
    soft: Vec<(NamedConstraint<S>, f64)>,
    pub bounds_policy: BoundsPolicy,
}

impl<S: ?Sized> Default for ConstraintSet<S> {
    fn default() -> Self {
        Self {
            hard: Vec::new(),
            soft: Vec::new(),
            bounds_policy: BoundsPolicy::default(),
        }
    }
}

impl<S: ?Sized> ConstraintSet<S> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a hard constraint; `measure` returns the violation magnitude
    /// (any value <= 0 means satisfied).
    pub fn hard(
        mut self,
        name: &str,
        measure: impl Fn(&[f64], &S) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.hard.push(NamedConstraint {
            name: name.to_string(),
            measure: Box::new(measure),
        });
        self
    }

    pub fn soft(
        mut self,
        name: &str,
        weight: f64,
        measure: impl Fn(&[f64], &S) -> f64 + Send + Sync + 'static,
    ) -> Self {
        assert!(
            weight.is_finite() && weight >= 0.0,
            "soft weight must be finite and non-negative"
        );
        self.soft.push((
            NamedConstraint {
                name: name.to_string(),
                measure: Box::new(measure),
            },
            weight,
        ));
        self
    }

    pub fn hard_names(&self) -> Vec<String> {
        self.hard.iter().map(|c| c.name.clone()).collect()
    }

    pub fn soft_names(&self) -> Vec<String> {
        self.soft.iter().map(|(c, _)| c.name.clone()).collect()
    }

    pub fn soft_weights(&self) -> Vec<f64> {
        self.soft.iter().map(|(_, w)| *w).collect()
    }

    pub fn penalty_model(&self, hard_mode: HardMode) -> PenaltyModel {
        PenaltyModel::new(self.soft_weights(), hard_mode)
    }

    /// Entry k is `max(0, g_k(x))`; the zero vector iff `x` is feasible.
    pub fn violation_vector(&self, x: &[f64], state: &S) -> Vec<f64> {
        self.hard
            .iter()
            .map(|c| nonneg((c.measure)(x, state)))
            .collect()
    }

    /// Raw (unweighted) soft penalties, clipped at zero.
    pub fn penalty_vector(&self, x: &[f64], state: &S) -> Vec<f64> {
        self.soft
            .iter()
            .map(|(c, _)| nonneg((c.measure)(x, state)))
            .collect()
    }
}

fn nonneg(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        0.0
    }
}
