//! Population-based optimizers sharing one runner: differential evolution,
//! particle swarm, a real-coded genetic algorithm and an evolution strategy
//! with cumulative step-size adaptation (optionally full covariance).

mod de;
mod es;
mod ga;
mod pso;
mod runner;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraints::{BoundsPolicy, HardMode};
use crate::problem::EvalError;
use crate::rng::RngStream;
use crate::types::{Bounds, EvalResult, SolutionVector};

pub use de::De;
pub use es::Es;
pub use ga::Ga;
pub use pso::Pso;
pub use runner::{
    FidelitySchedule, FidelityStep, RunResult, Runner, TerminationReason, TraceEntry,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgorithmError {
    #[error("seed {index} lies outside the bounds")]
    SeedOutOfBounds { index: usize },
    #[error("seed {index} has dimension {got}, expected {expected}")]
    SeedDimensionMismatch {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("{count} seeds exceed the population size {population}")]
    TooManySeeds { count: usize, population: usize },
    #[error("invalid optimizer parameters: {0}")]
    InvalidVariantParameters(String),
    #[error("evaluation {eval_index} failed at {vector:?}: {source}")]
    Evaluation {
        eval_index: u64,
        vector: Vec<f64>,
        source: EvalError,
    },
}

fn default_f() -> f64 {
    0.5
}
fn default_cr() -> f64 {
    0.9
}
fn default_w() -> f64 {
    0.7298
}
fn default_c() -> f64 {
    1.49618
}
fn default_pc() -> f64 {
    0.9
}
fn default_sbx() -> f64 {
    15.0
}
fn default_pm_eta() -> f64 {
    20.0
}
fn default_sigma0() -> f64 {
    0.3
}

/// Variant and its parameters. `Option` parameters are resolved against the
/// problem dimension by [`OptimizerConfig::resolved`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Variant {
    De {
        #[serde(default = "default_f")]
        f: f64,
        #[serde(default = "default_cr")]
        cr: f64,
    },
    Pso {
        #[serde(default = "default_w")]
        inertia: f64,
        #[serde(default = "default_c")]
        cognitive: f64,
        #[serde(default = "default_c")]
        social: f64,
    },
    Ga {
        #[serde(default = "default_pc")]
        crossover_prob: f64,
        #[serde(default = "default_sbx")]
        sbx_eta: f64,
        /// Per-coordinate mutation probability; default `1/dim`.
        #[serde(default)]
        mutation_prob: Option<f64>,
        #[serde(default = "default_pm_eta")]
        mutation_eta: f64,
    },
    /// `population_size` is the offspring count lambda.
    Es {
        /// Parents used for recombination; default `lambda / 2`.
        #[serde(default)]
        mu: Option<usize>,
        /// Initial step size as a fraction of each box width.
        #[serde(default = "default_sigma0")]
        sigma0: f64,
        #[serde(default)]
        full_covariance: bool,
    },
}

impl Variant {
    pub fn de() -> Self {
        Variant::De {
            f: default_f(),
            cr: default_cr(),
        }
    }
    pub fn pso() -> Self {
        Variant::Pso {
            inertia: default_w(),
            cognitive: default_c(),
            social: default_c(),
        }
    }
    pub fn ga() -> Self {
        Variant::Ga {
            crossover_prob: default_pc(),
            sbx_eta: default_sbx(),
            mutation_prob: None,
            mutation_eta: default_pm_eta(),
        }
    }
    pub fn es() -> Self {
        Variant::Es {
            mu: None,
            sigma0: default_sigma0(),
            full_covariance: false,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Variant::De { .. } => "de",
            Variant::Pso { .. } => "pso",
            Variant::Ga { .. } => "ga",
            Variant::Es { .. } => "es",
        }
    }
}

fn default_stagnation() -> usize {
    50
}

/// Improvement below this does not reset the stagnation window.
pub const STAGNATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub variant: Variant,
    pub population_size: usize,
    pub max_evaluations: u64,
    #[serde(default)]
    pub target_objective: Option<f64>,
    /// Iterations without improvement before stopping; 0 disables.
    #[serde(default = "default_stagnation")]
    pub stagnation_window: usize,
    #[serde(default)]
    pub bounds_policy: BoundsPolicy,
    #[serde(default)]
    pub hard_mode: HardMode,
}

impl OptimizerConfig {
    pub fn new(variant: Variant, population_size: usize, max_evaluations: u64) -> Self {
        Self {
            variant,
            population_size,
            max_evaluations,
            target_objective: None,
            stagnation_window: default_stagnation(),
            bounds_policy: BoundsPolicy::default(),
            hard_mode: HardMode::default(),
        }
    }

    /// Fills dimension-dependent defaults so the config is fully explicit.
    pub fn resolved(&self, dim: usize) -> Self {
        let mut c = self.clone();
        match &mut c.variant {
            Variant::Ga { mutation_prob, .. } if mutation_prob.is_none() => {
                *mutation_prob = Some(1.0 / dim.max(1) as f64);
            }
            Variant::Es { mu, .. } if mu.is_none() => *mu = Some((self.population_size / 2).max(1)),
            _ => {}
        }
        c
    }

    pub fn validate(&self) -> Result<(), AlgorithmError> {
        let bad = |m: String| Err(AlgorithmError::InvalidVariantParameters(m));
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if self.population_size < 2 {
            return bad("population_size must be at least 2".into());
        }
        if self.max_evaluations <= self.population_size as u64 {
            return bad("max_evaluations must exceed population_size".into());
        }
        match &self.variant {
            Variant::De { f, cr } => {
                if self.population_size < 4 {
                    return bad("DE needs population_size >= 4".into());
                }
                if !(f.is_finite() && *f >= 0.0) || !prob(*cr) {
                    return bad(format!("DE f={f}, cr={cr}"));
                }
            }
            Variant::Pso {
                inertia,
                cognitive,
                social,
            } => {
                if ![inertia, cognitive, social]
                    .iter()
                    .all(|v| v.is_finite() && **v >= 0.0)
                {
                    return bad("PSO coefficients must be finite and non-negative".into());
                }
            }
            Variant::Ga {
                crossover_prob,
                sbx_eta,
                mutation_prob,
                mutation_eta,
            } => {
                if !prob(*crossover_prob)
                    || !mutation_prob.is_none_or(prob)
                    || !(*sbx_eta >= 0.0)
                    || !(*mutation_eta >= 0.0)
                {
                    return bad(
                        "GA probabilities must lie in [0,1] and indices be non-negative".into(),
                    );
                }
            }
            Variant::Es { mu, sigma0, .. } => {
                if mu.is_some_and(|m| m == 0 || m > self.population_size) {
                    return bad("ES mu must be in 1..=population_size".into());
                }
                if !(sigma0.is_finite() && *sigma0 > 0.0) {
                    return bad("ES sigma0 must be positive".into());
                }
            }
        }
        Ok(())
    }
}

/// Current members and their evaluations.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub members: Vec<SolutionVector>,
    pub fitness: Vec<EvalResult>,
    pub iteration: usize,
}

impl Population {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Mean over coordinates of the standard deviation of box-normalized members.
    pub fn diversity(&self, bounds: &Bounds) -> f64 {
        let n = self.members.len();
        if n < 2 {
            return 0.0;
        }
        let norm: Vec<Vec<f64>> = self.members.iter().map(|m| bounds.normalize(m)).collect();
        let dim = bounds.dim();
        let mut total = 0.0;
        for i in 0..dim {
            let mean = norm.iter().map(|v| v[i]).sum::<f64>() / n as f64;
            let var = norm.iter().map(|v| (v[i] - mean).powi(2)).sum::<f64>() / n as f64;
            total += var.sqrt();
        }
        total / dim as f64
    }
}

/// Comparator handed to strategies; `Less` means the first argument wins.
pub type Compare<'a> = &'a dyn Fn(&EvalResult, &EvalResult) -> Ordering;

/// The propose/select cycle of one optimizer variant.
pub trait Strategy: Send {
    /// Candidate vectors for the next batch (before bounds repair).
    fn propose(&mut self, rng: &mut RngStream) -> Vec<Vec<f64>>;

    /// Absorbs the evaluated (repaired) batch, in proposal order. A batch may
    /// be shorter than proposed when the budget runs out.
    fn select(&mut self, batch: Vec<(SolutionVector, EvalResult)>, cmp: Compare<'_>);

    /// Vectors whose stored evaluations drive selection; re-evaluated when
    /// the fidelity level changes.
    fn elite_vectors(&self) -> Vec<SolutionVector>;

    /// Replaces the stored evaluations of `elite_vectors` (same order).
    fn rescore(&mut self, results: Vec<EvalResult>, cmp: Compare<'_>);

    fn population(&self) -> Population;
}

/// Builds the strategy for `config` around an evaluated initial population.
pub fn make_strategy(
    config: &OptimizerConfig,
    bounds: &Bounds,
    initial: Population,
    cmp: Compare<'_>,
) -> Result<Box<dyn Strategy>, AlgorithmError> {
    config.validate()?;
    let config = config.resolved(bounds.dim());
    Ok(match config.variant {
        Variant::De { f, cr } => Box::new(De::new(initial, f, cr)),
        Variant::Pso {
            inertia,
            cognitive,
            social,
        } => Box::new(Pso::new(initial, bounds, inertia, cognitive, social, cmp)),
        Variant::Ga {
            crossover_prob,
            sbx_eta,
            mutation_prob,
            mutation_eta,
        } => Box::new(Ga::new(
            initial,
            bounds,
            crossover_prob,
            sbx_eta,
            mutation_prob.unwrap(),
            mutation_eta,
            cmp,
        )),
        Variant::Es {
            mu,
            sigma0,
            full_covariance,
        } => Box::new(Es::new(
            initial,
            bounds,
            config.population_size,
            mu.unwrap(),
            sigma0,
            full_covariance,
            cmp,
        )),
    })
}

/// Seeds copied verbatim, the remainder drawn uniformly within `bounds`.
pub fn initialize_population(
    config: &OptimizerConfig,
    bounds: &Bounds,
    seeds: &[SolutionVector],
    rng: &mut RngStream,
) -> Result<Vec<SolutionVector>, AlgorithmError> {
    if seeds.len() > config.population_size {
        return Err(AlgorithmError::TooManySeeds {
            count: seeds.len(),
            population: config.population_size,
        });
    }
    for (index, s) in seeds.iter().enumerate() {
        if s.dim() != bounds.dim() {
            return Err(AlgorithmError::SeedDimensionMismatch {
                index,
                expected: bounds.dim(),
                got: s.dim(),
            });
        }
        if !bounds.contains(s) {
            return Err(AlgorithmError::SeedOutOfBounds { index });
        }
    }
    let mut members = seeds.to_vec();
    while members.len() < config.population_size {
        let v = (0..bounds.dim())
            .map(|i| rng.uniform_in(bounds.lower()[i], bounds.upper()[i]))
            .collect();
        members.push(SolutionVector::from_finite(v));
    }
    Ok(members)
}

/// Index of the preferred result.
pub(crate) fn best_index(results: &[EvalResult], cmp: Compare<'_>) -> usize {
    (1..results.len()).fold(0, |b, i| {
        if cmp(&results[i], &results[b]) == Ordering::Less {
            i
        } else {
            b
        }
    })
}
