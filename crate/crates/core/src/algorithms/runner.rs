//! Shared optimization loop: initialization, batch evaluation, selection,
//! termination, fidelity switching and archive logging.

use std::cmp::Ordering;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    initialize_population, make_strategy, AlgorithmError, OptimizerConfig, Population,
    STAGNATION_TOL,
};
use crate::archive::{ArchiveRecord, EvaluationArchive};
use crate::constraints::{lexicographic_compare, penalized_objective, repair_bounds, PenaltyModel};
use crate::problem::{attach_index, evaluate_unindexed, EvalCounter, Problem};
use crate::rng::RngStream;
use crate::types::{EvalResult, SolutionVector};

/// Switch to `level` once `from_evaluation` evaluations have been spent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FidelityStep {
    pub from_evaluation: u64,
    pub level: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FidelitySchedule {
    pub steps: Vec<FidelityStep>,
}

impl Default for FidelitySchedule {
    fn default() -> Self {
        Self::constant(0)
    }
}

impl FidelitySchedule {
    pub fn constant(level: usize) -> Self {
        Self {
            steps: vec![FidelityStep {
                from_evaluation: 0,
                level,
            }],
        }
    }

    pub fn level_at(&self, evaluations: u64) -> usize {
        self.steps
            .iter()
            .filter(|s| s.from_evaluation <= evaluations)
            .max_by_key(|s| s.from_evaluation)
            .map_or(0, |s| s.level)
    }

    pub fn max_level(&self) -> usize {
        self.steps.iter().map(|s| s.level).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    Budget,
    Target,
    Stagnation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: u32,
    pub evaluations: u64,
    pub fidelity: usize,
    /// Objective of the best-so-far solution.
    pub best_objective: f64,
    pub best_violation: f64,
    pub best_penalized: f64,
    pub mean_objective: f64,
    pub diversity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub best_vector: SolutionVector,
    pub best_result: EvalResult,
    pub trace: Vec<TraceEntry>,
    pub evaluations_used: u64,
    pub termination_reason: TerminationReason,
    /// Static-penalty coefficient in effect, when that mode is selected.
    pub penalty_coefficient: Option<f64>,
}

/// One optimization run of `problem` under `config`.
pub struct Runner<'a> {
    problem: &'a dyn Problem,
    config: OptimizerConfig,
    schedule: FidelitySchedule,
    seeds: Vec<SolutionVector>,
    run_id: u32,
}

struct Best {
    x: SolutionVector,
    r: EvalResult,
}

impl<'a> Runner<'a> {
    pub fn new(problem: &'a dyn Problem, config: &OptimizerConfig) -> Self {
        Self {
            problem,
            config: config.clone(),
            schedule: FidelitySchedule::default(),
            seeds: Vec::new(),
            run_id: 0,
        }
    }

    pub fn fidelity(mut self, schedule: FidelitySchedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn seeds(mut self, seeds: Vec<SolutionVector>) -> Self {
        self.seeds = seeds;
        self
    }

    pub fn run_id(mut self, run_id: u32) -> Self {
        self.run_id = run_id;
        self
    }

    fn evaluate_batch(
        &self,
        xs: &[SolutionVector],
        level: usize,
        iteration: u32,
        counter: &mut EvalCounter,
        archive: &mut EvaluationArchive,
    ) -> Result<Vec<EvalResult>, AlgorithmError> {
        let raw: Vec<_> = xs
            .par_iter()
            .map(|x| {
                let start = Instant::now();
                let ev = evaluate_unindexed(self.problem, x, level);
                (ev, start.elapsed().as_nanos() as u64)
            })
            .collect();
        let mut out = Vec::with_capacity(xs.len());
        for (x, (ev, ns)) in xs.iter().zip(raw) {
            let eval_index = counter.next_index();
            let ev = ev.map_err(|source| AlgorithmError::Evaluation {
                eval_index,
                vector: x.to_vec(),
                source,
            })?;
            let r = attach_index(ev, level, eval_index);
            archive.push(ArchiveRecord {
                run_id: self.run_id,
                iteration,
                eval_index,
                genotype: x.to_vec(),
                objective: r.objective,
                hard_violations: r.hard_violations.clone(),
                soft_penalties: r.soft_penalties.clone(),
                fidelity: level,
                wall_time_ns: ns,
            });
            out.push(r);
        }
        Ok(out)
    }

    /// Runs to termination, appending every evaluation to `archive`.
    pub fn run(
        &self,
        rng: &mut RngStream,
        archive: &mut EvaluationArchive,
    ) -> Result<RunResult, AlgorithmError> {
        let problem = self.problem;
        let config = &self.config;
        config.validate()?;
        let bounds = problem.bounds();
        if self.schedule.max_level() >= problem.fidelity_levels() {
            return Err(AlgorithmError::InvalidVariantParameters(format!(
                "fidelity level {} not offered by {} ({} levels)",
                self.schedule.max_level(),
                problem.id(),
                problem.fidelity_levels()
            )));
        }
        let mut counter = EvalCounter::new();
        let mut level = self.schedule.level_at(0);

        let members = initialize_population(config, bounds, &self.seeds, rng)?;
        let fitness = self.evaluate_batch(&members, level, 0, &mut counter, archive)?;
        let mut model = PenaltyModel::new(problem.soft_weights(), config.hard_mode);
        model.resolve_static_coefficient(&fitness);
        let cmp = |a: &EvalResult, b: &EvalResult| lexicographic_compare(a, b, &model);
        let pick = |xs: &[SolutionVector], rs: &[EvalResult]| {
            let i = super::best_index(rs, &cmp);
            Best {
                x: xs[i].clone(),
                r: rs[i].clone(),
            }
        };
        let mut best = pick(&members, &fitness);
        let mut strategy = make_strategy(
            config,
            bounds,
            Population {
                members,
                fitness,
                iteration: 0,
            },
            &cmp,
        )?;

        let mut trace = Vec::new();
        let record = |trace: &mut Vec<TraceEntry>,
                      iteration: u32,
                      used: u64,
                      level: usize,
                      best: &Best,
                      pop: &Population| {
            let mean =
                pop.fitness.iter().map(|r| r.objective).sum::<f64>() / pop.len().max(1) as f64;
            trace.push(TraceEntry {
                iteration,
                evaluations: used,
                fidelity: level,
                best_objective: best.r.objective,
                best_violation: best.r.total_violation(),
                best_penalized: penalized_objective(&best.r, &model),
                mean_objective: mean,
                diversity: pop.diversity(bounds),
            });
        };
        record(
            &mut trace,
            0,
            counter.count(),
            level,
            &best,
            &strategy.population(),
        );

        let mut iteration: u32 = 0;
        let mut reference = best.r.clone();
        let mut last_improvement: u32 = 0;
        let reason = loop {
            let used = counter.count();
            if let Some(target) = config.target_objective {
                if best.r.is_feasible() && penalized_objective(&best.r, &model) <= target {
                    break TerminationReason::Target;
                }
            }
            if used >= config.max_evaluations {
                break TerminationReason::Budget;
            }
            if config.stagnation_window > 0
                && (iteration - last_improvement) as usize >= config.stagnation_window
            {
                break TerminationReason::Stagnation;
            }
            iteration += 1;
            let remaining = (config.max_evaluations - used) as usize;

            let wanted = self.schedule.level_at(used);
            if wanted != level {
                let elites = strategy.elite_vectors();
                if elites.len() > remaining {
                    break TerminationReason::Budget;
                }
                level = wanted;
                let results =
                    self.evaluate_batch(&elites, level, iteration, &mut counter, archive)?;
                best = pick(&elites, &results);
                strategy.rescore(results, &cmp);
                reference = best.r.clone();
                last_improvement = iteration;
                record(
                    &mut trace,
                    iteration,
                    counter.count(),
                    level,
                    &best,
                    &strategy.population(),
                );
                continue;
            }

            let mut proposals = strategy.propose(rng);
            proposals.truncate(remaining);
            let xs: Vec<SolutionVector> = proposals
                .iter()
                .map(|p| repair_bounds(p, bounds, config.bounds_policy, rng))
                .collect();
            let results = self.evaluate_batch(&xs, level, iteration, &mut counter, archive)?;
            for (x, r) in xs.iter().zip(&results) {
                if cmp(r, &best.r) == Ordering::Less {
                    best = Best {
                        x: x.clone(),
                        r: r.clone(),
                    };
                }
            }
            strategy.select(xs.into_iter().zip(results).collect(), &cmp);
            if improved(&best.r, &reference, &model) {
                reference = best.r.clone();
                last_improvement = iteration;
            }
            record(
                &mut trace,
                iteration,
                counter.count(),
                level,
                &best,
                &strategy.population(),
            );
        };

        let penalty_coefficient = match model.hard_mode {
            crate::constraints::HardMode::StaticPenalty { coefficient } => coefficient,
            _ => None,
        };
        Ok(RunResult {
            best_vector: best.x,
            best_result: best.r,
            trace,
            evaluations_used: counter.count(),
            termination_reason: reason,
            penalty_coefficient,
        })
    }
}

fn improved(new: &EvalResult, reference: &EvalResult, model: &PenaltyModel) -> bool {
    let (vn, vr) = (new.total_violation(), reference.total_violation());
    if vn < vr - STAGNATION_TOL {
        return true;
    }
    vn == 0.0
        && vr == 0.0
        && penalized_objective(new, model) < penalized_objective(reference, model) - STAGNATION_TOL
}
