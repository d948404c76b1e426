//! Executes a run spec into a run directory.
//!
//! Layout: `config.toml` (expanded spec), `archive_<r>.jsonl` and
//! `timing_<r>.jsonl` per repetition, `summary.json`. A `RUNNING` marker
//! exists while the harness works and flags interrupted directories.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use physevo_core::algorithms::{RunResult, Runner, TerminationReason};
use physevo_core::archive::EvaluationArchive;
use physevo_core::constraints::{
    lexicographic_compare, penalized_objective, HardMode, PenaltyModel,
};
use physevo_core::rng::rng_stream;
use physevo_core::{EvalResult, Problem};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, RunSpec};

pub const MARKER: &str = "RUNNING";
pub const CONFIG_FILE: &str = "config.toml";
pub const SUMMARY_FILE: &str = "summary.json";

pub fn archive_path(dir: &Path, run: u32) -> PathBuf {
    dir.join(format!("archive_{run}.jsonl"))
}

pub fn timing_path(dir: &Path, run: u32) -> PathBuf {
    dir.join(format!("timing_{run}.jsonl"))
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0} holds an interrupted run (marker file present); pass --force to overwrite")]
    Incomplete(PathBuf),
    #[error("{0} already holds a run; pass --force to overwrite")]
    Exists(PathBuf),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionSummary {
    pub run_id: u32,
    pub seed: u64,
    /// Present when the repetition aborted on an evaluation error.
    pub error: Option<String>,
    pub best_vector: Option<Vec<f64>>,
    pub best_objective: Option<f64>,
    /// Objective with soft penalties (and the static penalty, if used).
    pub best_penalized: Option<f64>,
    pub best_violation: Option<f64>,
    pub feasible: Option<bool>,
    pub best_fidelity: Option<usize>,
    pub termination: Option<TerminationReason>,
    pub evaluations: u64,
    pub penalty_coefficient: Option<f64>,
    pub wall_time_s: f64,
}

impl RepetitionSummary {
    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub problem: String,
    pub dim: usize,
    pub repetitions: Vec<RepetitionSummary>,
    /// Run id of the best repetition under the selection comparator.
    pub best_run: Option<u32>,
}

impl RunSummary {
    pub fn failures(&self) -> usize {
        self.repetitions.iter().filter(|r| !r.succeeded()).count()
    }

    pub fn read(dir: &Path) -> std::io::Result<Self> {
        let text = fs::read_to_string(dir.join(SUMMARY_FILE))?;
        serde_json::from_str(&text).map_err(std::io::Error::other)
    }
}

/// Penalty model matching a repetition's selection rule.
pub fn penalty_model(
    problem: &dyn Problem,
    spec: &RunSpec,
    coefficient: Option<f64>,
) -> PenaltyModel {
    let mode = match spec.optimizer.hard_mode {
        HardMode::StaticPenalty { coefficient: c } => HardMode::StaticPenalty {
            coefficient: c.or(coefficient),
        },
        m => m,
    };
    PenaltyModel::new(problem.soft_weights(), mode)
}

fn prepare_dir(dir: &Path, force: bool) -> Result<(), HarnessError> {
    if dir.join(MARKER).exists() && !force {
        return Err(HarnessError::Incomplete(dir.to_path_buf()));
    }
    if dir.join(CONFIG_FILE).exists() && !force {
        return Err(HarnessError::Exists(dir.to_path_buf()));
    }
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        let ours =
            name.starts_with("archive_") || name.starts_with("timing_") || name == SUMMARY_FILE;
        if ours {
            fs::remove_file(&path).map_err(io_err(&path))?;
        }
    }
    Ok(())
}

fn write_file(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<(), HarnessError> {
    let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
    f(&mut w).and_then(|_| w.flush()).map_err(io_err(path))
}

fn summarize(
    run_id: u32,
    seed: u64,
    outcome: Result<RunResult, String>,
    evaluations: u64,
    wall: f64,
    problem: &dyn Problem,
    spec: &RunSpec,
) -> RepetitionSummary {
    let mut s = RepetitionSummary {
        run_id,
        seed,
        error: None,
        best_vector: None,
        best_objective: None,
        best_penalized: None,
        best_violation: None,
        feasible: None,
        best_fidelity: None,
        termination: None,
        evaluations,
        penalty_coefficient: None,
        wall_time_s: wall,
    };
    match outcome {
        Ok(r) => {
            let model = penalty_model(problem, spec, r.penalty_coefficient);
            s.best_penalized = Some(penalized_objective(&r.best_result, &model));
            s.best_objective = Some(r.best_result.objective);
            s.best_violation = Some(r.best_result.total_violation());
            s.feasible = Some(r.best_result.is_feasible());
            s.best_fidelity = Some(r.best_result.fidelity);
            s.best_vector = Some(r.best_vector.into_inner());
            s.termination = Some(r.termination_reason);
            s.evaluations = r.evaluations_used;
            s.penalty_coefficient = r.penalty_coefficient;
        }
        Err(e) => s.error = Some(e),
    }
    s
}

/// Runs every repetition of an expanded spec into `dir`. Repetition `r`
/// draws from seed `rng_seed + r`; an evaluation error ends that repetition
/// only and is recorded in the summary.
pub fn execute_run(spec: &RunSpec, dir: &Path, force: bool) -> Result<RunSummary, HarnessError> {
    let problem = spec.build_problem()?;
    let seeds = spec.initial_seeds(problem.as_ref())?;
    prepare_dir(dir, force)?;
    let marker = dir.join(MARKER);
    fs::write(&marker, b"").map_err(io_err(&marker))?;
    let config = dir.join(CONFIG_FILE);
    fs::write(&config, spec.to_toml()).map_err(io_err(&config))?;

    let mut reps = Vec::new();
    for r in 0..spec.repetitions {
        let seed = spec.rng_seed + r as u64;
        let mut archive = EvaluationArchive::new();
        let start = Instant::now();
        let outcome = Runner::new(problem.as_ref(), &spec.optimizer)
            .seeds(seeds.clone())
            .fidelity(spec.fidelity.clone())
            .run_id(r)
            .run(&mut rng_stream(seed, 0), &mut archive)
            .map_err(|e| e.to_string());
        let wall = start.elapsed().as_secs_f64();
        let archive = EvaluationArchive::from_records(archive.records().to_vec());
        write_file(&archive_path(dir, r), |w| archive.write_jsonl(w))?;
        write_file(&timing_path(dir, r), |w| archive.write_timing(w))?;
        reps.push(summarize(
            r,
            seed,
            outcome,
            archive.len() as u64,
            wall,
            problem.as_ref(),
            spec,
        ));
    }

    let best_run = best_repetition(&reps, spec);
    let summary = RunSummary {
        problem: problem.id().to_string(),
        dim: problem.dim(),
        repetitions: reps,
        best_run,
    };
    write_file(&dir.join(SUMMARY_FILE), |w| {
        serde_json::to_writer_pretty(&mut *w, &summary).map_err(std::io::Error::other)?;
        w.write_all(b"\n")
    })?;
    fs::remove_file(&marker).map_err(io_err(&marker))?;
    Ok(summary)
}

/// Best successful repetition: highest fidelity first, then the selection
/// comparator on the penalized objective (penalties already folded in).
fn best_repetition(reps: &[RepetitionSummary], spec: &RunSpec) -> Option<u32> {
    let as_result = |r: &RepetitionSummary| EvalResult {
        objective: r.best_penalized.unwrap_or(f64::INFINITY),
        hard_violations: vec![r.best_violation.unwrap_or(0.0)],
        soft_penalties: vec![],
        fidelity: r.best_fidelity.unwrap_or(0),
        eval_index: r.run_id as u64,
    };
    let mode = match spec.optimizer.hard_mode {
        HardMode::StaticPenalty { .. } => HardMode::StaticPenalty {
            coefficient: Some(0.0),
        },
        m => m,
    };
    let model = PenaltyModel::new(vec![], mode);
    reps.iter()
        .filter(|r| r.succeeded())
        .min_by(|a, b| {
            b.best_fidelity
                .cmp(&a.best_fidelity)
                .then_with(|| lexicographic_compare(&as_result(a), &as_result(b), &model))
        })
        .map(|r| r.run_id)
}
