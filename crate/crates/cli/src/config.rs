//! TOML run specification. Unknown keys are rejected; [`RunSpec::expanded`]
//! fills every default so the echoed file fully describes the run.

use std::fs;
use std::path::{Path, PathBuf};

use physevo_core::algorithms::{FidelitySchedule, OptimizerConfig};
use physevo_core::{Problem, SolutionVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::registry::{build_problem, ProblemSpec};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}, column {column}: unknown key `{key}`")]
    UnknownKey {
        key: String,
        line: usize,
        column: usize,
    },
    #[error("line {line}, column {column}: missing required key `{key}`")]
    MissingRequired {
        key: String,
        line: usize,
        column: usize,
    },
    #[error("invalid run spec: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSpec {
    /// Soft-penalty weights in the order the problem names them.
    #[serde(default)]
    pub soft_weights: Option<Vec<f64>>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedSpec {
    /// Include the problem's own seed solutions.
    #[serde(default = "yes")]
    pub problem: bool,
    #[serde(default)]
    pub inline: Vec<Vec<f64>>,
    /// CSV file, one vector per row, no header.
    #[serde(default)]
    pub file: Option<PathBuf>,
}

impl Default for SeedSpec {
    fn default() -> Self {
        Self {
            problem: true,
            inline: Vec::new(),
            file: None,
        }
    }
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    /// Base seed; repetition `r` uses `rng_seed + r`.
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default = "one")]
    pub repetitions: u32,
    /// Run directory; `runs/<problem id>` when absent.
    #[serde(default)]
    pub output: Option<PathBuf>,
    pub problem: ProblemSpec,
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub constraints: ConstraintSpec,
    #[serde(default)]
    pub seeds: SeedSpec,
    #[serde(default)]
    pub fidelity: FidelitySchedule,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

fn quoted(message: &str, prefix: &str) -> Option<String> {
    let rest = &message[message.find(prefix)? + prefix.len()..];
    let rest = rest.strip_prefix('`')?;
    Some(rest[..rest.find('`')?].to_string())
}

fn classify(text: &str, e: toml::de::Error) -> ConfigError {
    let (line, column) = e.span().map_or((1, 1), |s| line_col(text, s.start));
    let message = e.message().trim().to_string();
    if let Some(key) = quoted(&message, "unknown field ") {
        ConfigError::UnknownKey { key, line, column }
    } else if let Some(key) = quoted(&message, "missing field ") {
        ConfigError::MissingRequired { key, line, column }
    } else {
        ConfigError::Parse {
            line,
            column,
            message,
        }
    }
}

/// Parses a spec; relative seed-file paths are resolved against `base_dir`.
pub fn parse_config(text: &str, base_dir: &Path) -> Result<RunSpec, ConfigError> {
    let mut spec: RunSpec = toml::from_str(text).map_err(|e| classify(text, e))?;
    if let Some(f) = &spec.seeds.file {
        if f.is_relative() {
            spec.seeds.file = Some(base_dir.join(f));
        }
    }
    Ok(spec)
}

/// Reads, parses and expands the spec at `path`.
pub fn load_config(path: &Path) -> Result<RunSpec, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config(&text, base)?.expanded()
}

pub fn read_seed_file(path: &Path) -> Result<Vec<Vec<f64>>, ConfigError> {
    let invalid = |m: String| ConfigError::Invalid(format!("seed file {}: {m}", path.display()));
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| invalid(e.to_string()))?;
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| invalid(e.to_string()))?;
        let v = rec
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| invalid(format!("row {}: {e}", row + 1)))?;
        out.push(v);
    }
    Ok(out)
}

impl RunSpec {
    pub fn build_problem(&self) -> Result<Box<dyn Problem>, ConfigError> {
        build_problem(&self.problem, self.constraints.soft_weights.as_deref())
            .map_err(ConfigError::Invalid)
    }

    /// Every default made explicit and the spec checked against the problem.
    pub fn expanded(&self) -> Result<RunSpec, ConfigError> {
        let problem = self.build_problem()?;
        let mut s = self.clone();
        s.problem = self.problem.expanded();
        s.optimizer = self.optimizer.resolved(problem.dim());
        s.optimizer
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        s.constraints.soft_weights = Some(problem.soft_weights());
        if s.output.is_none() {
            s.output = Some(PathBuf::from("runs").join(self.problem.id()));
        }
        if s.repetitions == 0 {
            return Err(ConfigError::Invalid(
                "repetitions must be at least 1".into(),
            ));
        }
        if let Some(step) = s
            .fidelity
            .steps
            .iter()
            .find(|st| st.level >= problem.fidelity_levels())
        {
            return Err(ConfigError::Invalid(format!(
                "fidelity level {} not available ({} levels)",
                step.level,
                problem.fidelity_levels()
            )));
        }
        s.initial_seeds(problem.as_ref())?;
        Ok(s)
    }

    /// Seeds handed to the optimizer: problem seeds, then inline, then file.
    pub fn initial_seeds(&self, problem: &dyn Problem) -> Result<Vec<SolutionVector>, ConfigError> {
        let mut raw: Vec<Vec<f64>> = Vec::new();
        if self.seeds.problem {
            raw.extend(problem.seeds().into_iter().map(SolutionVector::into_inner));
        }
        raw.extend(self.seeds.inline.iter().cloned());
        if let Some(f) = &self.seeds.file {
            raw.extend(read_seed_file(f)?);
        }
        raw.truncate(self.optimizer.population_size);
        raw.into_iter()
            .enumerate()
            .map(|(i, v)| {
                if v.len() != problem.dim() {
                    return Err(ConfigError::Invalid(format!(
                        "seed {i} has {} entries, expected {}",
                        v.len(),
                        problem.dim()
                    )));
                }
                if !problem.bounds().contains(&v) {
                    return Err(ConfigError::Invalid(format!(
                        "seed {i} lies outside the bounds"
                    )));
                }
                SolutionVector::new(v).map_err(|e| ConfigError::Invalid(format!("seed {i}: {e}")))
            })
            .collect()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("run spec serializes to TOML")
    }
}
