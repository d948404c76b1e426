//! Explainability reports over a finished run directory, and paired
//! comparison of two directories.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use physevo_core::archive::EvaluationArchive;
use physevo_core::constraints::penalized_objective;
use physevo_core::explain::{
    bootstrap_median, build_stn, contribution_ranking, coverage, multi_run_stats,
    robustness_intervals, CoverageOptions, ExplainError, RunStatistics,
};
use physevo_core::rng::rng_stream;
use serde::Serialize;
use thiserror::Error;

use crate::config::{parse_config, ConfigError, RunSpec};
use crate::harness::{archive_path, penalty_model, RunSummary, CONFIG_FILE, MARKER};
use crate::svg::{line_chart, Series};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("missing archive {0}")]
    MissingArchive(PathBuf),
    #[error("{0} holds an interrupted run")]
    Incomplete(PathBuf),
    #[error("{0}: no successful repetition")]
    NoSuccessfulRun(PathBuf),
    #[error("unknown report kind `{0}` (expected stn, coverage, robustness, contribution, stats or convergence)")]
    UnknownKind(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Explain(#[from] ExplainError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ReportError + '_ {
    move |source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportKind {
    Stn,
    Coverage,
    Robustness,
    Contribution,
    Stats,
    Convergence,
}

impl ReportKind {
    pub const ALL: [ReportKind; 6] = [
        ReportKind::Stn,
        ReportKind::Coverage,
        ReportKind::Robustness,
        ReportKind::Contribution,
        ReportKind::Stats,
        ReportKind::Convergence,
    ];
}

impl FromStr for ReportKind {
    type Err = ReportError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim() {
            "stn" => ReportKind::Stn,
            "coverage" => ReportKind::Coverage,
            "robustness" => ReportKind::Robustness,
            "contribution" => ReportKind::Contribution,
            "stats" => ReportKind::Stats,
            "convergence" => ReportKind::Convergence,
            other => return Err(ReportError::UnknownKind(other.to_string())),
        })
    }
}

impl fmt::Display for ReportKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ReportKind::Stn => "stn",
            ReportKind::Coverage => "coverage",
            ReportKind::Robustness => "robustness",
            ReportKind::Contribution => "contribution",
            ReportKind::Stats => "stats",
            ReportKind::Convergence => "convergence",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportOptions {
    /// Decimal digits of the STN cell key.
    pub stn_precision: u32,
    pub coverage_grid: u32,
    /// Objective tolerance of the robustness intervals.
    pub delta: f64,
    /// Outward scan steps per direction before bisection.
    pub scan: usize,
    pub bootstrap: usize,
    pub seed: u64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            stn_precision: 2,
            coverage_grid: 10,
            delta: 1e-2,
            scan: 10,
            bootstrap: 1000,
            seed: 0,
        }
    }
}

struct RunDir {
    dir: PathBuf,
    spec: RunSpec,
    summary: RunSummary,
    archives: Vec<EvaluationArchive>,
}

fn load_run_dir(dir: &Path) -> Result<RunDir, ReportError> {
    if dir.join(MARKER).exists() {
        return Err(ReportError::Incomplete(dir.to_path_buf()));
    }
    let cfg = dir.join(CONFIG_FILE);
    let text = fs::read_to_string(&cfg).map_err(io_err(&cfg))?;
    let spec = parse_config(&text, dir)?;
    let summary = RunSummary::read(dir).map_err(io_err(&dir.join(crate::harness::SUMMARY_FILE)))?;
    let mut archives = Vec::new();
    for r in 0..spec.repetitions {
        let path = archive_path(dir, r);
        let file = File::open(&path).map_err(|_| ReportError::MissingArchive(path.clone()))?;
        archives.push(EvaluationArchive::read_jsonl(BufReader::new(file)).map_err(io_err(&path))?);
    }
    Ok(RunDir {
        dir: dir.to_path_buf(),
        spec,
        summary,
        archives,
    })
}

fn write_out(
    path: PathBuf,
    contents: impl AsRef<[u8]>,
    written: &mut Vec<PathBuf>,
) -> Result<(), ReportError> {
    fs::write(&path, contents).map_err(io_err(&path))?;
    written.push(path);
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct CoverageRun {
    run_id: u32,
    occupied: u64,
    total_cells: f64,
    fraction: f64,
}

#[derive(Serialize)]
struct CoverageSummary {
    metric: &'static str,
    grid_per_dim: u32,
    sparse: bool,
    runs: Vec<CoverageRun>,
}

#[derive(Serialize)]
struct StatsReport {
    problem: String,
    best_per_run: Vec<f64>,
    median: f64,
    interval: [f64; 2],
    bootstrap: usize,
    failed_runs: usize,
}

/// Writes the requested reports into `dir/reports` and returns the paths.
pub fn export_reports(
    dir: &Path,
    kinds: &[ReportKind],
    opts: &ReportOptions,
) -> Result<Vec<PathBuf>, ReportError> {
    let run = load_run_dir(dir)?;
    let problem = run.spec.build_problem()?;
    let bounds = problem.bounds().clone();
    let out = dir.join("reports");
    fs::create_dir_all(&out).map_err(io_err(&out))?;
    let coefficient = run
        .summary
        .repetitions
        .iter()
        .find_map(|r| r.penalty_coefficient);
    let model = penalty_model(problem.as_ref(), &run.spec, coefficient);
    let mut written = Vec::new();

    for kind in kinds {
        match kind {
            ReportKind::Stn => {
                let g = build_stn(&run.archives, &bounds, opts.stn_precision, &model)?;
                write_out(out.join("stn.dot"), g.to_dot(), &mut written)?;
                write_out(out.join("stn.json"), to_json(&g), &mut written)?;
            }
            ReportKind::Coverage => {
                let copts = CoverageOptions::new(opts.coverage_grid);
                let path = out.join("coverage.csv");
                let mut w = BufWriter::new(File::create(&path).map_err(io_err(&path))?);
                let mut runs = Vec::new();
                let mut sparse = false;
                for (r, a) in run.archives.iter().enumerate() {
                    let rep = coverage(a, &bounds, copts)?;
                    sparse |= rep.sparse;
                    // header only once
                    let mut buf = Vec::new();
                    rep.write_csv(&mut buf).map_err(io_err(&path))?;
                    let text = String::from_utf8_lossy(&buf);
                    let body = if r == 0 {
                        &text[..]
                    } else {
                        text.split_once('\n').map_or("", |x| x.1)
                    };
                    w.write_all(body.as_bytes()).map_err(io_err(&path))?;
                    runs.push(CoverageRun {
                        run_id: r as u32,
                        occupied: rep.occupied,
                        total_cells: rep.total_cells,
                        fraction: rep.fraction,
                    });
                }
                w.flush().map_err(io_err(&path))?;
                written.push(path);
                let summary = CoverageSummary {
                    metric:
                        "fraction of grid cells of the normalized box holding an evaluated point",
                    grid_per_dim: opts.coverage_grid,
                    sparse,
                    runs,
                };
                write_out(out.join("coverage.json"), to_json(&summary), &mut written)?;
            }
            ReportKind::Robustness => {
                let best = run
                    .summary
                    .best_run
                    .and_then(|id| run.summary.repetitions.iter().find(|r| r.run_id == id))
                    .ok_or_else(|| ReportError::NoSuccessfulRun(run.dir.clone()))?;
                let x = best.best_vector.clone().unwrap_or_default();
                let fidelity = best.best_fidelity.unwrap_or(0);
                let r =
                    robustness_intervals(problem.as_ref(), &x, opts.delta, opts.scan, fidelity)?;
                let mut csv = String::from("variable,value,low,high\n");
                for (i, [lo, hi]) in r.intervals.iter().enumerate() {
                    csv.push_str(&format!("{i},{},{lo},{hi}\n", x[i]));
                }
                write_out(out.join("robustness.csv"), csv, &mut written)?;
                write_out(out.join("robustness.json"), to_json(&r), &mut written)?;
            }
            ReportKind::Contribution => {
                let mut all = EvaluationArchive::new();
                for a in &run.archives {
                    all.extend(a.clone());
                }
                let c = contribution_ranking(&all)?;
                let path = out.join("contribution.csv");
                let mut buf = Vec::new();
                c.write_csv(&mut buf).map_err(io_err(&path))?;
                write_out(path, buf, &mut written)?;
                write_out(out.join("contribution.json"), to_json(&c), &mut written)?;
            }
            ReportKind::Stats => {
                let best: Vec<f64> = run
                    .summary
                    .repetitions
                    .iter()
                    .filter_map(|r| r.best_penalized)
                    .collect();
                if best.is_empty() {
                    return Err(ReportError::NoSuccessfulRun(run.dir.clone()));
                }
                let m =
                    bootstrap_median(&best, opts.bootstrap.max(1), &mut rng_stream(opts.seed, 0));
                let rep = StatsReport {
                    problem: run.summary.problem.clone(),
                    best_per_run: best,
                    median: m.median,
                    interval: m.interval,
                    bootstrap: opts.bootstrap.max(1),
                    failed_runs: run.summary.failures(),
                };
                write_out(out.join("stats.json"), to_json(&rep), &mut written)?;
            }
            ReportKind::Convergence => {
                let mut csv = String::from("run_id,evaluations,best_objective\n");
                let mut series = Vec::new();
                for (r, a) in run.archives.iter().enumerate() {
                    let points: Vec<(f64, f64)> = a
                        .incumbents(&model)
                        .iter()
                        .map(|rec| {
                            (
                                rec.eval_index as f64 + 1.0,
                                penalized_objective(&rec.result(), &model),
                            )
                        })
                        .collect();
                    for (e, f) in &points {
                        csv.push_str(&format!("{r},{e},{f}\n"));
                    }
                    series.push(Series {
                        label: format!("run {r}"),
                        points,
                    });
                }
                let title = format!("{}: best objective per run", run.summary.problem);
                write_out(out.join("convergence.csv"), csv, &mut written)?;
                write_out(
                    out.join("convergence.svg"),
                    line_chart(&title, "evaluations", "best objective", &series),
                    &mut written,
                )?;
            }
        }
    }
    Ok(written)
}

/// Paired comparison of the per-repetition best penalized objectives of two
/// run directories; repetition `r` of one is paired with repetition `r` of
/// the other. `a` wins a pair with the lower value.
pub fn compare_dirs(
    a: &Path,
    b: &Path,
    opts: &ReportOptions,
) -> Result<RunStatistics, ReportError> {
    let best = |dir: &Path| -> Result<Vec<f64>, ReportError> {
        if dir.join(MARKER).exists() {
            return Err(ReportError::Incomplete(dir.to_path_buf()));
        }
        let s = RunSummary::read(dir).map_err(io_err(&dir.join(crate::harness::SUMMARY_FILE)))?;
        s.repetitions
            .iter()
            .map(|r| {
                r.best_penalized
                    .ok_or_else(|| ReportError::NoSuccessfulRun(dir.to_path_buf()))
            })
            .collect()
    };
    let (va, vb) = (best(a)?, best(b)?);
    Ok(multi_run_stats(
        &va,
        &vb,
        opts.bootstrap.max(1),
        &mut rng_stream(opts.seed, 0),
    )?)
}
