//! Explainability over evaluation archives: search trajectory networks,
//! grid coverage, one-at-a-time robustness intervals, linear contribution
//! ranking and paired multi-run statistics.

mod contribution;
mod coverage;
mod robustness;
mod stats;
mod stn;

use thiserror::Error;

pub use contribution::{contribution_ranking, Contribution, ContributionReport};
pub use coverage::{coverage, CoverageOptions, CoveragePoint, CoverageReport, DEFAULT_DENSE_CAP};
pub use robustness::{robustness_intervals, RobustnessIntervals, ROBUSTNESS_NOTE};
pub use stats::{bootstrap_median, multi_run_stats, MedianSummary, RunStatistics};
pub use stn::{build_stn, StnEdge, StnGraph, StnNode};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExplainError {
    #[error("genotype dimension {got} does not match {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("grid of {cells:e} cells exceeds the dense cap {cap} and sparse storage is disabled")]
    GridOverflow { cells: f64, cap: u64 },
    #[error("archive has {rows} rows, a linear fit in {dim} variables needs at least {}", dim + 1)]
    DegenerateArchive { rows: usize, dim: usize },
    #[error(
        "result lists have lengths {a} and {b}; paired comparison needs equal non-zero lengths"
    )]
    UnpairedRuns { a: usize, b: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[cfg(test)]
mod tests;
