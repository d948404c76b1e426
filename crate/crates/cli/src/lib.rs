//! Run harness behind the `physevo` binary: declarative run specs, seeded
//! repetitions written as JSONL archives, and explainability reports.

pub mod config;
pub mod harness;
pub mod registry;
pub mod report;
mod svg;

pub use config::{load_config, parse_config, ConfigError, RunSpec};
pub use harness::{execute_run, HarnessError, RunSummary};
pub use registry::{build_problem, ProblemSpec};
pub use report::{compare_dirs, export_reports, ReportError, ReportKind, ReportOptions};
