use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use physevo_cli::config::{load_config, ConfigError};
use physevo_cli::harness::{execute_run, HarnessError};
use physevo_cli::registry::PROBLEMS;
use physevo_cli::report::{compare_dirs, export_reports, ReportKind, ReportOptions};
use physevo_core::algorithms::{OptimizerConfig, Variant};
use physevo_core::problems::pet::{fit_batch, read_voxels, write_fits, PetConfig};

#[derive(Parser)]
#[command(
    name = "physevo",
    version,
    about = "Physics-informed evolutionary optimization harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a TOML run spec.
    Run {
        config: PathBuf,
        /// Run directory (overrides `output` in the spec).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overwrite an existing or interrupted run directory.
        #[arg(long)]
        force: bool,
    },
    /// Write explainability reports for a run directory into DIR/reports.
    Report {
        dir: PathBuf,
        /// Comma-separated: stn, coverage, robustness, contribution, stats, convergence.
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "stn,coverage,robustness,contribution,stats,convergence"
        )]
        kinds: Vec<String>,
        #[arg(long, default_value_t = 2)]
        stn_precision: u32,
        #[arg(long, default_value_t = 10)]
        coverage_grid: u32,
        #[arg(long, default_value_t = 1e-2)]
        delta: f64,
        #[arg(long, default_value_t = 10)]
        scan: usize,
    },
    /// Paired win probability and median intervals of two run directories.
    Compare {
        dir_a: PathBuf,
        dir_b: PathBuf,
        #[arg(long, default_value_t = 1000)]
        bootstrap: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// List the problem ids accepted in run specs.
    ListProblems,
    /// Fit every voxel of a CSV (voxel_id,f1,f2,...) with the given PET settings.
    PetBatch {
        voxels: PathBuf,
        /// TOML file with PET problem settings (model, input, frame_groups).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "fits.csv")]
        out: PathBuf,
        #[arg(long, default_value_t = 40)]
        population: usize,
        #[arg(long, default_value_t = 20_000)]
        evaluations: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Config problems exit with 1, everything else with 2.
enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(_) => Failure::Config(e.into()),
            _ => Failure::Runtime(e.into()),
        }
    }
}

fn set_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("PHYSEVO_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .with_context(|| format!("PHYSEVO_THREADS={v} is not a count"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    set_threads().map_err(Failure::Config)?;
    match cli.command {
        Command::Run { config, out, force } => {
            let spec = load_config(&config).map_err(|e| Failure::Config(e.into()))?;
            let dir = out
                .or_else(|| spec.output.clone())
                .unwrap_or_else(|| PathBuf::from("runs"));
            let summary = execute_run(&spec, &dir, force)?;
            for r in &summary.repetitions {
                match &r.error {
                    None => println!(
                        "run {} (seed {}): best {:.6e} after {} evaluations, {}",
                        r.run_id,
                        r.seed,
                        r.best_penalized.unwrap_or(f64::NAN),
                        r.evaluations,
                        if r.feasible == Some(true) {
                            "feasible"
                        } else {
                            "infeasible"
                        }
                    ),
                    Some(e) => println!("run {} (seed {}): failed: {e}", r.run_id, r.seed),
                }
            }
            println!("results in {}", dir.display());
            if summary.failures() > 0 {
                return Err(Failure::Runtime(anyhow::anyhow!(
                    "{} repetition(s) failed",
                    summary.failures()
                )));
            }
        }
        Command::Report {
            dir,
            kinds,
            stn_precision,
            coverage_grid,
            delta,
            scan,
        } => {
            let kinds = kinds
                .iter()
                .map(|k| k.parse::<ReportKind>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| Failure::Config(e.into()))?;
            let opts = ReportOptions {
                stn_precision,
                coverage_grid,
                delta,
                scan,
                ..ReportOptions::default()
            };
            for p in export_reports(&dir, &kinds, &opts).map_err(|e| Failure::Runtime(e.into()))? {
                println!("{}", p.display());
            }
        }
        Command::Compare {
            dir_a,
            dir_b,
            bootstrap,
            seed,
        } => {
            let opts = ReportOptions {
                bootstrap,
                seed,
                ..ReportOptions::default()
            };
            let s = compare_dirs(&dir_a, &dir_b, &opts).map_err(|e| Failure::Runtime(e.into()))?;
            println!(
                "{}",
                serde_json::to_string_pretty(&s).map_err(|e| Failure::Runtime(e.into()))?
            );
        }
        Command::ListProblems => {
            for (id, about) in PROBLEMS {
                println!("{id:<12} {about}");
            }
        }
        Command::PetBatch {
            voxels,
            config,
            out,
            population,
            evaluations,
            seed,
        } => {
            let cfg: PetConfig = match config {
                None => PetConfig::default(),
                Some(p) => {
                    let text = std::fs::read_to_string(&p).map_err(|source| {
                        Failure::Config(
                            ConfigError::Io {
                                path: p.clone(),
                                source,
                            }
                            .into(),
                        )
                    })?;
                    toml::from_str(&text)
                        .with_context(|| format!("reading {}", p.display()))
                        .map_err(Failure::Config)?
                }
            };
            let opt = OptimizerConfig::new(Variant::de(), population, evaluations);
            opt.validate().map_err(|e| Failure::Config(e.into()))?;
            let file = std::fs::File::open(&voxels)
                .with_context(|| format!("opening {}", voxels.display()))
                .map_err(Failure::Runtime)?;
            let data = read_voxels(std::io::BufReader::new(file))
                .with_context(|| format!("reading {}", voxels.display()))
                .map_err(Failure::Runtime)?;
            let fits =
                fit_batch(&cfg, &data, &opt, seed).map_err(|e| Failure::Runtime(e.into()))?;
            let f = std::fs::File::create(&out)
                .with_context(|| format!("creating {}", out.display()))
                .map_err(Failure::Runtime)?;
            write_fits(&fits, cfg.model, f).map_err(|e| Failure::Runtime(e.into()))?;
            println!("{} voxel fits written to {}", fits.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
