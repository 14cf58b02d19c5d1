//! `twosdr` command-line interface.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use twosdr::synth::{sweep, SweepAxis, SynthConfig};
use twosdr::Rng;
use twosdr_cli::reproduce::{reproduce, sweep_to_csv, TableId};
use twosdr_cli::runner::{run, write_report};
use twosdr_cli::spec::ExperimentSpec;
use twosdr_cli::{instructions, repo_root, CliError};

#[derive(Parser)]
#[command(
    name = "twosdr",
    version,
    about = "Fairness-aware two-stage regression and classification experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment spec file and write its report bundle.
    Run {
        /// Path to an experiment spec (TOML).
        spec: PathBuf,
        /// Override the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: the spec's output_dir, else out/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// AUC tie handling.
        #[arg(long, value_parser = ["strict", "half"])]
        tie_mode: Option<String>,
        /// Append an intercept to the sensitive block in the first stage.
        #[arg(long, value_parser = ["on", "off"])]
        first_stage_intercept: Option<String>,
        /// Rescale residual group variances (binary sensitive attributes).
        #[arg(long, value_parser = ["on", "off"])]
        variance_correction: Option<String>,
        /// Apply the per-group quantile transform to non-binary attributes.
        #[arg(long)]
        quantile_transform: bool,
        /// Drop attributes whose |correlation| with the target exceeds t.
        #[arg(long, value_name = "t")]
        drop_correlated: Option<f64>,
        /// Oversample the minority class in training splits.
        #[arg(long)]
        resample_balance: bool,
    },
    /// Run a canned benchmark bundle and compare against reference values.
    Reproduce {
        /// One of t3..t11 or fig1.
        table_id: String,
        /// Output directory (default: out/<table-id>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the per-point run count (fig1 only).
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Sweep one synthetic-generator parameter and write a tidy CSV.
    SynthSweep {
        /// Axis: n, d_x, sigma_eta_s, or std_s.
        axis: String,
        /// Comma-separated axis values (defaults to the fig1 grid).
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        runs: usize,
        #[arg(long, default_value_t = 1729)]
        seed: u64,
        /// Output CSV path (default: out/sweep_<axis>.csv).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print download and preparation steps for a benchmark dataset.
    FetchInstructions {
        /// One of adult, candc, german, compas, lsac.
        dataset: String,
    },
}

fn default_sweep_values(axis: SweepAxis) -> Vec<f64> {
    match axis {
        SweepAxis::N => vec![100.0, 300.0, 1000.0, 3000.0, 10000.0],
        SweepAxis::DX => vec![1.0, 2.0, 5.0, 8.0, 10.0],
        SweepAxis::SigmaEtaS => vec![0.0, 0.1, 0.2, 0.3, 0.4],
        SweepAxis::StdS => vec![0.75, 1.0, 1.5, 2.0],
    }
}

#[allow(clippy::too_many_arguments)]
fn apply_flag_overrides(
    spec: &mut ExperimentSpec,
    seed: Option<u64>,
    tie_mode: Option<String>,
    first_stage_intercept: Option<String>,
    variance_correction: Option<String>,
    quantile_transform: bool,
    drop_correlated: Option<f64>,
    resample_balance: bool,
) {
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    if let Some(mode) = tie_mode {
        spec.tie_mode = if mode == "half" {
            twosdr::metrics::TieMode::Half
        } else {
            twosdr::metrics::TieMode::Strict
        };
    }
    if let Some(v) = first_stage_intercept {
        spec.preprocess.first_stage_intercept = v == "on";
    }
    if let Some(v) = variance_correction {
        spec.preprocess.variance_correction = v == "on";
    }
    if quantile_transform {
        spec.preprocess.quantile_transform = true;
    }
    if let Some(t) = drop_correlated {
        spec.preprocess.drop_correlated = Some(t);
    }
    if resample_balance {
        spec.preprocess.resample_balance = true;
    }
}

fn main() -> ExitCode {
    match run_cli() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run_cli() -> Result<(), CliError> {
    let cli = Cli::parse();
    let root = repo_root();
    match cli.command {
        Command::Run {
            spec,
            seed,
            out,
            tie_mode,
            first_stage_intercept,
            variance_correction,
            quantile_transform,
            drop_correlated,
            resample_balance,
        } => {
            let mut spec = ExperimentSpec::from_path(&spec).map_err(|e| CliError::new("spec", e))?;
            apply_flag_overrides(
                &mut spec,
                seed,
                tie_mode,
                first_stage_intercept,
                variance_correction,
                quantile_transform,
                drop_correlated,
                resample_balance,
            );
            let report = run(&spec, &root)?;
            let out_dir = out.unwrap_or_else(|| {
                spec.output_dir
                    .as_ref()
                    .map(PathBuf::from)
                    .unwrap_or_else(|| PathBuf::from("out").join(&spec.name))
            });
            write_report(&report, &out_dir)?;
            println!("run {} ({} splits)", report.name, report.splits.len());
            for (metric, m) in &report.aggregate {
                println!("  {metric}: {:.4} (stderr {:.4})", m.mean, m.stderr);
            }
            println!("report written to {}", out_dir.display());
            Ok(())
        }
        Command::Reproduce {
            table_id,
            out,
            runs,
        } => {
            let table = TableId::parse(&table_id)?;
            let out_dir = out.unwrap_or_else(|| PathBuf::from("out").join(table.as_str()));
            let report = reproduce(table, &root, &out_dir, runs)?;
            if table == TableId::Fig1 {
                println!(
                    "fig1 sweeps written to {} ({} cells)",
                    out_dir.display(),
                    report.sweeps.len()
                );
            } else {
                for c in &report.checks {
                    let observed = c
                        .observed
                        .map(|v| format!("{v:.4}"))
                        .unwrap_or_else(|| "missing".into());
                    println!(
                        "[{}] {} {}: observed {} (reference {}) ... {}",
                        report.table,
                        c.spec,
                        c.metric,
                        observed,
                        c.criterion,
                        if c.pass { "PASS" } else { "FAIL" }
                    );
                }
                println!(
                    "{}: {}/{} reference checks passed; reports in {}",
                    report.table,
                    report.checks.iter().filter(|c| c.pass).count(),
                    report.checks.len(),
                    out_dir.display()
                );
            }
            Ok(())
        }
        Command::SynthSweep {
            axis,
            values,
            runs,
            seed,
            out,
        } => {
            let axis = SweepAxis::parse(&axis).map_err(|e| CliError::new("sweep", e))?;
            let values = if values.is_empty() {
                default_sweep_values(axis)
            } else {
                values
            };
            let cells = sweep(&SynthConfig::default(), axis, &values, runs, &Rng::new(seed))
                .map_err(|e| CliError::new("sweep", e))?;
            let out_path = out.unwrap_or_else(|| {
                PathBuf::from("out").join(format!("sweep_{}.csv", axis.as_str()))
            });
            if let Some(parent) = out_path.parent() {
                std::fs::create_dir_all(parent).map_err(|e| CliError::new("write", e))?;
            }
            std::fs::write(&out_path, sweep_to_csv(&cells))
                .map_err(|e| CliError::new("write", e))?;
            println!("sweep written to {}", out_path.display());
            Ok(())
        }
        Command::FetchInstructions { dataset } => match instructions::dataset_info(&dataset) {
            Some(info) => {
                print!("{}", instructions::instructions_text(info));
                Ok(())
            }
            None => Err(CliError::new(
                "fetch-instructions",
                format!(
                    "unknown dataset '{dataset}' (expected one of: {})",
                    instructions::DATASETS
                        .iter()
                        .map(|d| d.id)
                        .collect::<Vec<_>>()
                        .join(", ")
                ),
            )),
        },
    }
}
