//! `schedrisk` — validate, simulate, transform, compare, and report on
//! schedule-risk process models.
//!
//! Exit codes: 0 success, 1 validation/transform failure, 2 parse or I/O
//! failure, 3 runtime failure, 4 usage error. Diagnostics go to stderr with
//! a machine-parseable `error[CODE]:` prefix; data goes to files or stdout.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use schedrisk::io;
use schedrisk::model::{validate_model, ProcessModel};
use schedrisk::scenario::{apply_scenario, Scenario};
use schedrisk::sim::{run_monte_carlo, ResultSet, SimError, SimulationConfig};
use schedrisk::stats::{
    self, boxplot_descriptor, compare, export_results_csv, parse_results_csv, BoxplotDescriptor,
    SummaryStatistics,
};
use schedrisk::TaskCategory;

#[derive(Parser)]
#[command(
    name = "schedrisk",
    version,
    about = "Schedule-risk Monte Carlo analysis for process models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model document against every semantic rule.
    Validate {
        /// Model document (JSON).
        model: PathBuf,
    },
    /// Run a seeded Monte Carlo batch and export per-iteration results.
    Simulate {
        model: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        /// Results CSV output path.
        #[arg(long)]
        out: PathBuf,
        /// Optional per-metric summary statistics (JSON).
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Apply a scenario and write the transformed model in canonical form.
    Transform {
        model: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate baseline and transformed models and report reductions.
    Compare {
        model: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        /// Comparison report output path (JSON).
        #[arg(long)]
        report: PathBuf,
        /// Reuse the master seed on both sides (common random numbers), so
        /// per-iteration differences isolate the scenario effect.
        #[arg(long)]
        paired: bool,
    },
    /// Compute boxplot descriptors from an exported results CSV.
    Report {
        results: PathBuf,
        /// Boxplot descriptor output path (JSON).
        #[arg(long)]
        boxplot: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Monte Carlo iteration count.
    #[arg(long, default_value_t = 10_000)]
    iterations: u64,
    /// Master seed; all randomness derives from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

struct Failure {
    exit: u8,
    message: String,
}

impl Failure {
    fn new(exit: u8, message: impl Into<String>) -> Failure {
        Failure {
            exit,
            message: message.into(),
        }
    }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::new(2, format!("error[IO]: cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| {
        Failure::new(
            2,
            format!("error[IO]: cannot write {}: {e}", path.display()),
        )
    })
}

fn load_model(path: &Path) -> Result<ProcessModel, Failure> {
    let text = read_file(path)?;
    io::parse_model(&text)
        .map_err(|f| Failure::new(2, f.with_source(path.display().to_string()).to_string()))
}

fn load_scenario(path: &Path) -> Result<Scenario, Failure> {
    let text = read_file(path)?;
    io::parse_scenario(&text)
        .map_err(|f| Failure::new(2, f.with_source(path.display().to_string()).to_string()))
}

fn load_valid_model(path: &Path) -> Result<ProcessModel, Failure> {
    let model = load_model(path)?;
    let diagnostics = validate_model(&model);
    if diagnostics.is_empty() {
        Ok(model)
    } else {
        let lines: Vec<String> = diagnostics.iter().map(|d| d.to_string()).collect();
        Err(Failure::new(1, lines.join("\n")))
    }
}

fn run_sim(model: &ProcessModel, config: &SimulationConfig) -> Result<ResultSet, Failure> {
    run_monte_carlo(model, config).map_err(|e| match e {
        SimError::InvalidModel(diags) => {
            let lines: Vec<String> = diags.iter().map(|d| d.to_string()).collect();
            Failure::new(1, lines.join("\n"))
        }
        SimError::InvalidConfig(msg) => Failure::new(4, format!("error[USAGE]: {msg}")),
        SimError::ExecutionCapExceeded { .. } => Failure::new(3, format!("error[RUNTIME]: {e}")),
    })
}

#[derive(Serialize)]
struct MetricSummaries {
    total: SummaryStatistics,
    eliciting_requirements: SummaryStatistics,
    information_exchange: SummaryStatistics,
    system_modeling: SummaryStatistics,
    disciplinary_modeling: SummaryStatistics,
    review_meetings: SummaryStatistics,
}

#[derive(Serialize)]
struct SummaryDocument {
    model: String,
    iterations: u64,
    seed: u64,
    metrics: MetricSummaries,
}

#[derive(Serialize)]
struct BoxplotDocument {
    metrics: Vec<BoxplotDescriptor>,
}

fn summarize_run(rs: &ResultSet) -> Result<MetricSummaries, Failure> {
    let summary = |samples: &[f64]| {
        stats::summarize(samples).map_err(|e| Failure::new(3, format!("error[RUNTIME]: {e}")))
    };
    Ok(MetricSummaries {
        total: summary(&rs.totals())?,
        eliciting_requirements: summary(&rs.category_samples(TaskCategory::ElicitingRequirements))?,
        information_exchange: summary(&rs.category_samples(TaskCategory::InformationExchange))?,
        system_modeling: summary(&rs.category_samples(TaskCategory::SystemLevelModeling))?,
        disciplinary_modeling: summary(&rs.category_samples(TaskCategory::DisciplinaryModeling))?,
        review_meetings: summary(&rs.category_samples(TaskCategory::ReviewMeetings))?,
    })
}

fn to_pretty_json<T: Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Failure::new(3, format!("error[RUNTIME]: serialization failed: {e}")))
}

/// Seed for the transformed side of an unpaired comparison: deterministic,
/// but decorrelated from the baseline stream.
fn unpaired_seed(seed: u64) -> u64 {
    let mut z = seed ^ 0x5851f42d4c957f2d;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate { model } => {
            let parsed = load_model(&model)?;
            let diagnostics = validate_model(&parsed);
            if diagnostics.is_empty() {
                println!(
                    "ok: model \"{}\" is valid ({} steps)",
                    parsed.name,
                    parsed.steps.len()
                );
                Ok(())
            } else {
                let lines: Vec<String> = diagnostics.iter().map(|d| d.to_string()).collect();
                Err(Failure::new(1, lines.join("\n")))
            }
        }
        Command::Simulate {
            model,
            run: args,
            out,
            summary,
        } => {
            let parsed = load_valid_model(&model)?;
            let config = SimulationConfig {
                iterations: args.iterations,
                master_seed: args.seed,
                ..Default::default()
            };
            let results = run_sim(&parsed, &config)?;
            write_file(&out, &export_results_csv(&results))?;
            if let Some(summary_path) = summary {
                let doc = SummaryDocument {
                    model: results.model_name.clone(),
                    iterations: config.iterations,
                    seed: config.master_seed,
                    metrics: summarize_run(&results)?,
                };
                write_file(&summary_path, &to_pretty_json(&doc)?)?;
            }
            println!(
                "wrote {} iterations to {}",
                results.outcomes.len(),
                out.display()
            );
            Ok(())
        }
        Command::Transform {
            model,
            scenario,
            out,
        } => {
            let parsed = load_valid_model(&model)?;
            let scen = load_scenario(&scenario)?;
            let transformed =
                apply_scenario(&parsed, &scen).map_err(|e| Failure::new(1, e.to_string()))?;
            write_file(&out, &io::serialize_model(&transformed))?;
            println!("wrote transformed model to {}", out.display());
            Ok(())
        }
        Command::Compare {
            model,
            scenario,
            run: args,
            report,
            paired,
        } => {
            let parsed = load_valid_model(&model)?;
            let scen = load_scenario(&scenario)?;
            let transformed =
                apply_scenario(&parsed, &scen).map_err(|e| Failure::new(1, e.to_string()))?;
            let base_config = SimulationConfig {
                iterations: args.iterations,
                master_seed: args.seed,
                ..Default::default()
            };
            let transformed_config = SimulationConfig {
                master_seed: if paired {
                    args.seed
                } else {
                    unpaired_seed(args.seed)
                },
                ..base_config
            };
            let baseline_rs = run_sim(&parsed, &base_config)?;
            let transformed_rs = run_sim(&transformed, &transformed_config)?;
            let comparison = compare(&baseline_rs, &transformed_rs)
                .map_err(|e| Failure::new(3, format!("error[RUNTIME]: {e}")))?;
            write_file(&report, &to_pretty_json(&comparison)?)?;
            for metric in &comparison.metrics {
                println!(
                    "{}: median {:.1} -> {:.1} days ({}% reduction)",
                    metric.metric,
                    metric.baseline.median,
                    metric.transformed.median,
                    metric.display.median
                );
            }
            Ok(())
        }
        Command::Report { results, boxplot } => {
            let text = read_file(&results)?;
            let table = parse_results_csv(&text)
                .map_err(|e| Failure::new(2, format!("error[CSV]: {}: {e}", results.display())))?;
            let mut metrics = Vec::new();
            for (label, samples) in table.metrics() {
                metrics.push(
                    boxplot_descriptor(label, samples)
                        .map_err(|e| Failure::new(3, format!("error[RUNTIME]: {e}")))?,
                );
            }
            write_file(&boxplot, &to_pretty_json(&BoxplotDocument { metrics })?)?;
            println!("wrote boxplot descriptors to {}", boxplot.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprintln!("error[USAGE]: {e}");
            return ExitCode::from(4);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("{}", failure.message);
            ExitCode::from(failure.exit)
        }
    }
}
