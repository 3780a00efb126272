//! `codemine` — mine a Git branch, compute per-file complexity metrics,
//! aggregate them into quality marks and rank component experts.

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use codemine_cli::commands;
use codemine_cli::config::{self, CliOverrides, OutputFormat};
use codemine_cli::report;
use codemine_core::squale::MetricId;
use codemine_core::Error;

#[derive(Parser)]
#[command(
    name = "codemine",
    version,
    about = "Repository mining, complexity metrics, quality marks and expert ranking"
)]
struct Cli {
    /// Run configuration file (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<std::path::PathBuf>,

    /// Branch to mine (default: master, falling back to main).
    #[arg(long, global = true)]
    branch: Option<String>,

    /// Expertise window length in days.
    #[arg(long, global = true, value_name = "DAYS")]
    window_days: Option<u32>,

    /// Window end as an RFC 3339 timestamp (default: newest analyzed
    /// commit).
    #[arg(long, global = true, value_name = "ISO8601")]
    reference_time: Option<String>,

    /// Squale weighting strength (soft 3, medium 9, hard 30).
    #[arg(long, global = true)]
    lambda: Option<f64>,

    /// Experts listed per component.
    #[arg(long, global = true, value_name = "N")]
    top_k: Option<usize>,

    /// Output format: json, csv or svg.
    #[arg(long, global = true)]
    format: Option<String>,

    /// Restrict reports to components matching this glob.
    #[arg(long, global = true, value_name = "GLOB")]
    component: Option<String>,

    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Mine the branch and bring the analysis store up to date.
    Analyze,
    /// Rank component experts over the configured window.
    Experts,
    /// Weekly oriented quality deltas per metric with commit counts.
    Timeseries {
        /// Metrics to include (comma-separated: cc,hv,hd,Ca,Ce).
        #[arg(long, value_name = "LIST", default_value = "cc,hv,hd")]
        metrics: String,
    },
    /// Per-file before/after metrics for one commit.
    Commit {
        /// Revision hash (a unique prefix of at least 7 characters works).
        revision: String,
    },
}

fn exit_code_for(error: &Error) -> u8 {
    match error {
        Error::Config(_) | Error::UnknownProfile(_) | Error::UnknownMetric(_) => 2,
        Error::RepositoryNotFound { .. }
        | Error::BranchNotFound { .. }
        | Error::VcsToolFailure { .. } => 3,
        Error::StoreCorruption { .. } => 4,
        Error::MissingMetrics(_) => 5,
        _ => 1,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let overrides = CliOverrides {
        branch: cli.branch,
        window_days: cli.window_days,
        reference_time: cli.reference_time,
        lambda: cli.lambda,
        top_k: cli.top_k,
        format: cli.format,
        component: cli.component,
    };
    let config_path = cli
        .config
        .ok_or_else(|| Error::Config("--config <path> is required".into()))?;
    let config = config::load(&config_path, &overrides)?;

    // Run metadata: every effective value, echoed on stderr for all
    // commands and formats.
    eprintln!(
        "effective-config: {}",
        serde_json::to_string(&config).expect("config serializes")
    );

    match cli.command {
        CliCommand::Analyze => {
            let summary = commands::run_analyze(&config)?;
            print!("{}", report::to_json(&summary)?);
        }
        CliCommand::Experts => {
            let experts = commands::run_experts(&config)?;
            match config.format {
                OutputFormat::Json => print!("{}", report::to_json(&experts)?),
                OutputFormat::Csv => print!("{}", report::experts_csv(&experts)),
                OutputFormat::Svg => {
                    return Err(Error::Config(
                        "svg output applies to the timeseries command only".into(),
                    ))
                }
            }
        }
        CliCommand::Timeseries { metrics } => {
            let metrics = parse_metrics(&metrics)?;
            let series = commands::run_timeseries(&config, &metrics)?;
            match config.format {
                OutputFormat::Json => print!("{}", report::to_json(&series)?),
                OutputFormat::Csv => print!("{}", report::timeseries_csv(&series)),
                OutputFormat::Svg => print!("{}", report::timeseries_svg(&series)),
            }
        }
        CliCommand::Commit { revision } => {
            let commit = commands::run_commit(&config, &revision)?;
            match config.format {
                OutputFormat::Json => print!("{}", report::to_json(&commit)?),
                _ => return Err(Error::Config("the commit command emits json only".into())),
            }
        }
    }
    Ok(())
}

fn parse_metrics(list: &str) -> Result<Vec<MetricId>, Error> {
    let mut metrics = Vec::new();
    for part in list.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let metric = MetricId::parse(part)?;
        if !metrics.contains(&metric) {
            metrics.push(metric);
        }
    }
    if metrics.is_empty() {
        return Err(Error::Config("no metrics selected".into()));
    }
    Ok(metrics)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(exit_code_for(&error))
        }
    }
}
