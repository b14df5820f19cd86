//! `nomiclaw`: simulate, export, measure, test and code themes.

mod analyze;
mod builders;
mod error;
mod export;
mod inputs;
mod manifest;
mod report;
mod simulate;
mod table;
mod themes;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nomiclaw_core::analysis::GeeCovariates;
use nomiclaw_core::metrics::{FirstMoverMode, Grouping, Metric, MetricOptions, ReciprocityMode};
use nomiclaw_core::protocol::Condition;
use nomiclaw_stats::PersistenceMode;

use crate::error::CliResult;
use crate::inputs::{load_rows, parse_condition};

#[derive(Parser)]
#[command(name = "nomiclaw", version, about = "Propose, justify and vote: simulation and analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every game in a manifest and write one log per run.
    Simulate {
        manifest: PathBuf,
        /// Games played at once.
        #[arg(long, env = "NOMIC_JOBS")]
        jobs: Option<usize>,
        /// Chat endpoint for backend agents; overrides the manifest.
        #[arg(long, env = "NOMIC_BACKEND_URL")]
        backend_url: Option<String>,
        /// Overrides the manifest's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Flatten a directory of run logs into the analysis CSV.
    Export {
        logs: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Write the table even when agents contribute unequal row counts.
        #[arg(long)]
        allow_unbalanced: bool,
    },
    /// Interaction metrics, mean and SD per group.
    Metrics {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, value_enum, default_value_t = By::ModelCondition)]
        by: By,
        #[arg(long, value_parser = parse_condition)]
        condition: Option<Condition>,
        /// Include the run-level and text metrics as well.
        #[arg(long)]
        all: bool,
        /// Means table.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Long table: one row per group and metric with n, mean and SD.
        #[arg(long)]
        long: Option<PathBuf>,
        #[command(flatten)]
        metric: MetricFlags,
    },
    /// Hypothesis tests, regressions and profile analyses.
    Stats {
        #[command(subcommand)]
        command: StatsCommand,
    },
    /// Theme coding: annotation, agreement and trends.
    Themes {
        #[command(subcommand)]
        command: ThemesCommand,
    },
    /// Write all figure-ready tables into one directory.
    Report {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_parser = parse_condition)]
        condition: Option<Condition>,
        /// Reference model for the regressions (default: first in name order).
        #[arg(long = "ref")]
        reference: Option<String>,
        /// Clusters to cut the Ward tree into.
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, value_enum, default_value_t = Mode::Marginal)]
        mode: Mode,
        #[command(flatten)]
        metric: MetricFlags,
    },
}

#[derive(Args, Clone)]
struct MetricFlags {
    /// Rounds per game, used to find excluded rounds.
    #[arg(long, default_value_t = 5)]
    rounds: u32,
    #[arg(long, value_enum, default_value_t = Reciprocity::PerSupporter)]
    reciprocity: Reciprocity,
    #[arg(long, value_enum, default_value_t = FirstMover::RoundOne)]
    first_mover: FirstMover,
}

impl MetricFlags {
    fn options(&self) -> MetricOptions {
        MetricOptions {
            reciprocity: match self.reciprocity {
                Reciprocity::PerSupporter => ReciprocityMode::PerSupporter,
                Reciprocity::PerRound => ReciprocityMode::PerRound,
            },
            first_mover: match self.first_mover {
                FirstMover::RoundOne => FirstMoverMode::RoundOne,
                FirstMover::FinalScore => FirstMoverMode::FinalScore,
            },
        }
    }
}

#[derive(Args)]
struct Input {
    #[arg(long)]
    csv: PathBuf,
    #[arg(long, value_parser = parse_condition)]
    condition: Option<Condition>,
}

impl Input {
    fn load(&self) -> CliResult<Vec<nomiclaw_core::ledger::InteractionRow>> {
        load_rows(&self.csv, self.condition)
    }
}

#[derive(Args)]
struct ProfileFlags {
    /// Comma-separated metric codes (default: SVR,AVR,WR,VV,RI,CSR,BS,ED,CC).
    #[arg(long, value_delimiter = ',', value_parser = parse_metric)]
    metrics: Option<Vec<Metric>>,
    /// One point per run and agent instead of per model and condition.
    #[arg(long)]
    by_unit: bool,
    #[command(flatten)]
    metric: MetricFlags,
}

impl ProfileFlags {
    fn args(&self) -> analyze::ProfileArgs {
        analyze::ProfileArgs {
            metrics: self.metrics.clone(),
            by_unit: self.by_unit,
            num_rounds: self.metric.rounds,
            opts: self.metric.options(),
        }
    }
}

#[derive(Subcommand)]
enum StatsCommand {
    /// Win counts and rates per model, with a chi-square test of equal rates.
    Wins {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Two-proportion z-tests on win rates for every model pair, BH-adjusted.
    Pairwise {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Binomial GLM of winning on model.
    Glm {
        #[command(flatten)]
        input: Input,
        #[arg(long = "ref")]
        reference: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exchangeable GEE of winning, clustered by run.
    Gee {
        #[command(flatten)]
        input: Input,
        #[arg(long = "ref")]
        reference: Option<String>,
        /// Leave the model factor out.
        #[arg(long)]
        no_model: bool,
        /// Leave the vignette factor out.
        #[arg(long)]
        no_vignette: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Principal components of the standardized metric profiles.
    Pca {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        profile: ProfileFlags,
        #[arg(long)]
        scores: Option<PathBuf>,
        #[arg(long)]
        loadings: Option<PathBuf>,
    },
    /// Ward clustering of the standardized metric profiles.
    Cluster {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        profile: ProfileFlags,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ThemesCommand {
    /// Label every stage text with one code and fill the mention columns.
    Annotate {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        out: PathBuf,
        /// `mock` or a model name served by the backend; repeat for several.
        /// The first one fills the theme columns.
        #[arg(long = "classifier", default_value = "mock")]
        classifiers: Vec<String>,
        /// All labels as JSON lines (default: next to --out).
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Resumable JSONL checkpoint.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Requests per second across all workers.
        #[arg(long)]
        rate: Option<f64>,
        /// Stop after this many new requests.
        #[arg(long)]
        max_requests: Option<usize>,
        #[arg(long, env = "NOMIC_BACKEND_URL")]
        backend_url: Option<String>,
    },
    /// Stratified sample of stage texts for human coding.
    Sample {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.10)]
        fraction: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Cohen's kappa of each classifier against human codes.
    Agreement {
        /// Sample CSV with the `human_label` column filled in.
        #[arg(long)]
        human: PathBuf,
        /// Labels JSONL written by `annotate`.
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Theme frequencies per vignette and stage, and persistence odds ratios.
    Trends {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        persistence: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Mode::Marginal)]
        mode: Mode,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum By {
    ModelCondition,
    Model,
    Condition,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum Reciprocity {
    PerSupporter,
    PerRound,
}

#[derive(Clone, Copy, ValueEnum)]
enum FirstMover {
    RoundOne,
    FinalScore,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Marginal,
    Conditional,
}

impl From<Mode> for PersistenceMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Marginal => PersistenceMode::Marginal,
            Mode::Conditional => PersistenceMode::Conditional,
        }
    }
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    Metric::ALL
        .into_iter()
        .find(|m| m.as_str().eq_ignore_ascii_case(s.trim()))
        .ok_or_else(|| format!("unknown metric `{s}`"))
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate { manifest, jobs, backend_url, out } => {
            simulate::run(simulate::SimulateArgs { manifest, jobs, backend_url, output_dir: out })
        }
        Command::Export { logs, out, allow_unbalanced } => export::run(&logs, &out, allow_unbalanced),
        Command::Metrics { csv, by, condition, all, out, long, metric } => {
            let rows = load_rows(&csv, condition)?;
            let grouping = match by {
                By::ModelCondition => Grouping::ModelCondition,
                By::Model => Grouping::Model,
                By::Condition => Grouping::Condition,
                By::All => Grouping::All,
            };
            analyze::metrics(
                &rows,
                analyze::MetricsArgs {
                    grouping,
                    num_rounds: metric.rounds,
                    opts: metric.options(),
                    all_metrics: all,
                    out,
                    long,
                },
            )
        }
        Command::Stats { command } => match command {
            StatsCommand::Wins { input, out } => analyze::wins(&input.load()?, out),
            StatsCommand::Pairwise { input, alpha, out } => analyze::pairwise(&input.load()?, alpha, out),
            StatsCommand::Glm { input, reference, out } => analyze::glm(&input.load()?, reference.as_deref(), out),
            StatsCommand::Gee { input, reference, no_model, no_vignette, out } => analyze::gee(
                &input.load()?,
                GeeCovariates { model: !no_model, vignette: !no_vignette },
                reference.as_deref(),
                out,
            ),
            StatsCommand::Pca { input, profile, scores, loadings } => {
                analyze::pca_cmd(&input.load()?, &profile.args(), scores, loadings)
            }
            StatsCommand::Cluster { input, profile, k, out } => {
                analyze::cluster_cmd(&input.load()?, &profile.args(), k, out)
            }
        },
        Command::Themes { command } => match command {
            ThemesCommand::Annotate {
                input,
                out,
                classifiers,
                labels,
                checkpoint,
                workers,
                rate,
                max_requests,
                backend_url,
            } => themes::annotate(
                &input.load()?,
                themes::AnnotateArgs { out, classifiers, labels, checkpoint, workers, rate, max_requests, backend_url },
            ),
            ThemesCommand::Sample { input, out, fraction, seed } => {
                themes::sample(&input.load()?, fraction, seed, &out)
            }
            ThemesCommand::Agreement { human, labels, out } => themes::agreement(&human, &labels, out),
            ThemesCommand::Trends { input, out, persistence, mode } => {
                themes::trends(&input.load()?, mode.into(), out, persistence)
            }
        },
        Command::Report { csv, out, condition, reference, k, alpha, mode, metric } => {
            let rows = load_rows(&csv, condition)?;
            report::run(
                &rows,
                &report::ReportArgs { out, reference, num_rounds: metric.rounds, k, alpha, mode: mode.into() },
            )
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
