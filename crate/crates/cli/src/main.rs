//! `mfv`: load forecast repositories, cluster and sample them, render chart
//! stimuli and benchmark sampling strategies.

mod config;

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use mfv_core::clustering::{dbscan_1d, find_epsilon, CountRange};
use mfv_core::forecast_data::{filter_models, load_repository, Purpose};
use mfv_core::metrics::{bench, summary_table, write_csv, BenchParams, Strategy, WassersteinScope};
use mfv_core::render::{
    render_batch, render_chart, BatchSettings, ChartArtifacts, ChartSpec, Design, TimePoint,
};
use mfv_core::sampling::{horizon_sample, progressive_bundle, HorizonSampleParams};
use mfv_core::summary_stats::{ci95_with, mean_trajectory, step_profiles, IntervalMethod};
use mfv_core::{ErrorCategory, ForecastRepository};

use config::{Overrides, RunConfig, TimePointEntry, SEED_ENV};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<mfv_core::Error> for CliError {
    fn from(e: mfv_core::Error) -> Self {
        match e.category() {
            ErrorCategory::Data => CliError::Data(e.to_string()),
            ErrorCategory::Io => CliError::Io(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "mfv",
    version,
    about = "Cluster-based sampling and rendering of multiple-forecast visualizations"
)]
#[command(arg_required_else_help = true)]
struct Cli {
    /// TOML run configuration; flags take precedence over its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print the effective configuration as TOML and exit.
    #[arg(long, global = true)]
    print_config: bool,
    #[arg(long, global = true)]
    forecast_csv: Option<PathBuf>,
    #[arg(long, global = true)]
    truth_csv: Option<PathBuf>,
    /// Forecast date, YYYY-MM-DD.
    #[arg(long, global = true)]
    reference_date: Option<NaiveDate>,
    #[arg(long, global = true)]
    horizon: Option<usize>,
    #[arg(long, global = true)]
    target_k: Option<usize>,
    /// Fixed clustering radius; skips the automatic search where allowed.
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Sampling seed. Falls back to the config file, then MFV_SEED, then 0.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    n_draws: Option<usize>,
    #[arg(long, global = true)]
    design: Option<String>,
    /// Draw the actual outcome at the horizon.
    #[arg(long, global = true)]
    truth: bool,
    /// Output file, or output directory for `render-batch`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load and filter one repository and summarise what was kept.
    Ingest(TimePointArg),
    /// Cluster a value vector read one number per line.
    Cluster {
        /// Input file; standard input when omitted or `-`.
        #[arg(long)]
        values: Option<PathBuf>,
    },
    /// Horizon or progressive sampling of one repository.
    #[command(subcommand)]
    Sample(SampleCommand),
    /// Mean trajectory, 95% band and density profiles.
    Stats {
        #[command(flatten)]
        tp: TimePointArg,
        #[arg(long, value_enum, default_value_t = Interval::Percentile)]
        interval: Interval,
        #[arg(long, default_value_t = 128)]
        grid_points: usize,
    },
    /// Render one chart.
    Render(TimePointArg),
    /// Render every design for every configured time point.
    RenderBatch,
    /// Score sampling strategies against the full repositories.
    Bench {
        /// Comma-separated strategy names.
        #[arg(long, value_delimiter = ',', default_values_t = Strategy::ALL.map(|s| s.name().to_string()))]
        strategies: Vec<String>,
        /// Comma-separated seeds; defaults to the run seed.
        #[arg(long, value_delimiter = ',', conflicts_with = "n_seeds")]
        seeds: Vec<u64>,
        /// Use seeds `seed .. seed + n`.
        #[arg(long)]
        n_seeds: Option<u64>,
        #[arg(long, value_enum, default_value_t = Scope::Horizon)]
        scope: Scope,
    },
    /// Repository inspection.
    #[command(subcommand)]
    Repo(RepoCommand),
}

#[derive(Subcommand, Debug)]
enum SampleCommand {
    /// One representative series per horizon cluster.
    Horizon(TimePointArg),
    /// Per-step clusters and the transitions between them.
    Progressive(TimePointArg),
}

#[derive(Subcommand, Debug)]
enum RepoCommand {
    /// Print the filtered repository as JSON.
    Dump(TimePointArg),
}

#[derive(Args, Debug, Clone)]
struct TimePointArg {
    /// Configured time point id; overrides --reference-date.
    #[arg(long)]
    time_point: Option<String>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Interval {
    Percentile,
    Normal,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Scope {
    Horizon,
    AllSteps,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mfv: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    let overrides = Overrides {
        forecast_csv: cli.forecast_csv.clone(),
        truth_csv: cli.truth_csv.clone(),
        reference_date: cli.reference_date,
        horizon: cli.horizon,
        target_k: cli.target_k,
        epsilon: cli.epsilon,
        seed: cli.seed,
        n_draws: cli.n_draws,
        out: cli.out.clone(),
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    let cfg = file.resolve(overrides, env_seed.as_deref())?;

    if cli.print_config {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    let Some(command) = cli.command else {
        return Err(CliError::Usage(
            "no subcommand given; see `mfv --help`".into(),
        ));
    };
    let out = cli.out.as_deref();

    match command {
        Command::Ingest(tp) => {
            let (raw, repo) = load(&cfg, &tp)?;
            let excluded: Vec<&str> = raw
                .forecasts
                .iter()
                .map(|f| f.model_id.as_str())
                .filter(|id| !repo.forecasts.iter().any(|f| f.model_id == *id))
                .collect();
            let summary = IngestSummary {
                reference_date: repo.reference_date,
                horizon: repo.horizon_steps,
                forecasts: repo.len(),
                models: repo.forecasts.iter().map(|f| f.model_id.as_str()).collect(),
                excluded,
                incomplete: raw.incomplete.iter().map(|f| f.model_id.as_str()).collect(),
                history_weeks: repo.history.len(),
                truth_at_horizon: repo.truth_at_horizon,
            };
            emit_json(&summary, out)
        }
        Command::Cluster { values } => {
            let values = read_values(values.as_deref())?;
            let clustering = match cfg.epsilon {
                Some(eps) => dbscan_1d(&values, eps)?,
                None => find_epsilon(&values, cfg.target_k, k_range(&cfg))?.1,
            };
            emit_json(&clustering, out)
        }
        Command::Sample(SampleCommand::Horizon(tp)) => {
            let (_, repo) = load(&cfg, &tp)?;
            emit_json(&horizon_sample(&repo, &sampling(&cfg))?, out)
        }
        Command::Sample(SampleCommand::Progressive(tp)) => {
            let (_, repo) = load(&cfg, &tp)?;
            let eps = match cfg.epsilon {
                Some(e) => e,
                None => find_epsilon(&repo.horizon_values(), cfg.target_k, k_range(&cfg))?.0,
            };
            emit_json(&progressive_bundle(&repo, eps)?, out)
        }
        Command::Stats {
            tp,
            interval,
            grid_points,
        } => {
            let (_, repo) = load(&cfg, &tp)?;
            let method = match interval {
                Interval::Percentile => IntervalMethod::Percentile,
                Interval::Normal => IntervalMethod::Normal,
            };
            let stats = Stats {
                mean: mean_trajectory(&repo)?,
                band: ci95_with(&repo, method)?,
                interval: method,
                densities: step_profiles(&repo, grid_points)?,
            };
            emit_json(&stats, out)
        }
        Command::Render(tp) => {
            let name = cli
                .design
                .as_deref()
                .ok_or_else(|| CliError::Usage("render needs --design".into()))?;
            let design: Design = name
                .parse()
                .map_err(|e: mfv_core::Error| CliError::Usage(e.to_string()))?;
            let (_, repo) = load(&cfg, &tp)?;
            let svg = render_one(&cfg, &repo, design, cli.truth)?;
            emit_text(&svg, out)
        }
        Command::RenderBatch => {
            let dir = cfg
                .out_dir
                .clone()
                .unwrap_or_else(|| PathBuf::from("stimuli"));
            let mut time_points = Vec::new();
            for entry in cfg.time_points() {
                let (_, repo) = load_at(&cfg, entry.reference_date)?;
                check_count(&entry, &repo)?;
                time_points.push(TimePoint {
                    meta: entry.meta(repo.len()),
                    repo,
                });
            }
            let settings = BatchSettings {
                frequency_epsilon: cfg.frequency_epsilon,
                history_weeks: cfg.history_weeks,
                n_levels: cfg.n_levels,
                config_hash: Some(cfg.hash()),
                ..BatchSettings::new(sampling(&cfg))
            };
            let manifest = render_batch(&time_points, &dir, &settings)?;
            eprintln!(
                "wrote {} charts and manifest to {}",
                manifest.files.len(),
                dir.display()
            );
            Ok(())
        }
        Command::Bench {
            strategies,
            seeds,
            n_seeds,
            scope,
        } => {
            let strategies: Vec<Strategy> = strategies
                .iter()
                .map(|s| {
                    s.parse()
                        .map_err(|e: mfv_core::Error| CliError::Usage(e.to_string()))
                })
                .collect::<Result<_, _>>()?;
            let seeds = match (seeds.is_empty(), n_seeds) {
                (_, Some(n)) => (0..n).map(|i| cfg.seed().wrapping_add(i)).collect(),
                (true, None) => vec![cfg.seed()],
                (false, None) => seeds,
            };
            let mut time_points = Vec::new();
            for entry in cfg
                .time_points()
                .into_iter()
                .filter(|e| e.purpose == Purpose::Study)
            {
                let (_, repo) = load_at(&cfg, entry.reference_date)?;
                check_count(&entry, &repo)?;
                time_points.push((entry.id, repo));
            }
            let params = BenchParams {
                sampling: sampling(&cfg),
                scope: match scope {
                    Scope::Horizon => WassersteinScope::Horizon,
                    Scope::AllSteps => WassersteinScope::AllSteps,
                },
            };
            let rows = bench(&strategies, &time_points, &seeds, &params)?;
            let mut csv = Vec::new();
            write_csv(&rows, &mut csv)?;
            match out {
                Some(path) => {
                    write_file(path, &csv)?;
                    print!("{}", summary_table(&rows));
                }
                None => io::stdout()
                    .write_all(&csv)
                    .map_err(|e| CliError::Io(format!("<stdout>: {e}")))?,
            }
            Ok(())
        }
        Command::Repo(RepoCommand::Dump(tp)) => {
            let (_, repo) = load(&cfg, &tp)?;
            emit_json(&repo, out)
        }
    }
}

#[derive(Serialize)]
struct IngestSummary<'a> {
    reference_date: NaiveDate,
    horizon: usize,
    forecasts: usize,
    models: Vec<&'a str>,
    excluded: Vec<&'a str>,
    incomplete: Vec<&'a str>,
    history_weeks: usize,
    truth_at_horizon: Option<f64>,
}

#[derive(Serialize)]
struct Stats {
    mean: Vec<f64>,
    band: mfv_core::BandSeries,
    interval: IntervalMethod,
    densities: Vec<mfv_core::DensityProfile>,
}

fn k_range(cfg: &RunConfig) -> CountRange {
    CountRange::new(cfg.k_range[0], cfg.k_range[1])
}

fn sampling(cfg: &RunConfig) -> HorizonSampleParams {
    HorizonSampleParams {
        target_k: cfg.target_k,
        k_range: k_range(cfg),
        seed: cfg.seed(),
        n_draws: cfg.n_draws,
    }
}

fn resolve_date(cfg: &RunConfig, tp: &TimePointArg) -> Result<NaiveDate, CliError> {
    match &tp.time_point {
        Some(id) => cfg
            .time_points()
            .into_iter()
            .find(|e| &e.id == id)
            .map(|e| e.reference_date)
            .ok_or_else(|| CliError::Usage(format!("unknown time point `{id}`"))),
        None => cfg
            .reference_date
            .ok_or_else(|| CliError::Usage("give --reference-date or --time-point".into())),
    }
}

fn load(
    cfg: &RunConfig,
    tp: &TimePointArg,
) -> Result<(ForecastRepository, ForecastRepository), CliError> {
    load_at(cfg, resolve_date(cfg, tp)?)
}

/// Raw and filtered repositories at `date`.
fn load_at(
    cfg: &RunConfig,
    date: NaiveDate,
) -> Result<(ForecastRepository, ForecastRepository), CliError> {
    let forecast = cfg.forecast_csv.as_deref().ok_or_else(|| {
        CliError::Usage("no forecast CSV; give --forecast-csv or set forecast_csv".into())
    })?;
    let truth = cfg
        .truth_csv
        .as_deref()
        .ok_or_else(|| CliError::Usage("no truth CSV; give --truth-csv or set truth_csv".into()))?;
    let raw = load_repository(forecast, truth, date, cfg.horizon)?;
    let repo = filter_models(&raw, &cfg.excluded_prefixes);
    Ok((raw, repo))
}

fn check_count(entry: &TimePointEntry, repo: &ForecastRepository) -> Result<(), CliError> {
    match entry.count {
        Some(n) if n != repo.len() => Err(CliError::Data(format!(
            "time point {} expects {n} forecasts after filtering, found {}",
            entry.id,
            repo.len()
        ))),
        _ => Ok(()),
    }
}

fn render_one(
    cfg: &RunConfig,
    repo: &ForecastRepository,
    design: Design,
    truth: bool,
) -> Result<String, CliError> {
    let params = sampling(cfg);
    let sample = matches!(
        design,
        Design::HorizonMfv | Design::ProgressiveBase | Design::ProgressiveFrequency
    )
    .then(|| horizon_sample(repo, &params))
    .transpose()?;
    let bundle = match design {
        Design::ProgressiveBase | Design::ProgressiveFrequency => {
            let eps = match (design, cfg.frequency_epsilon, cfg.epsilon) {
                (Design::ProgressiveFrequency, Some(e), _) => e,
                (_, _, Some(e)) => e,
                _ => sample.as_ref().expect("sampled above").epsilon,
            };
            Some(progressive_bundle(repo, eps)?)
        }
        _ => None,
    };
    let mean = mean_trajectory(repo)?;
    let band = ci95_with(repo, IntervalMethod::Percentile)?;
    let densities = match design {
        Design::Violin | Design::Density => Some(step_profiles(repo, 128)?),
        _ => None,
    };
    let artifacts = ChartArtifacts {
        horizon_sample: sample.as_ref(),
        bundle: bundle.as_ref(),
        band: Some(&band),
        densities: densities.as_deref(),
        mean: Some(&mean),
    };
    let spec = ChartSpec {
        history_weeks: cfg.history_weeks,
        n_levels: cfg.n_levels,
        ..ChartSpec::new(design).with_truth(truth)
    };
    Ok(render_chart(repo, &artifacts, &spec)?.text)
}

fn read_values(path: Option<&Path>) -> Result<Vec<f64>, CliError> {
    let (text, name) = match path {
        Some(p) if p != Path::new("-") => {
            let text = fs::read_to_string(p).map_err(|e| match e.kind() {
                io::ErrorKind::NotFound => {
                    CliError::Data(format!("file not found: {}", p.display()))
                }
                _ => CliError::Io(format!("{}: {e}", p.display())),
            })?;
            (text, p.display().to_string())
        }
        _ => {
            let mut text = String::new();
            io::stdin()
                .read_to_string(&mut text)
                .map_err(|e| CliError::Io(format!("<stdin>: {e}")))?;
            (text, "<stdin>".to_string())
        }
    };
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse::<f64>().map_err(|_| {
                CliError::Data(format!("{name}:{}: not a number: `{}`", i + 1, l.trim()))
            })
        })
        .collect()
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn emit_text(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => write_file(path, text.as_bytes()),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(format!("<stdout>: {e}"))),
    }
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("serializable output") + "\n";
    emit_text(&text, out)
}
