//! Command handlers behind the `ordinal-unloc` binary.
//!
//! Every command writes its artifacts into an output directory and finishes
//! with `manifest.json`, which lists the artifacts and holds everything
//! needed to rerun the command.

pub mod config;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use ordinal_unloc::bench::{self, ExperimentConfig, ExperimentKind, ExperimentResult};
use ordinal_unloc::ingest::{
    self, Aggregator, EstimateMode, LocalizeOptions, LocalizeReport, MeasurementSet, Role, Roster, SyntheticSpec,
};
use ordinal_unloc::{Error, SolverOptions};

use config::Setting;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => CliError::Config(e.to_string()),
            Error::Parse(_) | Error::Io(_) | Error::SampleOutOfRange { .. } => CliError::Input(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "ordinal-unloc", version, about = "Localization from ordinal distance comparisons")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

const RESULTS_HELP: &str = "Writes results.csv, results.json, run.conf and manifest.json into --out.\n\
results.csv columns: kind,anchors,noise,method,rmse,rmse_se,mse,mse_se,tau,tau_se,flipped,trials,flagged,unreliable\n\
(noise is sigma, a:b exponent range, or c*sigma_T^2; tau and flipped are empty where not defined).\n\
Exit codes: 0 ok, 1 config error, 2 input file error, 3 unreliable result.";

const POSITIONS_HELP: &str = "Writes positions.csv and manifest.json into --out.\n\
positions.csv columns: target_id,kind,sample,x,y,z,error\n\
kind is estimate (median/mean aggregate), sample (one RSSI sample index) or averaged (mean of the target's per-sample estimates, written when there are several);\n\
z is empty in 2-D, error is empty without a --field file giving the target's true position.\n\
Exit codes: 0 ok, 1 config error, 2 input file error, 3 a target could not be localized.";

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte-Carlo simulation of one experiment kind
    #[command(after_help = RESULTS_HELP)]
    Simulate(ExperimentArgs),
    /// Method comparison on physical signal models (rss or toa)
    #[command(after_help = RESULTS_HELP)]
    Benchmark(ExperimentArgs),
    /// Localize targets from an RSSI measurement file
    #[command(after_help = POSITIONS_HELP)]
    Localize(LocalizeArgs),
    /// Write a synthetic RSSI measurement file and its sensor field
    SynthMeasurements(SynthArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    /// flat key = value config file (keys are the long flag names)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// rerun the configuration recorded in a manifest.json
    #[arg(long, conflicts_with = "config")]
    pub manifest: Option<PathBuf>,
    /// ordinal, rss or toa
    #[arg(long)]
    pub kind: Option<String>,
    /// anchor counts, lo:hi:step or a comma list
    #[arg(long)]
    pub anchors: Option<String>,
    #[arg(long)]
    pub targets: Option<String>,
    /// comparison noise levels (ordinal kind)
    #[arg(long)]
    pub sigma: Option<String>,
    /// path-loss exponent intervals a:b,... (rss kind)
    #[arg(long)]
    pub exponent_ranges: Option<String>,
    #[arg(long)]
    pub calibration_exponent: Option<String>,
    /// c*sigma_T^2 values (toa kind)
    #[arg(long)]
    pub normalized_variance: Option<String>,
    #[arg(long)]
    pub propagation_speed: Option<String>,
    #[arg(long)]
    pub field_side: Option<String>,
    #[arg(long)]
    pub trials: Option<String>,
    /// master seed; drawn from entropy and recorded when omitted
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub restarts: Option<String>,
    #[arg(long)]
    pub max_iterations: Option<String>,
    #[arg(long)]
    pub gradient_tolerance: Option<String>,
    #[arg(long)]
    pub solver_seed: Option<String>,
    /// squared or raw
    #[arg(long)]
    pub delta: Option<String>,
    /// worker threads (results do not depend on it)
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
}

impl ExperimentArgs {
    fn flag_settings(&self) -> Vec<Setting> {
        let flags = [
            ("kind", &self.kind),
            ("anchors", &self.anchors),
            ("targets", &self.targets),
            ("sigma", &self.sigma),
            ("exponent-ranges", &self.exponent_ranges),
            ("calibration-exponent", &self.calibration_exponent),
            ("normalized-variance", &self.normalized_variance),
            ("propagation-speed", &self.propagation_speed),
            ("field-side", &self.field_side),
            ("trials", &self.trials),
            ("seed", &self.seed),
            ("restarts", &self.restarts),
            ("max-iterations", &self.max_iterations),
            ("gradient-tolerance", &self.gradient_tolerance),
            ("solver-seed", &self.solver_seed),
            ("delta", &self.delta),
        ];
        flags
            .into_iter()
            .filter_map(|(key, v)| {
                v.as_ref().map(|value| Setting {
                    key: key.to_string(),
                    value: value.clone(),
                    origin: format!("--{key}"),
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Args)]
pub struct LocalizeArgs {
    /// measurement file: roster, a `---` line, then tx_id,rx_id,timestamp_ms,rssi_dbm
    #[arg(long)]
    pub measurements: PathBuf,
    /// sensor field file; supplies anchor coordinates and true target positions
    #[arg(long)]
    pub field: Option<PathBuf>,
    /// fraction of strongest records kept per directed link
    #[arg(long, default_value_t = 0.01)]
    pub keep_fraction: f64,
    /// median, mean, single (every sample) or single:K
    #[arg(long, default_value = "median")]
    pub aggregator: String,
    #[arg(long)]
    pub restarts: Option<usize>,
    /// solver seed; drawn from entropy and recorded when omitted
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 4.0)]
    pub width: f64,
    #[arg(long, default_value_t = 5.0)]
    pub height: f64,
    #[arg(long, default_value_t = 1)]
    pub targets: usize,
    /// RSSI samples per link
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// path-loss exponent interval a:b, redrawn per link and sample
    #[arg(long, default_value = "2:6")]
    pub exponent_range: String,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    /// "flag", "config" or "entropy"
    pub seed_source: String,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub threads: Option<usize>,
    pub config: serde_json::Value,
    pub outputs: Vec<PathBuf>,
}

fn now_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

fn write_manifest(out: &Path, manifest: &RunManifest) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    write_file(&out.join("manifest.json"), text.as_bytes())
}

fn prepare_out(out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::Input(format!("cannot create {}: {e}", out.display())))
}

fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R, CliError> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(CliError::Config("--threads must be >= 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| CliError::Config(format!("cannot start {n} threads: {e}"))),
    }
}

/// Resolves an experiment config from defaults, the config file or
/// manifest, and flags (in increasing precedence). Returns the config and
/// where its seed came from.
pub fn resolve_experiment(args: &ExperimentArgs, default_kind: ExperimentKind) -> Result<(ExperimentConfig, String), CliError> {
    let flags = args.flag_settings();
    let (base, file_settings, file_has_seed) = if let Some(path) = &args.manifest {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let manifest: RunManifest = serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("{}: not a run manifest: {e}", path.display())))?;
        let c: ExperimentConfig = serde_json::from_value(manifest.config)
            .map_err(|e| CliError::Input(format!("{}: manifest config: {e}", path.display())))?;
        (c, Vec::new(), true)
    } else if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let settings = config::parse_settings(&text, &path.display().to_string())?;
        let kind = config::kind_of(&settings)?.unwrap_or(default_kind);
        let has_seed = settings.iter().any(|s| s.key == "seed");
        (ExperimentConfig::default_for(kind), settings, has_seed)
    } else {
        (ExperimentConfig::default_for(default_kind), Vec::new(), false)
    };
    // a kind flag switches the defaults only when no file fixes the config
    let base = match config::kind_of(&flags)? {
        Some(kind) if args.manifest.is_none() && config::kind_of(&file_settings)?.is_none() => {
            ExperimentConfig::default_for(kind)
        }
        _ => base,
    };
    let mut all = file_settings;
    all.extend(flags.iter().cloned());
    let mut c = config::apply(base, &all)?;
    let seed_source = if flags.iter().any(|s| s.key == "seed") {
        "flag"
    } else if file_has_seed {
        "config"
    } else {
        c.seed = rand::random();
        "entropy"
    };
    Ok((c, seed_source.to_string()))
}

fn emit_experiment(
    command: &str,
    args: &ExperimentArgs,
    config: &ExperimentConfig,
    seed_source: String,
    started: u128,
    result: &ExperimentResult,
) -> Result<(), CliError> {
    prepare_out(&args.out)?;
    let mut csv = Vec::new();
    bench::write_csv(result, &mut csv)?;
    let csv_path = args.out.join("results.csv");
    let json_path = args.out.join("results.json");
    let conf_path = args.out.join("run.conf");
    write_file(&csv_path, &csv)?;
    write_file(&json_path, serde_json::to_string_pretty(result).expect("result serializes").as_bytes())?;
    write_file(&conf_path, config::render(config).as_bytes())?;
    let manifest = RunManifest {
        command: command.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.seed,
        seed_source,
        started_unix_ms: started,
        finished_unix_ms: now_ms(),
        threads: args.threads,
        config: serde_json::to_value(config).expect("config serializes"),
        outputs: vec![csv_path, json_path, conf_path],
    };
    write_manifest(&args.out, &manifest)?;
    if result.unreliable() {
        return Err(CliError::Numerical(format!(
            "more than {:.0}% of trials flagged at some grid point; see the unreliable column",
            100.0 * bench::MAX_FLAGGED_FRACTION
        )));
    }
    Ok(())
}

pub fn cmd_simulate(args: &ExperimentArgs) -> Result<ExperimentResult, CliError> {
    let started = now_ms();
    let (config, seed_source) = resolve_experiment(args, ExperimentKind::OrdinalNoise)?;
    log::info!("simulate {} with seed {}", config.kind, config.seed);
    let result = with_threads(args.threads, || bench::run_benchmark(&config))??;
    emit_experiment("simulate", args, &config, seed_source, started, &result)?;
    Ok(result)
}

pub fn cmd_benchmark(args: &ExperimentArgs) -> Result<ExperimentResult, CliError> {
    let started = now_ms();
    let (config, seed_source) = resolve_experiment(args, ExperimentKind::Rss)?;
    let result = match config.kind {
        ExperimentKind::Rss => with_threads(args.threads, || bench::rss_comparison_suite(&config))??,
        ExperimentKind::Toa => with_threads(args.threads, || bench::toa_comparison_suite(&config))??,
        ExperimentKind::OrdinalNoise => {
            return Err(CliError::Config(
                "benchmark compares methods on physical models: kind must be rss or toa".into(),
            ))
        }
    };
    emit_experiment("benchmark", args, &config, seed_source, started, &result)?;
    Ok(result)
}

pub fn parse_aggregator(s: &str) -> Result<EstimateMode, CliError> {
    match s {
        "median" => Ok(EstimateMode::Aggregate(Aggregator::Median)),
        "mean" => Ok(EstimateMode::Aggregate(Aggregator::Mean)),
        "single" => Ok(EstimateMode::EverySample),
        other => match other.strip_prefix("single:").map(str::parse::<usize>) {
            Some(Ok(k)) if k >= 1 => Ok(EstimateMode::Aggregate(Aggregator::SingleSample(k))),
            _ => Err(CliError::Config(format!(
                "--aggregator: expected median, mean, single or single:K (K >= 1), got '{other}'"
            ))),
        },
    }
}

/// Checks the field file against the measurement roster and moves its anchor
/// coordinates into the measurement set.
fn merge_field(mut ms: MeasurementSet, field: &Roster) -> Result<MeasurementSet, CliError> {
    if field.dimension() != ms.roster.dimension() {
        return Err(CliError::Input(format!(
            "field file is {}-D but the measurement roster is {}-D",
            field.dimension(),
            ms.roster.dimension()
        )));
    }
    let mut text = String::new();
    for e in ms.roster.entries() {
        let f = field
            .entries()
            .iter()
            .find(|f| f.id == e.id)
            .ok_or_else(|| CliError::Input(format!("sensor '{}' is missing from the field file", e.id)))?;
        if f.role != e.role {
            return Err(CliError::Input(format!("sensor '{}' has different roles in the two files", e.id)));
        }
        if let (Role::Anchor, Some(a), Some(b)) = (e.role, &e.position, &f.position) {
            if a.iter().zip(b).any(|(x, y)| (x - y).abs() > 1e-9) {
                return Err(CliError::Input(format!("anchor '{}' has different coordinates in the two files", e.id)));
            }
        }
        let coords = match (e.role, &f.position) {
            (Role::Anchor, Some(p)) => p.iter().map(f64::to_string).collect::<Vec<_>>().join(","),
            _ => vec![""; field.dimension()].join(","),
        };
        let role = if e.role == Role::Anchor { "anchor" } else { "target" };
        text.push_str(&format!("{},{},{}\n", e.id, role, coords));
    }
    let axes = ["x", "y", "z"];
    let header = format!("id,role,{}\n", axes[..field.dimension()].join(","));
    let roster = ingest::parse_sensor_field_str(&(header + &text), "field")?;
    ms = MeasurementSet::new(roster, ms.records)?;
    Ok(ms)
}

pub struct LocalizeOutcome {
    pub report: LocalizeReport,
    /// true target positions by id, when a field file gave them
    pub truth: Vec<(String, Option<Vec<f64>>)>,
    pub seed: u64,
}

fn position_error(p: &[f64], truth: &Option<Vec<f64>>) -> Option<f64> {
    truth
        .as_ref()
        .map(|t| p.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
}

pub fn cmd_localize(args: &LocalizeArgs) -> Result<LocalizeOutcome, CliError> {
    let started = now_ms();
    let mode = parse_aggregator(&args.aggregator)?;
    let (seed, seed_source) = match args.seed {
        Some(s) => (s, "flag"),
        None => (rand::random(), "entropy"),
    };
    let mut solver = SolverOptions::<f64> {
        seed,
        ..Default::default()
    };
    if let Some(r) = args.restarts {
        solver.restarts = r;
    }
    let opts = LocalizeOptions {
        keep_fraction: args.keep_fraction,
        mode,
        solver,
    };
    if !(opts.keep_fraction > 0.0 && opts.keep_fraction <= 1.0) {
        return Err(CliError::Config(format!("--keep-fraction must lie in (0, 1], got {}", opts.keep_fraction)));
    }
    opts.solver.validate()?;

    let mut ms = ingest::parse_measurements(&args.measurements)?;
    let field = match &args.field {
        Some(path) => Some(ingest::parse_sensor_field(path)?),
        None => None,
    };
    if let Some(f) = &field {
        ms = merge_field(ms, f)?;
    }
    let truth: Vec<(String, Option<Vec<f64>>)> = ms
        .roster
        .targets()
        .map(|t| {
            let p = field
                .as_ref()
                .and_then(|f| f.entries().iter().find(|e| e.id == t.id))
                .and_then(|e| e.position.clone());
            (t.id.clone(), p)
        })
        .collect();
    let report = with_threads(args.threads, || ingest::localize_measurements(&ms, &opts))??;

    prepare_out(&args.out)?;
    let q = ms.roster.dimension();
    let mut csv = String::from("target_id,kind,sample,x,y,z,error\n");
    let fmt_opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let row = |id: &str, kind: &str, sample: Option<usize>, p: &[f64], err: Option<f64>| {
        let z = if q == 3 { p[2].to_string() } else { String::new() };
        format!(
            "{id},{kind},{},{},{},{z},{}\n",
            sample.map(|s| s.to_string()).unwrap_or_default(),
            p[0],
            p[1],
            fmt_opt(err)
        )
    };
    let mut failed = Vec::new();
    for (t, (_, truth)) in report.targets.iter().zip(&truth) {
        if t.estimates.is_empty() {
            failed.push(t.id.clone());
            continue;
        }
        for (sample, p) in &t.estimates {
            let kind = if sample.is_some() { "sample" } else { "estimate" };
            csv.push_str(&row(&t.id, kind, *sample, p, position_error(p, truth)));
        }
        if t.estimates.len() > 1 {
            csv.push_str(&row(&t.id, "averaged", None, &t.averaged, position_error(&t.averaged, truth)));
        }
    }
    let csv_path = args.out.join("positions.csv");
    write_file(&csv_path, csv.as_bytes())?;
    let manifest = RunManifest {
        command: "localize".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed,
        seed_source: seed_source.into(),
        started_unix_ms: started,
        finished_unix_ms: now_ms(),
        threads: args.threads,
        config: serde_json::json!({
            "measurements": args.measurements,
            "field": args.field,
            "keep_fraction": opts.keep_fraction,
            "aggregator": args.aggregator,
            "solver": opts.solver,
            "slice_warnings": report.warnings.len(),
        }),
        outputs: vec![csv_path],
    };
    write_manifest(&args.out, &manifest)?;
    if !failed.is_empty() {
        return Err(CliError::Numerical(format!("no estimate for target(s) {}", failed.join(", "))));
    }
    Ok(LocalizeOutcome { report, truth, seed })
}

pub fn cmd_synth_measurements(args: &SynthArgs) -> Result<(), CliError> {
    let started = now_ms();
    let (a, b) = args
        .exponent_range
        .split_once(':')
        .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)))
        .ok_or_else(|| CliError::Config(format!("--exponent-range: expected a:b, got '{}'", args.exponent_range)))?;
    let (seed, seed_source) = match args.seed {
        Some(s) => (s, "flag"),
        None => (rand::random(), "entropy"),
    };
    let spec = SyntheticSpec {
        width: args.width,
        height: args.height,
        targets: args.targets,
        samples: args.samples,
        exponent_range: (a, b),
        seed,
        ..Default::default()
    };
    let syn = ingest::synthesize_measurements(&spec)?;
    prepare_out(&args.out)?;
    let m_path = args.out.join("measurements.csv");
    let f_path = args.out.join("field.csv");
    write_file(&m_path, syn.measurements.to_csv().as_bytes())?;
    write_file(&f_path, syn.field.to_csv().as_bytes())?;
    let manifest = RunManifest {
        command: "synth-measurements".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed,
        seed_source: seed_source.into(),
        started_unix_ms: started,
        finished_unix_ms: now_ms(),
        threads: None,
        config: serde_json::to_value(&spec).expect("spec serializes"),
        outputs: vec![m_path, f_path],
    };
    write_manifest(&args.out, &manifest)
}

pub fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(a).map(drop),
        Command::Benchmark(a) => cmd_benchmark(a).map(drop),
        Command::Localize(a) => cmd_localize(a).map(drop),
        Command::SynthMeasurements(a) => cmd_synth_measurements(a),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
/// Usage errors count as config errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
