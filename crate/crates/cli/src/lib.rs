//! The `abcdose` command line.
//!
//! Subcommands: `prior-gen`, `scenario-gen`, `simulate`, `next-dose` and
//! `sweep`. Trial settings come from flags, optionally layered over a TOML
//! file given with `--config`; flags win.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 usage error, 3 validation error,
//! 4 safety stop (`next-dose` only).
//!
//! Output schemas:
//! - batch summaries: CSV with header
//!   `scenario,dose,true_p,sel_pct,mean_n,dlt_pct,none_pct,overdose_sel_pct,overdose_alloc_pct`,
//!   one row per dose with the scenario-level columns repeated, or JSON
//!   lines of [`BatchSummary`];
//! - sweeps: CSV with the sweep header, or JSON lines of [`SweepRow`];
//! - recommendations: text, or one JSON [`Recommendation`] object.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use abcdose::bank_io::{load_bank, save_bank};
use abcdose::conduct::{decision_rng, final_rng};
use abcdose::decision::final_estimate;
use abcdose::report::{summaries_to_csv, sweep_to_csv, to_json_lines};
use abcdose::rng::{derive_seed, substream};
use abcdose::scenario::{format_scenarios, parse_scenarios};
use abcdose::sim::{run_batch_results, summarize, DeltaChoice, SweepOptions, SweepRow};
use abcdose::{
    builtin_scenario, calibrate_mu, decide, generate_bank, generate_random_scenario, Action, BatchOptions,
    BatchSummary, Decision, PriorBank, Scenario, ScenarioGenSpec, TrialConfig, TrialState, DEFAULT_BANK_SEED,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

const SCENARIO_STREAM_TAG: u64 = 0x5ce4_a210;
const CALIBRATION_TAG: u64 = 0xca1_1b;

#[derive(Debug, Parser)]
#[command(name = "abcdose", version, about = "ABC design for phase I dose finding")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate and save a prior bank.
    PriorGen(PriorGenArgs),
    /// Generate random toxicity scenarios.
    ScenarioGen(ScenarioGenArgs),
    /// Simulate trials and summarize operating characteristics.
    Simulate(SimulateArgs),
    /// Recommend the next dose for observed counts.
    NextDose(NextDoseArgs),
    /// Run a grid of neighbourhood half-widths and bandwidths.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RecFormat {
    Text,
    Json,
}

/// Trial settings shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct TrialArgs {
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of dose levels.
    #[arg(long)]
    pub k: Option<usize>,
    /// Target DLT rate.
    #[arg(long)]
    pub phi: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Kernel bandwidth.
    #[arg(long)]
    pub h: Option<f64>,
    /// Maximum sample size.
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub cohort: Option<u32>,
    #[arg(long)]
    pub start_dose: Option<usize>,
    /// Prior samples per model.
    #[arg(long)]
    pub samples_per_model: Option<usize>,
    #[arg(long)]
    pub stop_threshold: Option<f64>,
    /// Use the weighted-sample safety rule.
    #[arg(long)]
    pub alt_stop: bool,
    #[arg(long)]
    pub alt_stop_threshold: Option<f64>,
    /// Only choose among doses already tried.
    #[arg(long)]
    pub restrict_to_tried: bool,
    /// Prior bank file; generated in memory when absent.
    #[arg(long)]
    pub bank: Option<PathBuf>,
    /// Seed for an in-memory bank.
    #[arg(long)]
    pub bank_seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct PriorGenArgs {
    #[command(flatten)]
    pub trial: TrialArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(short = 'o', long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScenarioGenArgs {
    #[command(flatten)]
    pub trial: TrialArgs,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub count: u64,
    /// Calibrate the location parameter to this average gap around the MTD.
    #[arg(long, conflicts_with = "mu")]
    pub gap: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(short = 'o', long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub trial: TrialArgs,
    /// `fixed:1` to `fixed:5` or `real`; repeatable.
    #[arg(long)]
    pub scenario: Vec<String>,
    /// File of `label, phi, p1, ..., pK` lines.
    #[arg(long)]
    pub scenario_file: Option<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub reps: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(short = 'o', long)]
    pub output: Option<PathBuf>,
    /// Write every simulated trial as JSON lines.
    #[arg(long)]
    pub trajectories: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NextDoseArgs {
    #[command(flatten)]
    pub trial: TrialArgs,
    /// DLT counts per dose, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub y: Vec<u32>,
    /// Patient counts per dose, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub m: Vec<u32>,
    /// Dose the last cohort received.
    #[arg(long)]
    pub dose: usize,
    /// Trial seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Index of the decision in the trial (0 for the first cohort).
    #[arg(long, default_value_t = 0)]
    pub event: u64,
    #[arg(long, value_enum, default_value_t = RecFormat::Text)]
    pub format: RecFormat,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub trial: TrialArgs,
    #[arg(long)]
    pub scenario: Vec<String>,
    #[arg(long)]
    pub scenario_file: Option<PathBuf>,
    /// Use this many random scenarios instead of named ones.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub random_scenarios: Option<u64>,
    /// Average gap around the MTD for random scenarios.
    #[arg(long, conflicts_with = "mu")]
    pub gap: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    /// Half-widths, e.g. `0,0.05,0.1,random` or `random:0:0.2`.
    #[arg(long, value_parser = parse_delta_grid, default_value = "0,0.05,0.1,0.15,0.2,random")]
    pub deltas: DeltaGrid,
    #[arg(long, value_parser = parse_bandwidth_grid, default_value = "0.1,0.05,0.01,0.005")]
    pub bandwidths: BandwidthGrid,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub reps: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(short = 'o', long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaGrid(pub Vec<DeltaChoice>);

#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthGrid(pub Vec<f64>);

fn parse_number(s: &str) -> Result<f64, String> {
    let x: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
    if !x.is_finite() {
        return Err(format!("`{s}` is not finite"));
    }
    Ok(x)
}

pub fn parse_delta_grid(s: &str) -> Result<DeltaGrid, String> {
    let mut out = Vec::new();
    for item in s.split(',') {
        let item = item.trim();
        let choice = if item == "random" {
            DeltaChoice::Random { low: 0.0, high: 0.2 }
        } else if let Some(range) = item.strip_prefix("random:") {
            let (lo, hi) = range.split_once(':').ok_or_else(|| format!("`{item}`: expected random:LOW:HIGH"))?;
            let (low, high) = (parse_number(lo)?, parse_number(hi)?);
            if !(low >= 0.0 && low < high) {
                return Err(format!("`{item}`: need 0 <= LOW < HIGH"));
            }
            DeltaChoice::Random { low, high }
        } else {
            let value = parse_number(item)?;
            if value < 0.0 {
                return Err(format!("`{item}`: half-width must be nonnegative"));
            }
            DeltaChoice::Fixed { value }
        };
        out.push(choice);
    }
    Ok(DeltaGrid(out))
}

pub fn parse_bandwidth_grid(s: &str) -> Result<BandwidthGrid, String> {
    let values = s.split(',').map(parse_number).collect::<Result<Vec<_>, _>>()?;
    if let Some(bad) = values.iter().find(|&&h| h <= 0.0) {
        return Err(format!("bandwidth {bad} must be positive"));
    }
    Ok(BandwidthGrid(values))
}

/// The `--config` file.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliConfigFile {
    #[serde(default)]
    pub trial: PartialTrialConfig,
    pub bank: Option<PathBuf>,
    pub bank_seed: Option<u64>,
    pub scenario_file: Option<PathBuf>,
    /// Relative output paths are resolved against this directory.
    pub output_dir: Option<PathBuf>,
    pub replications: Option<u64>,
    pub seed: Option<u64>,
    pub workers: Option<u64>,
}

/// `[trial]` table; every key of a trial configuration, all optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialTrialConfig {
    pub num_doses: Option<usize>,
    pub target: Option<f64>,
    pub delta: Option<f64>,
    pub bandwidth: Option<f64>,
    pub samples_per_model: Option<usize>,
    pub cohort_size: Option<u32>,
    pub max_patients: Option<u32>,
    pub start_dose: Option<usize>,
    pub stop_threshold: Option<f64>,
    pub use_alt_stop: Option<bool>,
    pub alt_stop_threshold: Option<f64>,
    pub restrict_to_tried: Option<bool>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Validation(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Validation(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Validation(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<abcdose::Error> for CliError {
    fn from(e: abcdose::Error) -> Self {
        match e {
            abcdose::Error::Io(io) => CliError::Io(io.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

type CliResult<T> = Result<T, CliError>;

/// Result of a successful command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Done,
    SafetyStop,
}

impl From<Outcome> for ExitCode {
    fn from(o: Outcome) -> Self {
        match o {
            Outcome::Done => ExitCode::SUCCESS,
            Outcome::SafetyStop => ExitCode::from(4),
        }
    }
}

/// Machine-readable `next-dose` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub decision: Decision,
    /// `|p̂_k − φ|` per dose.
    pub distance: Vec<f64>,
    pub stop: bool,
    /// Present when the counts use up the sample size.
    pub final_mtd: Option<usize>,
}

pub fn load_config_file(path: &Path) -> CliResult<CliConfigFile> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    toml::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

struct Resolved {
    file: CliConfigFile,
    trial: TrialArgs,
}

impl Resolved {
    fn new(trial: &TrialArgs) -> CliResult<Self> {
        let file = match &trial.config {
            Some(p) => load_config_file(p)?,
            None => CliConfigFile::default(),
        };
        Ok(Self { file, trial: trial.clone() })
    }

    /// Builds the trial configuration. `k` and `phi` fall back to values
    /// implied by the scenarios; `n` falls back to `default_n` when given.
    fn config(&self, k: Option<usize>, phi: Option<f64>, default_n: Option<u32>) -> CliResult<TrialConfig> {
        let (a, f) = (&self.trial, &self.file.trial);
        let k = a.k.or(f.num_doses).or(k).ok_or_else(|| CliError::Usage("--k is required".into()))?;
        let phi = a.phi.or(f.target).or(phi).ok_or_else(|| CliError::Usage("--phi is required".into()))?;
        let n = a.n.or(f.max_patients).or(default_n).ok_or_else(|| CliError::Usage("--n is required".into()))?;
        let mut c = TrialConfig::new(k, phi, n);
        if let Some(x) = a.delta.or(f.delta) {
            c.delta = x;
        }
        if let Some(x) = a.h.or(f.bandwidth) {
            c.bandwidth = x;
        }
        if let Some(x) = a.samples_per_model.or(f.samples_per_model) {
            c.samples_per_model = x;
        }
        if let Some(x) = a.cohort.or(f.cohort_size) {
            c.cohort_size = x;
        }
        if let Some(x) = a.start_dose.or(f.start_dose) {
            c.start_dose = x;
        }
        if let Some(x) = a.stop_threshold.or(f.stop_threshold) {
            c.stop_threshold = x;
        }
        c.use_alt_stop = a.alt_stop || f.use_alt_stop.unwrap_or(false);
        if let Some(x) = a.alt_stop_threshold.or(f.alt_stop_threshold) {
            c.alt_stop_threshold = x;
        }
        c.restrict_to_tried = a.restrict_to_tried || f.restrict_to_tried.unwrap_or(false);
        c.validate()?;
        Ok(c)
    }

    fn bank(&self, config: &TrialConfig) -> CliResult<PriorBank> {
        match self.trial.bank.as_ref().or(self.file.bank.as_ref()) {
            Some(path) => {
                let bank = load_bank(path).map_err(|e| match e {
                    abcdose::Error::Io(io) => CliError::Io(format!("{}: {io}", path.display())),
                    other => CliError::Validation(format!("{}: {other}", path.display())),
                })?;
                bank.check_matches(config)?;
                Ok(bank)
            }
            None => {
                let seed = self.trial.bank_seed.or(self.file.bank_seed).unwrap_or(DEFAULT_BANK_SEED);
                Ok(generate_bank(config, seed)?)
            }
        }
    }

    fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.file.seed).unwrap_or_else(|| {
            let s = rand::random::<u64>();
            eprintln!("seed: {s}");
            s
        })
    }

    fn output_path(&self, path: &Path) -> PathBuf {
        match &self.file.output_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.to_path_buf(),
        }
    }

    fn write_output(&self, path: Option<&Path>, text: &str) -> CliResult<()> {
        match path {
            Some(p) => {
                let p = self.output_path(p);
                fs::write(&p, text).map_err(io_err(&p))
            }
            None => std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Io(e.to_string())),
        }
    }

    fn workers(&self, flag: Option<u64>) -> Option<usize> {
        flag.or(self.file.workers).map(|w| w as usize)
    }

    fn reps(&self, flag: Option<u64>) -> CliResult<usize> {
        match flag.or(self.file.replications).unwrap_or(1000) {
            0 => Err(CliError::Usage("replications must be at least 1".into())),
            r => Ok(r as usize),
        }
    }

    fn scenarios(&self, names: &[String], file: Option<&PathBuf>) -> CliResult<Vec<Scenario>> {
        let mut out = Vec::new();
        for name in names {
            out.push(builtin_scenario(name).ok_or_else(|| {
                CliError::Validation(format!("unknown scenario `{name}` (expected fixed:1..fixed:5 or real)"))
            })?);
        }
        if let Some(path) = file.or(self.file.scenario_file.as_ref()) {
            let text = fs::read_to_string(path).map_err(io_err(path))?;
            out.extend(parse_scenarios(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?);
        }
        Ok(out)
    }
}

/// Checks that all scenarios share one dose count and target and returns them.
fn common_shape(scenarios: &[Scenario]) -> CliResult<(usize, f64)> {
    let first = scenarios.first().ok_or_else(|| CliError::Usage("no scenarios given".into()))?;
    for s in scenarios {
        if s.num_doses() != first.num_doses() || s.target != first.target {
            return Err(CliError::Validation(format!(
                "scenario `{}` has K={} phi={}, but `{}` has K={} phi={}; run them separately",
                s.label,
                s.num_doses(),
                s.target,
                first.label,
                first.num_doses(),
                first.target
            )));
        }
    }
    Ok((first.num_doses(), first.target))
}

pub fn run(cli: Cli) -> CliResult<Outcome> {
    match cli.command {
        Command::PriorGen(a) => prior_gen(&a),
        Command::ScenarioGen(a) => scenario_gen(&a),
        Command::Simulate(a) => simulate(&a),
        Command::NextDose(a) => next_dose(&a),
        Command::Sweep(a) => cmd_sweep(&a),
    }
}

fn prior_gen(a: &PriorGenArgs) -> CliResult<Outcome> {
    let r = Resolved::new(&a.trial)?;
    // The sample size does not affect the bank.
    let config = r.config(None, None, Some(u32::MAX))?;
    let seed = r.seed(a.seed);
    let bank = generate_bank(&config, seed)?;
    let path = r.output_path(&a.output);
    save_bank(&bank, &path).map_err(|e| match e {
        abcdose::Error::Io(io) => CliError::Io(format!("{}: {io}", path.display())),
        other => other.into(),
    })?;
    println!("wrote {}: {} J={}", path.display(), bank.fingerprint(), bank.len());
    Ok(Outcome::Done)
}

fn random_spec(r: &Resolved, gap: Option<f64>, mu: Option<f64>, seed: u64) -> CliResult<ScenarioGenSpec> {
    let k = r.trial.k.or(r.file.trial.num_doses).ok_or_else(|| CliError::Usage("--k is required".into()))?;
    let phi = r.trial.phi.or(r.file.trial.target).ok_or_else(|| CliError::Usage("--phi is required".into()))?;
    let mut spec = ScenarioGenSpec::new(k, phi, mu.unwrap_or(0.0));
    spec.validate()?;
    if let Some(g) = gap {
        spec.mu = calibrate_mu(&spec, g, derive_seed(seed, CALIBRATION_TAG))?;
        spec.target_gap = Some(g);
    }
    Ok(spec)
}

fn random_scenarios(spec: &ScenarioGenSpec, count: u64, seed: u64) -> Vec<Scenario> {
    let stream = derive_seed(seed, SCENARIO_STREAM_TAG);
    (0..count)
        .map(|i| {
            let mut s = generate_random_scenario(spec, &mut substream(stream, i));
            s.label = format!("random:{}", i + 1);
            s
        })
        .collect()
}

fn scenario_gen(a: &ScenarioGenArgs) -> CliResult<Outcome> {
    let r = Resolved::new(&a.trial)?;
    let seed = r.seed(a.seed);
    let spec = random_spec(&r, a.gap, a.mu, seed)?;
    let scenarios = random_scenarios(&spec, a.count, seed);
    let mut text = format!("# K={} phi={} mu={} seed={}\n", spec.num_doses, spec.target, spec.mu, seed);
    text.push_str(&format_scenarios(&scenarios));
    r.write_output(a.output.as_deref(), &text)?;
    Ok(Outcome::Done)
}

#[derive(Serialize)]
struct TrajectoryLine<'a> {
    scenario: &'a str,
    replication: usize,
    #[serde(flatten)]
    result: &'a abcdose::TrialResult,
}

fn simulate(a: &SimulateArgs) -> CliResult<Outcome> {
    let r = Resolved::new(&a.trial)?;
    let scenarios = r.scenarios(&a.scenario, a.scenario_file.as_ref())?;
    let (k, phi) = common_shape(&scenarios)?;
    let config = r.config(Some(k), Some(phi), None)?;
    let reps = r.reps(a.reps)?;
    let seed = r.seed(a.seed);
    let bank = r.bank(&config)?;
    let opts = BatchOptions { replications: reps, master_seed: seed, workers: r.workers(a.workers) };

    let mut summaries: Vec<BatchSummary> = Vec::with_capacity(scenarios.len());
    let mut dump = String::new();
    for (i, s) in scenarios.iter().enumerate() {
        // Each scenario gets its own stream family so adding one does not shift the others.
        let opts = BatchOptions { master_seed: derive_seed(opts.master_seed, i as u64), ..opts };
        let results = run_batch_results(s, &config, &bank, &opts)?;
        if a.trajectories.is_some() {
            for (rep, result) in results.iter().enumerate() {
                let line = TrajectoryLine { scenario: &s.label, replication: rep, result };
                dump.push_str(&serde_json::to_string(&line).expect("serializable"));
                dump.push('\n');
            }
        }
        summaries.push(summarize(s, &results));
    }
    if let Some(path) = &a.trajectories {
        r.write_output(Some(path), &dump)?;
    }
    let text = match a.format {
        Format::Csv => summaries_to_csv(&summaries),
        Format::Json => to_json_lines(&summaries)?,
    };
    r.write_output(a.output.as_deref(), &text)?;
    Ok(Outcome::Done)
}

/// Computes the recommendation `next-dose` prints. The decision after the
/// `event`-th cohort uses the same random stream as the conduct service.
pub fn recommend(
    bank: &PriorBank,
    config: &TrialConfig,
    y: Vec<u32>,
    m: Vec<u32>,
    dose: usize,
    seed: u64,
    event: u64,
) -> CliResult<Recommendation> {
    let state = TrialState::from_counts(y, m, dose, config)?;
    let decision = decide(bank, &state, config, &mut decision_rng(seed, event))?;
    let stop = decision.action.is_stop();
    let final_mtd = if !stop && state.is_exhausted(config) {
        Some(final_estimate(bank, &state, config, &mut final_rng(seed))?.optimal_dose)
    } else {
        None
    };
    let distance = decision.estimate.p_hat.iter().map(|p| (p - config.target).abs()).collect();
    Ok(Recommendation { decision, distance, stop, final_mtd })
}

fn format_vec(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ")
}

pub fn recommendation_text(rec: &Recommendation) -> String {
    let action = match rec.decision.action {
        Action::Escalate { to } => format!("escalate to {to}"),
        Action::Stay { at } => format!("stay at {at}"),
        Action::Deescalate { to } => format!("de-escalate to {to}"),
        Action::StopSafety => "stop: lowest dose too toxic".to_string(),
    };
    let mut out = format!(
        "p_hat:        {}\ndistance:     {}\noptimal dose: {}\ndecision:     {action}\nstop:         {}\n",
        format_vec(&rec.decision.estimate.p_hat),
        format_vec(&rec.distance),
        rec.decision.estimate.optimal_dose,
        rec.stop
    );
    if let Some(mtd) = rec.final_mtd {
        out.push_str(&format!("final MTD:    {mtd}\n"));
    }
    out
}

fn next_dose(a: &NextDoseArgs) -> CliResult<Outcome> {
    let r = Resolved::new(&a.trial)?;
    if a.y.len() != a.m.len() {
        return Err(CliError::Validation(format!("--y has {} doses but --m has {}", a.y.len(), a.m.len())));
    }
    let total: u32 = a.m.iter().sum();
    let config = r.config(Some(a.y.len()), None, Some(total.max(1)))?;
    let seed = r.seed(a.seed);
    let bank = r.bank(&config)?;
    let rec = recommend(&bank, &config, a.y.clone(), a.m.clone(), a.dose, seed, a.event)?;
    let text = match a.format {
        RecFormat::Text => recommendation_text(&rec),
        RecFormat::Json => serde_json::to_string(&rec).expect("serializable") + "\n",
    };
    r.write_output(None, &text)?;
    Ok(if rec.stop { Outcome::SafetyStop } else { Outcome::Done })
}

fn cmd_sweep(a: &SweepArgs) -> CliResult<Outcome> {
    let r = Resolved::new(&a.trial)?;
    let seed = r.seed(a.seed);
    let (scenarios, mu) = match a.random_scenarios {
        Some(count) => {
            if !a.scenario.is_empty() || a.scenario_file.is_some() {
                return Err(CliError::Usage("--random-scenarios excludes --scenario and --scenario-file".into()));
            }
            let spec = random_spec(&r, a.gap, a.mu, seed)?;
            (random_scenarios(&spec, count, seed), Some(spec.mu))
        }
        None => (r.scenarios(&a.scenario, a.scenario_file.as_ref())?, None),
    };
    let (k, phi) = common_shape(&scenarios)?;
    let base = r.config(Some(k), Some(phi), None)?;
    let opts = SweepOptions {
        deltas: a.deltas.0.clone(),
        bandwidths: a.bandwidths.0.clone(),
        replications: r.reps(a.reps)?,
        master_seed: seed,
        bank_seed: r.trial.bank_seed.or(r.file.bank_seed).unwrap_or(DEFAULT_BANK_SEED),
        workers: r.workers(a.workers),
        mu,
    };
    let rows: Vec<SweepRow> = abcdose::sweep(&base, &scenarios, &opts)?;
    let text = match a.format {
        Format::Csv => sweep_to_csv(&rows),
        Format::Json => to_json_lines(&rows)?,
    };
    r.write_output(a.output.as_deref(), &text)?;
    Ok(Outcome::Done)
}
