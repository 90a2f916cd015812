//! Command-line front end. The `shiftmix` binary is a thin wrapper around
//! [`main_with_args`].
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::asymptotics::{
    asymptotic_ci, finite_sample_variances, sigma2_delta, sigma2_theta, SkewTermForm,
    VarianceEstimates, VarianceOptions,
};
use crate::bootstrap::{bca_interval, centered_percentile_interval, resample, BootstrapConfig};
use crate::distributions::{
    mixture_moments, theoretical_moments_f, Family, FamilySpec, MixtureParams, MomentSet,
};
use crate::error::Error;
use crate::estimators::{estimate_with, EpsilonRule, EstimateResult, SampleStats, TwoSample};
use crate::interval::{IntervalMethod, IntervalResult, Target};
use crate::rng::Seed;
use crate::simulation::{
    coverage_csv, coverage_markdown, export_sampling_distribution, run_grid_with_progress, sig6,
    Cell, CoverageRow, SimulationGrid,
};

pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn data(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

#[derive(Debug, Parser)]
#[command(
    name = "shiftmix",
    version,
    about = "Shift-mixture treatment effect estimation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Point estimates of θ, δ and Δ from two samples.
    Estimate(EstimateArgs),
    /// Confidence intervals for θ and δ.
    Ci(CiArgs),
    /// Theoretical moments of F and of the mixture G.
    Moments(MomentsArgs),
    /// Monte Carlo coverage study over a grid of settings.
    Simulate(SimulateArgs),
    /// Sampling distribution of (θ̂, δ̂) for one setting.
    ExportDist(ExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Markdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LogBase {
    Natural,
    Log10,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Asymptotic,
    Bca,
    CenteredPercentile,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableArg {
    Theta,
    Delta,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Control observations, one value per line (header optional).
    #[arg(required_unless_present = "long", conflicts_with = "long")]
    pub control: Option<PathBuf>,
    /// Treatment observations, one value per line (header optional).
    #[arg(required_unless_present = "long", conflicts_with = "long")]
    pub treatment: Option<PathBuf>,
    /// A single long-format CSV with a header row, in place of the two files.
    #[arg(long, value_name = "FILE")]
    pub long: Option<PathBuf>,
    #[arg(long, default_value = "group", requires = "long")]
    pub group_column: String,
    #[arg(long, default_value = "value", requires = "long")]
    pub value_column: String,
    /// Group label of control rows; every other label is treatment.
    #[arg(long, default_value = "control", requires = "long")]
    pub control_label: String,
    /// Logarithm used in ε_N = S_X·log(N²)/N.
    #[arg(long, value_enum, default_value = "natural")]
    pub epsilon_log: LogBase,
    /// Use this fixed ε_N instead.
    #[arg(long)]
    pub epsilon: Option<f64>,
}

impl DataArgs {
    fn epsilon_rule(&self) -> Result<EpsilonRule, CliError> {
        match (self.epsilon, self.epsilon_log) {
            (Some(v), _) if v >= 0.0 && v.is_finite() => Ok(EpsilonRule::Fixed(v)),
            (Some(v), _) => Err(usage(format!("--epsilon must be non-negative, got {v}"))),
            (None, LogBase::Natural) => Ok(EpsilonRule::NaturalLog),
            (None, LogBase::Log10) => Ok(EpsilonRule::Log10),
        }
    }

    fn load(&self) -> Result<TwoSample, CliError> {
        let (x, y) = match (&self.long, &self.control, &self.treatment) {
            (Some(path), _, _) => read_long_csv(
                path,
                &self.group_column,
                &self.value_column,
                &self.control_label,
            )?,
            (None, Some(c), Some(t)) => (read_column(c)?, read_column(t)?),
            _ => return Err(usage("need CONTROL and TREATMENT files or --long FILE")),
        };
        TwoSample::new(x, y).map_err(data)
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Write the report here instead of standard output.
    #[arg(long, short = 'o')]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CiArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub out: OutputArgs,
    /// Interval methods; repeat or comma-separate.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "asymptotic")]
    pub method: Vec<MethodArg>,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Bootstrap replicates.
    #[arg(long = "B", default_value_t = 1000, value_parser = clap::value_parser!(u64).range(2..))]
    pub b: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Power of D in the skewness term of the θ̂ variance.
    #[arg(long, value_enum, default_value = "linear")]
    pub skew_term: SkewArg,
    /// Drop the (n−3)/(n−1) factor in the variance of S².
    #[arg(long)]
    pub no_small_sample_correction: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SkewArg {
    Linear,
    Squared,
}

#[derive(Debug, Clone, Args)]
pub struct MomentsArgs {
    #[arg(long, default_value = "normal")]
    pub family: Family,
    #[arg(long)]
    pub theta: f64,
    #[arg(long)]
    pub delta: f64,
    /// Standard deviation of F.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Mean of F.
    #[arg(long, default_value_t = 0.0)]
    pub mu: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// TOML grid configuration; flags override its values.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Use the published grid and ignore any grid values from --config.
    #[arg(long)]
    pub paper_grid: bool,
    #[arg(long, value_delimiter = ',')]
    pub families: Option<Vec<Family>>,
    #[arg(long, value_delimiter = ',')]
    pub thetas: Option<Vec<f64>>,
    #[arg(long = "Ks", value_delimiter = ',')]
    pub ks: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    /// Monte Carlo replications per cell.
    #[arg(long = "R", value_parser = clap::value_parser!(u64).range(1..))]
    pub r: Option<u64>,
    /// Bootstrap replicates per replication.
    #[arg(long = "B", value_parser = clap::value_parser!(u64).range(2..))]
    pub b: Option<u64>,
    #[arg(long)]
    pub level: Option<f64>,
    #[arg(long, value_enum, value_delimiter = ',')]
    pub methods: Option<Vec<MethodArg>>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker thread cap; results do not depend on it.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,
    /// Print only the markdown table for this parameter.
    #[arg(long, value_enum)]
    pub table: Option<TableArg>,
    /// Directory for coverage.csv, coverage_theta.md and coverage_delta.md.
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ExportArgs {
    #[arg(long, default_value = "normal")]
    pub family: Family,
    #[arg(long)]
    pub theta: f64,
    /// Shift in units of σ_X.
    #[arg(long = "K")]
    pub k: f64,
    /// Size of each group.
    #[arg(long)]
    pub n: usize,
    #[arg(long = "R", default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub r: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.0)]
    pub mu: f64,
    /// csv (default) writes rep,theta_hat,delta_hat; json adds the normal approximation.
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long, short = 'o')]
    pub output: Option<PathBuf>,
}

/// Simulation config file. Every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub families: Option<Vec<String>>,
    pub thetas: Option<Vec<f64>>,
    pub ks: Option<Vec<f64>>,
    pub sizes: Option<Vec<usize>>,
    pub replications: Option<usize>,
    pub bootstrap_replicates: Option<usize>,
    pub level: Option<f64>,
    pub methods: Option<Vec<String>>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    /// Standard deviation of F for every family.
    pub sigma: Option<f64>,
    /// Mean of F for every family.
    pub location: Option<f64>,
}

fn read_to_string(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| data(format!("{}: {e}", path.display())))
}

/// Reads a single-column CSV of reals. A non-numeric first row is taken as a
/// header; blank lines are skipped.
pub fn read_column(path: &Path) -> Result<Vec<f64>, CliError> {
    parse_column(&read_to_string(path)?).map_err(|e| data(format!("{}: {e}", path.display())))
}

pub fn parse_column(text: &str) -> Result<Vec<f64>, String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut values = Vec::new();
    let mut first = true;
    for record in reader.records() {
        let record = record.map_err(|e| e.to_string())?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != 1 {
            return Err(format!(
                "line {line}: expected one column, found {}",
                record.len()
            ));
        }
        match record[0].parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            Ok(v) => return Err(format!("line {line}: non-finite value `{v}`")),
            Err(_) if first => {}
            Err(_) => {
                return Err(format!(
                    "line {line}: cannot parse `{}` as a number",
                    &record[0]
                ))
            }
        }
        first = false;
    }
    Ok(values)
}

/// Reads a long-format CSV with a header, splitting rows by group label.
pub fn read_long_csv(
    path: &Path,
    group_column: &str,
    value_column: &str,
    control_label: &str,
) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let text = read_to_string(path)?;
    let ctx = |msg: String| data(format!("{}: {msg}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| ctx(e.to_string()))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| ctx(format!("no column named `{name}`")))
    };
    let (gi, vi) = (column(group_column)?, column(value_column)?);
    let (mut x, mut y) = (Vec::new(), Vec::new());
    let mut treatment_label: Option<String> = None;
    for record in reader.records() {
        let record = record.map_err(|e| ctx(e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let label = &record[gi];
        let value: f64 = record[vi]
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| {
                ctx(format!(
                    "line {line}: cannot parse `{}` as a number",
                    &record[vi]
                ))
            })?;
        if label == control_label {
            x.push(value);
        } else {
            match &treatment_label {
                Some(t) if t != label => {
                    return Err(ctx(format!(
                        "line {line}: third group `{label}` (expected `{control_label}` or `{t}`)"
                    )))
                }
                Some(_) => {}
                None => treatment_label = Some(label.to_string()),
            }
            y.push(value);
        }
    }
    Ok((x, y))
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub control: SampleStats,
    pub treatment: SampleStats,
    pub estimate: EstimateResult,
    pub warnings: Vec<String>,
}

fn warnings_for(est: &EstimateResult) -> Vec<String> {
    let mut w = Vec::new();
    if est.flags.mean_diff_clamped {
        w.push("treatment mean below control mean; mean difference set to 0".to_string());
    }
    if est.flags.var_diff_clamped {
        w.push(
            "treatment variance below control variance; variance difference set to 0".to_string(),
        );
    }
    if est.flags.degenerate {
        w.push(
            "degenerate input: no spread and no mean difference; theta_hat = 1 reported"
                .to_string(),
        );
    }
    w
}

pub fn estimate_report(ts: &TwoSample, rule: EpsilonRule) -> Result<EstimateReport, CliError> {
    let estimate = estimate_with(ts, rule).map_err(data)?;
    Ok(EstimateReport {
        control: *ts.control_stats(),
        treatment: *ts.treatment_stats(),
        warnings: warnings_for(&estimate),
        estimate,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodBlock {
    pub method: IntervalMethod,
    pub theta: IntervalResult,
    pub delta: IntervalResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variance: Option<VarianceEstimates>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bootstrap_failures: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CiReport {
    pub estimate: EstimateResult,
    pub level: f64,
    pub seed: u64,
    pub bootstrap_replicates: usize,
    pub intervals: Vec<MethodBlock>,
    pub warnings: Vec<String>,
}

fn expand_methods(args: &[MethodArg]) -> Vec<IntervalMethod> {
    let mut out = Vec::new();
    for m in args {
        let add: &[IntervalMethod] = match m {
            MethodArg::Asymptotic => &[IntervalMethod::Asymptotic],
            MethodArg::Bca => &[IntervalMethod::BCa],
            MethodArg::CenteredPercentile => &[IntervalMethod::CenteredPercentile],
            MethodArg::All => &IntervalMethod::ALL,
        };
        for a in add {
            if !out.contains(a) {
                out.push(*a);
            }
        }
    }
    out
}

pub fn ci_report(ts: &TwoSample, args: &CiArgs) -> Result<CiReport, CliError> {
    let rule = args.data.epsilon_rule()?;
    let methods = expand_methods(&args.method);
    if methods.is_empty() {
        return Err(usage("no interval method selected"));
    }
    let estimate = estimate_with(ts, rule).map_err(data)?;
    let opts = VarianceOptions {
        small_sample_correction: !args.no_small_sample_correction,
        skew_term: match args.skew_term {
            SkewArg::Linear => SkewTermForm::Linear,
            SkewArg::Squared => SkewTermForm::Squared,
        },
    };
    let cfg = BootstrapConfig {
        replicates: args.b as usize,
        level: args.level,
        seed: Seed::new(args.seed, 0),
        epsilon: rule,
        ..BootstrapConfig::default()
    };
    cfg.validate().map_err(usage)?;
    let boot = if methods.iter().any(|m| m.needs_bootstrap()) {
        Some(resample(ts, &cfg).map_err(data)?)
    } else {
        None
    };
    let mut intervals = Vec::new();
    for method in methods {
        let block = match method {
            IntervalMethod::Asymptotic => {
                let ve = finite_sample_variances(
                    ts.control_stats(),
                    ts.treatment_stats(),
                    estimate.epsilon_n,
                    &opts,
                );
                let (theta, delta) = asymptotic_ci(&estimate, &ve, args.level).map_err(usage)?;
                MethodBlock {
                    method,
                    theta,
                    delta,
                    variance: Some(ve),
                    bootstrap_failures: None,
                }
            }
            IntervalMethod::BCa | IntervalMethod::CenteredPercentile => {
                let boot = boot
                    .as_ref()
                    .expect("bootstrap computed for bootstrap methods");
                let build = |target| match method {
                    IntervalMethod::BCa => bca_interval(boot, ts, &cfg, target),
                    _ => centered_percentile_interval(boot, &cfg, target),
                };
                MethodBlock {
                    method,
                    theta: build(Target::Theta).map_err(data)?,
                    delta: build(Target::Delta).map_err(data)?,
                    variance: None,
                    bootstrap_failures: Some(boot.failed),
                }
            }
        };
        intervals.push(block);
    }
    Ok(CiReport {
        warnings: warnings_for(&estimate),
        estimate,
        level: args.level,
        seed: args.seed,
        bootstrap_replicates: cfg.replicates,
        intervals,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentsReport {
    pub family: Family,
    pub theta: f64,
    pub delta: f64,
    /// Δ = θδ.
    pub delta_avg: f64,
    /// K = δ/σ_X.
    pub k: f64,
    pub f: MomentSet,
    pub g: MomentSet,
    /// Asymptotic variance of √n(θ̂ − θ); absent when δ = 0.
    pub sigma2_theta: Option<f64>,
    pub sigma2_delta: Option<f64>,
}

pub fn moments_report(args: &MomentsArgs) -> Result<MomentsReport, CliError> {
    let spec = FamilySpec::new(args.family, args.mu, args.sigma).map_err(usage)?;
    let mix = MixtureParams::new(args.theta, args.delta).map_err(usage)?;
    let f = theoretical_moments_f(&spec);
    let g = mixture_moments(&f, &mix);
    Ok(MomentsReport {
        family: args.family,
        theta: mix.theta(),
        delta: mix.delta(),
        delta_avg: mix.delta_avg(),
        k: mix.delta() / args.sigma,
        f,
        g,
        sigma2_theta: sigma2_theta(&f, &g).ok(),
        sigma2_delta: sigma2_delta(&f, &g).ok(),
    })
}

/// Resolves the grid from defaults, an optional config file and flags, in
/// that order of precedence (flags win).
pub fn resolve_grid(args: &SimulateArgs) -> Result<(SimulationGrid, Option<usize>), CliError> {
    let cfg = match &args.config {
        Some(path) => {
            let text = read_to_string(path)?;
            toml::from_str::<SimulateConfig>(&text)
                .map_err(|e| usage(format!("{}: {e}", path.display())))?
        }
        None => SimulateConfig::default(),
    };
    let grid_flags = args.families.is_some()
        || args.thetas.is_some()
        || args.ks.is_some()
        || args.sizes.is_some();
    if args.paper_grid && grid_flags {
        return Err(usage(
            "--paper-grid cannot be combined with --families/--thetas/--Ks/--sizes",
        ));
    }
    let mut grid = SimulationGrid::paper_default(args.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED));
    let location = cfg.location.unwrap_or(0.0);
    let sigma = cfg.sigma.unwrap_or(1.0);

    let mut families: Vec<Family> = Family::ALL.to_vec();
    if !args.paper_grid {
        if let Some(names) = &cfg.families {
            families = names
                .iter()
                .map(|s| s.parse::<Family>())
                .collect::<Result<_, Error>>()
                .map_err(usage)?;
        }
        if let Some(v) = &cfg.thetas {
            grid.thetas = v.clone();
        }
        if let Some(v) = &cfg.ks {
            grid.ks = v.clone();
        }
        if let Some(v) = &cfg.sizes {
            grid.sizes = v.clone();
        }
    }
    if let Some(v) = &args.families {
        families = v.clone();
    }
    grid.families = families
        .into_iter()
        .map(|f| FamilySpec::new(f, location, sigma))
        .collect::<Result<_, Error>>()
        .map_err(usage)?;
    if let Some(v) = &args.thetas {
        grid.thetas = v.clone();
    }
    if let Some(v) = &args.ks {
        grid.ks = v.clone();
    }
    if let Some(v) = &args.sizes {
        grid.sizes = v.clone();
    }

    let s = &mut grid.settings;
    if let Some(r) = args.r.map(|r| r as usize).or(cfg.replications) {
        s.replications = r;
    }
    if let Some(b) = args.b.map(|b| b as usize).or(cfg.bootstrap_replicates) {
        s.bootstrap_replicates = b;
    }
    if let Some(level) = args.level.or(cfg.level) {
        s.level = level;
    }
    if let Some(m) = &args.methods {
        s.methods = expand_methods(m);
    } else if let Some(names) = &cfg.methods {
        s.methods = names
            .iter()
            .map(|n| n.parse::<IntervalMethod>())
            .collect::<Result<_, Error>>()
            .map_err(usage)?;
    }
    s.validate().map_err(usage)?;
    grid.cells().map_err(usage)?;
    let threads = args.threads.map(|t| t as usize).or(cfg.threads);
    if threads == Some(0) {
        return Err(usage("threads must be at least 1"));
    }
    Ok((grid, threads))
}

/// Runs the grid on a pool capped at `threads` workers (all cores if None).
pub fn simulate_rows(
    grid: &SimulationGrid,
    threads: Option<usize>,
    progress: bool,
) -> Result<Vec<CoverageRow>, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(data)?;
    pool.install(|| {
        run_grid_with_progress(grid, |done, total| {
            if progress {
                eprintln!("cell {done}/{total} done");
            }
        })
    })
    .map_err(data)
}

fn estimate_markdown(r: &EstimateReport) -> String {
    let mut s = String::from("| quantity | value |\n|---|---|\n");
    let e = &r.estimate;
    for (k, v) in [
        ("θ̂", e.theta_hat),
        ("δ̂", e.delta_hat),
        ("Δ̂", e.delta_avg_hat),
        ("ε_N", e.epsilon_n),
        ("X̄", r.control.mean),
        ("S²_X", r.control.var_unbiased),
        ("Ȳ", r.treatment.mean),
        ("S²_Y", r.treatment.var_unbiased),
    ] {
        let _ = writeln!(s, "| {k} | {} |", sig6(v));
    }
    let _ = writeln!(s, "| m | {} |\n| n | {} |", r.control.n, r.treatment.n);
    for w in &r.warnings {
        let _ = writeln!(s, "\nwarning: {w}");
    }
    s
}

fn estimate_csv(r: &EstimateReport) -> String {
    let e = &r.estimate;
    format!(
        "theta_hat,delta_hat,delta_avg_hat,epsilon_n,m,mean_x,var_x,n,mean_y,var_y,mean_diff_clamped,var_diff_clamped,degenerate\n\
         {},{},{},{},{},{},{},{},{},{},{},{},{}\n",
        e.theta_hat,
        e.delta_hat,
        e.delta_avg_hat,
        e.epsilon_n,
        r.control.n,
        r.control.mean,
        r.control.var_unbiased,
        r.treatment.n,
        r.treatment.mean,
        r.treatment.var_unbiased,
        e.flags.mean_diff_clamped,
        e.flags.var_diff_clamped,
        e.flags.degenerate
    )
}

fn interval_rows(r: &CiReport) -> Vec<&IntervalResult> {
    r.intervals
        .iter()
        .flat_map(|b| [&b.theta, &b.delta])
        .collect()
}

fn ci_csv(r: &CiReport) -> String {
    let mut s = String::from(
        "method,target,point,lower,upper,level,truncated_low,truncated_high,variance_floored,z0,a,fallback_used\n",
    );
    for i in interval_rows(r) {
        let point = match i.target {
            Target::Theta => r.estimate.theta_hat,
            Target::Delta => r.estimate.delta_hat,
        };
        let (z0, a, fb) =
            i.diagnostics
                .map_or((String::new(), String::new(), String::new()), |d| {
                    (
                        d.z0.to_string(),
                        d.a.to_string(),
                        d.fallback_used.to_string(),
                    )
                });
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            i.method,
            i.target,
            point,
            i.lower,
            i.upper,
            i.level,
            i.truncated_low,
            i.truncated_high,
            i.variance_floored,
            z0,
            a,
            fb
        );
    }
    s
}

fn ci_markdown(r: &CiReport) -> String {
    let mut s = format!(
        "θ̂ = {}, δ̂ = {}, level {}\n\n| method | target | lower | upper | length | notes |\n|---|---|---|---|---|---|\n",
        sig6(r.estimate.theta_hat),
        sig6(r.estimate.delta_hat),
        sig6(r.level)
    );
    for i in interval_rows(r) {
        let mut notes = Vec::new();
        if i.truncated_low || i.truncated_high {
            notes.push("truncated".to_string());
        }
        if i.variance_floored {
            notes.push("variance floored".to_string());
        }
        if let Some(d) = i.diagnostics {
            notes.push(format!("z0 = {}, a = {}", sig6(d.z0), sig6(d.a)));
            if d.fallback_used {
                notes.push("percentile fallback".to_string());
            }
        }
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} | {} |",
            i.method,
            i.target,
            sig6(i.lower),
            sig6(i.upper),
            sig6(i.length()),
            notes.join("; ")
        );
    }
    for w in &r.warnings {
        let _ = writeln!(s, "\nwarning: {w}");
    }
    s
}

fn moments_markdown(r: &MomentsReport) -> String {
    let mut s = format!(
        "{} with θ = {}, δ = {}, Δ = {}, K = {}\n\n| law | mean | variance | c3 | c4 |\n|---|---|---|---|---|\n",
        r.family,
        sig6(r.theta),
        sig6(r.delta),
        sig6(r.delta_avg),
        sig6(r.k)
    );
    for (name, m) in [("F", &r.f), ("G", &r.g)] {
        let _ = writeln!(
            s,
            "| {name} | {} | {} | {} | {} |",
            sig6(m.mean),
            sig6(m.var),
            sig6(m.c3),
            sig6(m.c4)
        );
    }
    let opt = |v: Option<f64>| v.map_or("undefined".to_string(), sig6);
    let _ = writeln!(
        s,
        "\nσ²_θ = {}, σ²_δ = {}",
        opt(r.sigma2_theta),
        opt(r.sigma2_delta)
    );
    s
}

fn moments_csv(r: &MomentsReport) -> String {
    let mut s = String::from("law,mean,var,c3,c4\n");
    for (name, m) in [("F", &r.f), ("G", &r.g)] {
        let _ = writeln!(s, "{name},{},{},{},{}", m.mean, m.var, m.c3, m.c4);
    }
    s
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(data)
}

fn emit(text: &str, output: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    match output {
        Some(path) => fs::write(path, text).map_err(|e| data(format!("{}: {e}", path.display()))),
        None => stdout.write_all(text.as_bytes()).map_err(data),
    }
}

/// Runs a parsed command, writing the report to `stdout` (or `--output`).
pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Estimate(args) => {
            let ts = args.data.load()?;
            let report = estimate_report(&ts, args.data.epsilon_rule()?)?;
            let text = match args.out.format {
                Format::Json => to_json(&report)?,
                Format::Csv => estimate_csv(&report),
                Format::Markdown => estimate_markdown(&report),
            };
            emit(&text, args.out.output.as_deref(), stdout)
        }
        Command::Ci(args) => {
            let ts = args.data.load()?;
            let report = ci_report(&ts, args)?;
            let text = match args.out.format {
                Format::Json => to_json(&report)?,
                Format::Csv => ci_csv(&report),
                Format::Markdown => ci_markdown(&report),
            };
            emit(&text, args.out.output.as_deref(), stdout)
        }
        Command::Moments(args) => {
            let report = moments_report(args)?;
            let text = match args.out.format {
                Format::Json => to_json(&report)?,
                Format::Csv => moments_csv(&report),
                Format::Markdown => moments_markdown(&report),
            };
            emit(&text, args.out.output.as_deref(), stdout)
        }
        Command::Simulate(args) => {
            let (grid, threads) = resolve_grid(args)?;
            let cells = grid.cells().map_err(usage)?.len();
            eprintln!(
                "grid: {cells} cells, R = {}, B = {}, level = {}, methods = {:?}, seed = {}",
                grid.settings.replications,
                grid.settings.bootstrap_replicates,
                grid.settings.level,
                grid.settings
                    .methods
                    .iter()
                    .map(|m| m.label())
                    .collect::<Vec<_>>(),
                grid.master_seed
            );
            let start = Instant::now();
            let rows = simulate_rows(&grid, threads, true)?;
            eprintln!("wall-clock: {:.2} s", start.elapsed().as_secs_f64());
            if let Some(dir) = &args.out_dir {
                fs::create_dir_all(dir).map_err(|e| data(format!("{}: {e}", dir.display())))?;
                let write = |name: &str, text: String| {
                    let path = dir.join(name);
                    fs::write(&path, text).map_err(|e| data(format!("{}: {e}", path.display())))
                };
                write("coverage.csv", coverage_csv(&rows))?;
                write("coverage_theta.md", coverage_markdown(&rows, Target::Theta))?;
                write("coverage_delta.md", coverage_markdown(&rows, Target::Delta))?;
            }
            let text = match (args.table, args.out.format) {
                (Some(TableArg::Theta), _) => coverage_markdown(&rows, Target::Theta),
                (Some(TableArg::Delta), _) => coverage_markdown(&rows, Target::Delta),
                (None, Format::Json) => to_json(&rows)?,
                (None, Format::Csv) => coverage_csv(&rows),
                (None, Format::Markdown) => {
                    coverage_markdown(&rows, Target::Theta)
                        + "\n"
                        + &coverage_markdown(&rows, Target::Delta)
                }
            };
            emit(&text, args.out.output.as_deref(), stdout)
        }
        Command::ExportDist(args) => {
            let spec = FamilySpec::new(args.family, args.mu, args.sigma).map_err(usage)?;
            let cell = Cell::new(spec, args.theta, args.k, args.n).map_err(usage)?;
            let dist =
                export_sampling_distribution(&cell, args.r as usize, Seed::new(args.seed, 0))
                    .map_err(data)?;
            let text = match args.format {
                Format::Json => to_json(&dist)?,
                Format::Csv | Format::Markdown => dist.to_csv(),
            };
            emit(&text, args.output.as_deref(), stdout)
        }
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
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
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(&cli, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn column_parsing() {
        assert_eq!(
            parse_column("x\n1\n2.5\n\n-3\n").unwrap(),
            vec![1.0, 2.5, -3.0]
        );
        assert_eq!(parse_column("1\n2\n").unwrap(), vec![1.0, 2.0]);
        let err = parse_column("value\n1\nabc\n").unwrap_err();
        assert!(err.contains("line 3"), "{err}");
        assert!(parse_column("1,2\n").unwrap_err().contains("one column"));
    }

    #[test]
    fn method_expansion() {
        assert_eq!(
            expand_methods(&[MethodArg::All]),
            IntervalMethod::ALL.to_vec()
        );
        assert_eq!(
            expand_methods(&[MethodArg::Bca, MethodArg::Asymptotic, MethodArg::Bca]),
            vec![IntervalMethod::BCa, IntervalMethod::Asymptotic]
        );
    }

    #[test]
    fn config_file_keys() {
        let cfg: SimulateConfig =
            toml::from_str("thetas = [0.5]\nsizes = [25]\nreplications = 10\n").unwrap();
        assert_eq!(cfg.thetas, Some(vec![0.5]));
        assert!(toml::from_str::<SimulateConfig>("bogus = 1\n").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(main_with_args(["shiftmix", "simulate", "--R", "0"]), 1);
        assert_eq!(main_with_args(["shiftmix"]), 1);
        assert_eq!(
            main_with_args(["shiftmix", "estimate", "/nonexistent/a", "/nonexistent/b"]),
            2
        );
        assert_eq!(
            main_with_args(["shiftmix", "moments", "--theta", "0", "--delta", "1"]),
            1
        );
    }
}
