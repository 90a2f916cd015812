//! Seeded Monte Carlo coverage studies over (F, θ, K, m = n) grids.
//!
//! Seeding is hierarchical: grid cell `c` runs under `Seed::new(master, c)`,
//! replication `r` of a cell under `cell_seed.derive(r)`, and inside a
//! replication the control sample, treatment sample and bootstrap use the
//! children 0, 1 and 2. Replications run in parallel but are aggregated in
//! index order, so results are identical for any number of threads.

use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{
    asymptotic_ci, finite_sample_variances, sigma2_delta, sigma2_theta, VarianceOptions,
};
use crate::bootstrap::{bca_interval, centered_percentile_interval, resample, BootstrapConfig};
use crate::distributions::{
    fill_control, fill_treatment, mixture_moments, theoretical_moments_f, Family, FamilySpec,
    MixtureParams,
};
use crate::error::{Error, Result};
use crate::estimators::{estimate_with, EpsilonRule, EstimateResult, TwoSample};
use crate::interval::{check_level, IntervalMethod, IntervalResult, Target};
use crate::rng::Seed;

/// Version tag written in the `schema` column of coverage CSV files.
pub const COVERAGE_CSV_SCHEMA: &str = "coverage-v1";

/// One simulation setting: control law F, θ, separation K (δ = K·σ_X) and m = n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub family: FamilySpec,
    pub theta: f64,
    pub k: f64,
    pub n: usize,
}

impl Cell {
    pub fn new(family: FamilySpec, theta: f64, k: f64, n: usize) -> Result<Self> {
        let cell = Self {
            family,
            theta,
            k,
            n,
        };
        cell.validate()?;
        Ok(cell)
    }

    pub fn delta(&self) -> f64 {
        self.k * self.family.scale_sigma
    }

    pub fn mixture(&self) -> Result<MixtureParams> {
        MixtureParams::new(self.theta, self.delta())
    }

    fn validate(&self) -> Result<()> {
        if !(self.k >= 0.0 && self.k.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "K must be non-negative, got {}",
                self.k
            )));
        }
        if self.n < 3 {
            return Err(Error::InvalidParameter(format!(
                "group size must be at least 3, got {}",
                self.n
            )));
        }
        self.mixture().map(|_| ())
    }
}

/// Everything about a coverage run except the cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub replications: usize,
    pub level: f64,
    pub methods: Vec<IntervalMethod>,
    pub bootstrap_replicates: usize,
    pub variance: VarianceOptions,
    pub epsilon: EpsilonRule,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            replications: 1000,
            level: 0.95,
            methods: vec![IntervalMethod::Asymptotic, IntervalMethod::BCa],
            bootstrap_replicates: 1000,
            variance: VarianceOptions::default(),
            epsilon: EpsilonRule::NaturalLog,
        }
    }
}

impl RunSettings {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidParameter(
                "replications must be at least 1".into(),
            ));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidParameter(
                "no interval methods selected".into(),
            ));
        }
        if self.methods.iter().any(|m| m.needs_bootstrap()) && self.bootstrap_replicates < 2 {
            return Err(Error::InvalidParameter(
                "bootstrap methods need at least 2 bootstrap replicates".into(),
            ));
        }
        check_level(self.level)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationGrid {
    pub families: Vec<FamilySpec>,
    pub thetas: Vec<f64>,
    pub ks: Vec<f64>,
    pub sizes: Vec<usize>,
    pub settings: RunSettings,
    pub master_seed: u64,
}

impl SimulationGrid {
    /// F ∈ {Normal, Logistic, Laplace}, θ ∈ {0.5, 0.8}, K ∈ {1, 3},
    /// m = n ∈ {25, 50, 100, 500}.
    pub fn paper_default(master_seed: u64) -> Self {
        Self {
            families: Family::ALL
                .iter()
                .map(|&f| FamilySpec::standard(f))
                .collect(),
            thetas: vec![0.5, 0.8],
            ks: vec![1.0, 3.0],
            sizes: vec![25, 50, 100, 500],
            settings: RunSettings::default(),
            master_seed,
        }
    }

    /// Cells in output order: size outermost, then family, θ, K.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        let mut out = Vec::new();
        for &n in &self.sizes {
            for &family in &self.families {
                for &theta in &self.thetas {
                    for &k in &self.ks {
                        out.push(Cell::new(family, theta, k, n)?);
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn cell_seed(&self, index: usize) -> Seed {
        Seed::new(self.master_seed, index as u64)
    }
}

/// Aggregated performance of one interval method in one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: IntervalMethod,
    pub coverage_theta: f64,
    pub avg_len_theta: f64,
    pub mc_se_theta: f64,
    pub coverage_delta: f64,
    pub avg_len_delta: f64,
    pub mc_se_delta: f64,
    /// Replications that produced an interval.
    pub valid: usize,
    /// Replications where the method failed.
    pub failures: usize,
    pub fallbacks_theta: usize,
    pub fallbacks_delta: usize,
    pub truncated_theta: usize,
    pub truncated_delta: usize,
    /// Replications with a floored plug-in variance.
    pub floored: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub family: Family,
    pub theta: f64,
    pub k: f64,
    pub n: usize,
    pub delta: f64,
    pub replications: usize,
    pub estimator_failures: usize,
    pub mean_theta_hat: f64,
    pub mean_delta_hat: f64,
    pub mae_theta: f64,
    pub mae_delta: f64,
    pub sd_theta_hat: f64,
    pub sd_delta_hat: f64,
    /// Fraction of replications with θ̂ = 1.
    pub theta_at_one: f64,
    pub methods: Vec<MethodSummary>,
}

impl CoverageRow {
    pub fn method(&self, method: IntervalMethod) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == method)
    }
}

/// Binomial Monte Carlo standard error of a coverage estimate.
pub fn mc_se(coverage: f64, replications: usize) -> f64 {
    (coverage * (1.0 - coverage) / replications as f64).sqrt()
}

type IntervalPair = (IntervalResult, IntervalResult);

struct ReplicationOutcome {
    estimate: Option<EstimateResult>,
    intervals: Vec<Option<IntervalPair>>,
}

fn draw_two_sample(cell: &Cell, mix: &MixtureParams, seed: Seed) -> Result<TwoSample> {
    let x = fill_control(&cell.family, cell.n, &mut seed.derive(0).rng());
    let y = fill_treatment(&cell.family, mix, cell.n, &mut seed.derive(1).rng());
    TwoSample::new(x, y)
}

fn run_replication(
    cell: &Cell,
    mix: &MixtureParams,
    settings: &RunSettings,
    seed: Seed,
) -> ReplicationOutcome {
    let failed = || ReplicationOutcome {
        estimate: None,
        intervals: vec![None; settings.methods.len()],
    };
    let Ok(ts) = draw_two_sample(cell, mix, seed) else {
        return failed();
    };
    let Ok(est) = estimate_with(&ts, settings.epsilon) else {
        return failed();
    };
    let boot_cfg = BootstrapConfig {
        replicates: settings.bootstrap_replicates,
        level: settings.level,
        seed: seed.derive(2),
        epsilon: settings.epsilon,
        ..BootstrapConfig::default()
    };
    let boot = if settings.methods.iter().any(|m| m.needs_bootstrap()) {
        resample(&ts, &boot_cfg).ok()
    } else {
        None
    };
    let intervals = settings
        .methods
        .iter()
        .map(|method| match method {
            IntervalMethod::Asymptotic => {
                let ve = finite_sample_variances(
                    ts.control_stats(),
                    ts.treatment_stats(),
                    est.epsilon_n,
                    &settings.variance,
                );
                asymptotic_ci(&est, &ve, settings.level).ok()
            }
            IntervalMethod::BCa => {
                let boot = boot.as_ref()?;
                let t = bca_interval(boot, &ts, &boot_cfg, Target::Theta).ok()?;
                let d = bca_interval(boot, &ts, &boot_cfg, Target::Delta).ok()?;
                Some((t, d))
            }
            IntervalMethod::CenteredPercentile => {
                let boot = boot.as_ref()?;
                let t = centered_percentile_interval(boot, &boot_cfg, Target::Theta).ok()?;
                let d = centered_percentile_interval(boot, &boot_cfg, Target::Delta).ok()?;
                Some((t, d))
            }
        })
        .collect();
    ReplicationOutcome {
        estimate: Some(est),
        intervals,
    }
}

/// Runs `settings.replications` replications of one cell and aggregates
/// coverage (closed endpoints) and post-truncation interval length.
pub fn run_cell(cell: &Cell, settings: &RunSettings, seed: Seed) -> Result<CoverageRow> {
    settings.validate()?;
    let mix = cell.mixture()?;
    let outcomes: Vec<ReplicationOutcome> = (0..settings.replications as u64)
        .into_par_iter()
        .map(|r| run_replication(cell, &mix, settings, seed.derive(r)))
        .collect();
    Ok(aggregate(cell, &mix, settings, &outcomes))
}

fn aggregate(
    cell: &Cell,
    mix: &MixtureParams,
    settings: &RunSettings,
    outcomes: &[ReplicationOutcome],
) -> CoverageRow {
    let (theta, delta) = (mix.theta(), mix.delta());
    let ests: Vec<&EstimateResult> = outcomes
        .iter()
        .filter_map(|o| o.estimate.as_ref())
        .collect();
    let ne = ests.len().max(1) as f64;
    let mean = |f: &dyn Fn(&EstimateResult) -> f64| ests.iter().map(|e| f(e)).sum::<f64>() / ne;
    let mean_theta_hat = mean(&|e| e.theta_hat);
    let mean_delta_hat = mean(&|e| e.delta_hat);
    let sd = |f: &dyn Fn(&EstimateResult) -> f64, mu: f64| {
        if ests.len() < 2 {
            return 0.0;
        }
        (ests.iter().map(|e| (f(e) - mu).powi(2)).sum::<f64>() / (ests.len() - 1) as f64).sqrt()
    };

    let methods = settings
        .methods
        .iter()
        .enumerate()
        .map(|(j, &method)| {
            let mut s = MethodSummary {
                method,
                coverage_theta: 0.0,
                avg_len_theta: 0.0,
                mc_se_theta: 0.0,
                coverage_delta: 0.0,
                avg_len_delta: 0.0,
                mc_se_delta: 0.0,
                valid: 0,
                failures: 0,
                fallbacks_theta: 0,
                fallbacks_delta: 0,
                truncated_theta: 0,
                truncated_delta: 0,
                floored: 0,
            };
            let (mut cov_t, mut cov_d, mut len_t, mut len_d) = (0usize, 0usize, 0.0, 0.0);
            for o in outcomes {
                let Some((t, d)) = &o.intervals[j] else {
                    s.failures += 1;
                    continue;
                };
                s.valid += 1;
                cov_t += usize::from(t.contains(theta));
                cov_d += usize::from(d.contains(delta));
                len_t += t.length();
                len_d += d.length();
                let fell_back = |i: &IntervalResult| i.diagnostics.is_some_and(|g| g.fallback_used);
                s.fallbacks_theta += usize::from(fell_back(t));
                s.fallbacks_delta += usize::from(fell_back(d));
                s.truncated_theta += usize::from(t.truncated_low || t.truncated_high);
                s.truncated_delta += usize::from(d.truncated_low || d.truncated_high);
                s.floored += usize::from(t.variance_floored);
            }
            if s.valid > 0 {
                let v = s.valid as f64;
                s.coverage_theta = cov_t as f64 / v;
                s.coverage_delta = cov_d as f64 / v;
                s.avg_len_theta = len_t / v;
                s.avg_len_delta = len_d / v;
                s.mc_se_theta = mc_se(s.coverage_theta, s.valid);
                s.mc_se_delta = mc_se(s.coverage_delta, s.valid);
            }
            s
        })
        .collect();

    CoverageRow {
        family: cell.family.family,
        theta,
        k: cell.k,
        n: cell.n,
        delta,
        replications: outcomes.len(),
        estimator_failures: outcomes.len() - ests.len(),
        mean_theta_hat,
        mean_delta_hat,
        mae_theta: mean(&|e| (e.theta_hat - theta).abs()),
        mae_delta: mean(&|e| (e.delta_hat - delta).abs()),
        sd_theta_hat: sd(&|e| e.theta_hat, mean_theta_hat),
        sd_delta_hat: sd(&|e| e.delta_hat, mean_delta_hat),
        theta_at_one: ests.iter().filter(|e| e.theta_hat == 1.0).count() as f64 / ne,
        methods,
    }
}

/// Runs every cell of the grid in grid order.
pub fn run_grid(grid: &SimulationGrid) -> Result<Vec<CoverageRow>> {
    run_grid_with_progress(grid, |_, _| {})
}

/// [`run_grid`] with a callback receiving (cells finished, total cells).
/// Cells may finish out of order; the returned rows never are.
pub fn run_grid_with_progress<P>(grid: &SimulationGrid, progress: P) -> Result<Vec<CoverageRow>>
where
    P: Fn(usize, usize) + Sync,
{
    grid.settings.validate()?;
    let cells = grid.cells()?;
    let total = cells.len();
    let done = AtomicUsize::new(0);
    cells
        .par_iter()
        .enumerate()
        .map(|(i, cell)| {
            let row = run_cell(cell, &grid.settings, grid.cell_seed(i));
            progress(done.fetch_add(1, Ordering::Relaxed) + 1, total);
            row
        })
        .collect()
}

/// [`run_grid`] on a dedicated pool of `threads` workers.
pub fn run_grid_with_threads(grid: &SimulationGrid, threads: usize) -> Result<Vec<CoverageRow>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(|| run_grid(grid))
}

/// Raw (θ̂, δ̂) draws of one cell together with the normal approximation
/// θ̂ ≈ N(θ, σ²_θ/n), δ̂ ≈ N(δ, σ²_δ/n) from population moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingDistribution {
    pub cell: Cell,
    pub theta: f64,
    pub delta: f64,
    /// σ_θ/√n; absent when the population variance is undefined (δ = 0).
    pub theta_sd: Option<f64>,
    pub delta_sd: Option<f64>,
    pub theta_hat: Vec<f64>,
    pub delta_hat: Vec<f64>,
    pub delta_avg_hat: Vec<f64>,
    /// Replications whose estimator failed (recorded as NaN).
    pub failures: usize,
}

pub fn export_sampling_distribution(
    cell: &Cell,
    replications: usize,
    seed: Seed,
) -> Result<SamplingDistribution> {
    if replications == 0 {
        return Err(Error::InvalidParameter(
            "replications must be at least 1".into(),
        ));
    }
    let mix = cell.mixture()?;
    let draws: Vec<Option<EstimateResult>> = (0..replications as u64)
        .into_par_iter()
        .map(|r| {
            let ts = draw_two_sample(cell, &mix, seed.derive(r)).ok()?;
            estimate_with(&ts, EpsilonRule::NaturalLog).ok()
        })
        .collect();
    let mom_x = theoretical_moments_f(&cell.family);
    let mom_y = mixture_moments(&mom_x, &mix);
    let root_n = (cell.n as f64).sqrt();
    let pick = |f: fn(&EstimateResult) -> f64| -> Vec<f64> {
        draws
            .iter()
            .map(|d| d.as_ref().map_or(f64::NAN, f))
            .collect()
    };
    Ok(SamplingDistribution {
        cell: *cell,
        theta: mix.theta(),
        delta: mix.delta(),
        theta_sd: sigma2_theta(&mom_x, &mom_y).ok().map(|v| v.sqrt() / root_n),
        delta_sd: sigma2_delta(&mom_x, &mom_y).ok().map(|v| v.sqrt() / root_n),
        theta_hat: pick(|e| e.theta_hat),
        delta_hat: pick(|e| e.delta_hat),
        delta_avg_hat: pick(|e| e.delta_avg_hat),
        failures: draws.iter().filter(|d| d.is_none()).count(),
    })
}

impl SamplingDistribution {
    /// CSV with header `rep,theta_hat,delta_hat`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("rep,theta_hat,delta_hat\n");
        for (i, (t, d)) in self.theta_hat.iter().zip(&self.delta_hat).enumerate() {
            let _ = writeln!(s, "{},{},{}", i + 1, t, d);
        }
        s
    }
}

const CSV_HEADER: &str = "schema,family,theta,K,n,delta,R,estimator_failures,mean_theta_hat,mean_delta_hat,\
mae_theta,mae_delta,sd_theta_hat,sd_delta_hat,theta_at_one,method,coverage_theta,avg_len_theta,mc_se_theta,\
coverage_delta,avg_len_delta,mc_se_delta,valid,failures,fallbacks_theta,fallbacks_delta,truncated_theta,\
truncated_delta,floored";

/// Coverage rows as CSV, one line per (cell, method), full float precision.
pub fn coverage_csv(rows: &[CoverageRow]) -> String {
    let mut out = String::with_capacity(256 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        for m in &r.methods {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                COVERAGE_CSV_SCHEMA,
                r.family,
                r.theta,
                r.k,
                r.n,
                r.delta,
                r.replications,
                r.estimator_failures,
                r.mean_theta_hat,
                r.mean_delta_hat,
                r.mae_theta,
                r.mae_delta,
                r.sd_theta_hat,
                r.sd_delta_hat,
                r.theta_at_one,
                m.method,
                m.coverage_theta,
                m.avg_len_theta,
                m.mc_se_theta,
                m.coverage_delta,
                m.avg_len_delta,
                m.mc_se_delta,
                m.valid,
                m.failures,
                m.fallbacks_theta,
                m.fallbacks_delta,
                m.truncated_theta,
                m.truncated_delta,
                m.floored,
            );
        }
    }
    out
}

/// Renders `x` with six significant digits, trailing zeros trimmed.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = 6 - 1 - x.abs().log10().floor() as i32;
    let s = if digits > 0 {
        format!("{:.*}", digits as usize, x)
    } else {
        format!("{:.0}", x)
    };
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn method_heading(m: IntervalMethod) -> &'static str {
    match m {
        IntervalMethod::Asymptotic => "Asy",
        IntervalMethod::BCa => "BCa",
        IntervalMethod::CenteredPercentile => "CPct",
    }
}

/// Markdown coverage table for θ or δ, one block per sample size.
pub fn coverage_markdown(rows: &[CoverageRow], target: Target) -> String {
    let mut out = String::new();
    let symbol = match target {
        Target::Theta => "θ",
        Target::Delta => "δ",
    };
    let _ = writeln!(
        out,
        "### Coverage probabilities and average lengths for {symbol}\n"
    );
    let mut sizes: Vec<usize> = Vec::new();
    for r in rows {
        if !sizes.contains(&r.n) {
            sizes.push(r.n);
        }
    }
    for n in sizes {
        let block: Vec<&CoverageRow> = rows.iter().filter(|r| r.n == n).collect();
        let methods: Vec<IntervalMethod> = block[0].methods.iter().map(|m| m.method).collect();
        let _ = writeln!(out, "**m = n = {n}**\n");
        let mut header = String::from("| F | θ | K |");
        let mut rule = String::from("|---|---|---|");
        for m in &methods {
            let h = method_heading(*m);
            let _ = write!(header, " {h} Cov. Prob | {h} Avg. Len |");
            rule.push_str("---|---|");
        }
        let _ = writeln!(out, "{header}\n{rule}");
        for r in block {
            let _ = write!(out, "| {} | {} | {} |", r.family, sig6(r.theta), sig6(r.k));
            for m in &r.methods {
                let (c, l) = match target {
                    Target::Theta => (m.coverage_theta, m.avg_len_theta),
                    Target::Delta => (m.coverage_delta, m.avg_len_delta),
                };
                let _ = write!(out, " {} | {} |", sig6(c), sig6(l));
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_settings() -> RunSettings {
        RunSettings {
            replications: 40,
            methods: vec![IntervalMethod::Asymptotic],
            ..RunSettings::default()
        }
    }

    #[test]
    fn paper_grid_has_48_cells() {
        assert_eq!(SimulationGrid::paper_default(1).cells().unwrap().len(), 48);
    }

    #[test]
    fn empty_grid_gives_no_rows() {
        let mut g = SimulationGrid::paper_default(1);
        g.sizes.clear();
        assert!(run_grid(&g).unwrap().is_empty());
    }

    #[test]
    fn single_cell_grid_equals_run_cell() {
        let grid = SimulationGrid {
            families: vec![FamilySpec::standard(Family::Laplace)],
            thetas: vec![0.8],
            ks: vec![3.0],
            sizes: vec![30],
            settings: small_settings(),
            master_seed: 99,
        };
        let rows = run_grid(&grid).unwrap();
        let cell = grid.cells().unwrap()[0];
        let direct = run_cell(&cell, &grid.settings, Seed::new(99, 0)).unwrap();
        assert_eq!(rows, vec![direct]);
    }

    #[test]
    fn settings_validation() {
        let mut s = small_settings();
        s.replications = 0;
        assert!(s.validate().is_err());
        let mut s = small_settings();
        s.methods.clear();
        assert!(s.validate().is_err());
        assert!(Cell::new(FamilySpec::standard(Family::Normal), 0.0, 1.0, 25).is_err());
        assert!(Cell::new(FamilySpec::standard(Family::Normal), 0.5, -1.0, 25).is_err());
    }

    #[test]
    fn sig6_formatting() {
        assert_eq!(sig6(0.947), "0.947");
        assert_eq!(sig6(1.0), "1");
        assert_eq!(sig6(1.234_567_89), "1.23457");
        assert_eq!(sig6(1234567.0), "1234567");
        assert_eq!(sig6(-0.000_123_456_78), "-0.000123457");
    }

    #[test]
    fn mc_se_formula() {
        assert!((mc_se(0.95, 1000) - 0.006_892_024).abs() < 1e-9);
    }

    #[test]
    fn csv_and_markdown_shapes() {
        let cell = Cell::new(FamilySpec::standard(Family::Normal), 0.5, 3.0, 25).unwrap();
        let row = run_cell(&cell, &small_settings(), Seed::new(3, 0)).unwrap();
        let csv = coverage_csv(std::slice::from_ref(&row));
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0].split(',').count(), lines[1].split(',').count());
        assert!(lines[1].starts_with("coverage-v1,Normal,0.5,3,25,3,40,"));
        let md = coverage_markdown(&[row], Target::Theta);
        assert!(md.contains("| Normal | 0.5 | 3 |"));
    }
}
