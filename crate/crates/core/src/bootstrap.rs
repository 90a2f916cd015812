//! Two-sample nonparametric bootstrap, tie-adjusted BCa and the centered
//! percentile interval.
//!
//! The bias correction counts ties with weight one half,
//!
//! ```text
//! z₀ = Φ⁻¹( (#{τ̂_b < τ̂} + ½ #{τ̂_b = τ̂}) / B )
//! ```
//!
//! which keeps z₀ finite when a bounded estimator piles up on its boundary.
//! The acceleration comes from a delete-one jackknife over all N = m + n
//! observations,
//!
//! ```text
//! a = Σ (τ̄ − τ̂₍₋ᵢ₎)³ / (6 [Σ (τ̄ − τ̂₍₋ᵢ₎)²]^{3/2})
//! ```
//!
//! and the interval endpoints are the bootstrap order statistics at
//! α_l = Φ(z₀ + (z₀ − z)/(1 − a(z₀ − z))) and α_u = Φ(z₀ + (z₀ + z)/(1 − a(z₀ + z))).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{estimate_summary, EpsilonRule, EstimateResult, Summary, TwoSample};
use crate::interval::{check_level, BcaDiagnostics, IntervalMethod, IntervalResult, Target};
use crate::normal;
use crate::rng::Seed;

/// Slack used when turning a probability level into an order-statistic index,
/// so that e.g. (1 − 0.95)/2 · 1000 = 25.000000000000025 selects the 25th value.
const INDEX_SNAP: f64 = 1e-9;

/// How a bootstrap quantile at probability p is read off B sorted values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantileRule {
    /// The order statistic with 1-based index max(1, ⌈p·B⌉).
    #[default]
    Ceiling,
    /// Linear interpolation between order statistics at position p·(B−1).
    Interpolated,
}

impl QuantileRule {
    pub fn quantile(self, sorted: &[f64], p: f64) -> f64 {
        let b = sorted.len();
        debug_assert!(b > 0);
        match self {
            QuantileRule::Ceiling => {
                let k = (p * b as f64 - INDEX_SNAP).ceil();
                let k = if k.is_nan() {
                    1.0
                } else {
                    k.clamp(1.0, b as f64)
                };
                sorted[k as usize - 1]
            }
            QuantileRule::Interpolated => {
                let pos = (p.clamp(0.0, 1.0)) * (b - 1) as f64;
                let lo = pos.floor() as usize;
                let hi = pos.ceil() as usize;
                let w = pos - lo as f64;
                sorted[lo] + w * (sorted[hi] - sorted[lo])
            }
        }
    }
}

/// Observations removed by the jackknife behind the acceleration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JackknifeScheme {
    /// Delete-one over all N = m + n observations, one pooled sum.
    #[default]
    Pooled,
    /// Separate delete-one jackknives per group combined through the
    /// two-sample empirical influence formula.
    PerGroup,
}

/// Centre of the deviations in the acceleration sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JackknifeCenter {
    /// Mean of the leave-one-out estimates.
    #[default]
    LeaveOneOutMean,
    /// Mean of the bootstrap estimates.
    BootstrapMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub level: f64,
    pub seed: Seed,
    pub quantile_rule: QuantileRule,
    pub jackknife: JackknifeScheme,
    pub jackknife_center: JackknifeCenter,
    pub epsilon: EpsilonRule,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            replicates: 1000,
            level: 0.95,
            seed: Seed::default(),
            quantile_rule: QuantileRule::Ceiling,
            jackknife: JackknifeScheme::Pooled,
            jackknife_center: JackknifeCenter::LeaveOneOutMean,
            epsilon: EpsilonRule::NaturalLog,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates < 2 {
            return Err(Error::InvalidParameter(format!(
                "bootstrap needs at least 2 replicates, got {}",
                self.replicates
            )));
        }
        check_level(self.level)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapDistribution {
    /// θ̂_b for every successful replicate, in replicate order.
    pub estimates_theta: Vec<f64>,
    pub estimates_delta: Vec<f64>,
    /// Estimate on the original data.
    pub point: EstimateResult,
    /// Replicates whose estimator returned an error and were skipped.
    pub failed: usize,
}

impl BootstrapDistribution {
    pub fn estimates(&self, target: Target) -> &[f64] {
        match target {
            Target::Theta => &self.estimates_theta,
            Target::Delta => &self.estimates_delta,
        }
    }

    pub fn point_value(&self, target: Target) -> f64 {
        point_of(&self.point, target)
    }
}

fn point_of(est: &EstimateResult, target: Target) -> f64 {
    match target {
        Target::Theta => est.theta_hat,
        Target::Delta => est.delta_hat,
    }
}

fn mean_and_var(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, ss / (n - 1.0))
}

/// Draws `replicates` independent pairs of with-replacement resamples and
/// re-estimates (θ, δ) on each. Replicate b uses stream `seed.derive(b)`,
/// so the output does not depend on the number of worker threads.
pub fn resample(ts: &TwoSample, cfg: &BootstrapConfig) -> Result<BootstrapDistribution> {
    cfg.validate()?;
    let point = estimate_summary(&ts.summary(), cfg.epsilon)?;
    let control = ts.control();
    let treatment = ts.treatment();
    let draws: Vec<Option<(f64, f64)>> = (0..cfg.replicates as u64)
        .into_par_iter()
        .map_init(
            || (vec![0.0; control.len()], vec![0.0; treatment.len()]),
            |(bx, by), b| {
                let mut rng = cfg.seed.derive(b).rng();
                for slot in bx.iter_mut() {
                    *slot = control[rng.index(control.len())];
                }
                for slot in by.iter_mut() {
                    *slot = treatment[rng.index(treatment.len())];
                }
                let (mean_x, var_x) = mean_and_var(bx);
                let (mean_y, var_y) = mean_and_var(by);
                let s = Summary {
                    m: bx.len(),
                    mean_x,
                    var_x,
                    n: by.len(),
                    mean_y,
                    var_y,
                };
                estimate_summary(&s, cfg.epsilon)
                    .ok()
                    .map(|e| (e.theta_hat, e.delta_hat))
            },
        )
        .collect();
    let failed = draws.iter().filter(|d| d.is_none()).count();
    let (estimates_theta, estimates_delta) = draws.into_iter().flatten().unzip();
    Ok(BootstrapDistribution {
        estimates_theta,
        estimates_delta,
        point,
        failed,
    })
}

/// Tie-adjusted bias correction. Returns ±∞ when every replicate lies
/// strictly on one side of the point estimate.
pub fn bias_correction_z0(boot: &[f64], point: f64) -> f64 {
    if boot.is_empty() {
        return f64::NAN;
    }
    let below = boot.iter().filter(|&&v| v < point).count() as f64;
    let ties = boot.iter().filter(|&&v| v == point).count() as f64;
    normal::quantile_extended((below + 0.5 * ties) / boot.len() as f64)
}

/// Acceleration from jackknife values about `center` (their mean when `None`).
/// Zero when the values show no dispersion.
pub fn acceleration_from_values(values: &[f64], center: Option<f64>) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let c = center.unwrap_or_else(|| values.iter().sum::<f64>() / values.len() as f64);
    let (mut s2, mut s3) = (0.0, 0.0);
    for &v in values {
        let d = c - v;
        s2 += d * d;
        s3 += d * d * d;
    }
    if s2 == 0.0 {
        0.0
    } else {
        s3 / (6.0 * s2.powf(1.5))
    }
}

/// Leave-one-out estimates over all N observations (control first), with
/// the deleted group's mean and variance downdated in O(1) per deletion.
pub fn leave_one_out(ts: &TwoSample, target: Target, rule: EpsilonRule) -> Result<Vec<f64>> {
    let base = ts.summary();
    check_jackknife_sizes(&base)?;
    let mut out = Vec::with_capacity(base.total_n());
    let (n_x, mx, m2x) = (base.m, base.mean_x, base.var_x * (base.m as f64 - 1.0));
    for &v in ts.control() {
        let (mean_x, var_x) = downdate(n_x, mx, m2x, v);
        let s = Summary {
            m: n_x - 1,
            mean_x,
            var_x,
            ..base
        };
        out.push(point_of(&estimate_summary(&s, rule)?, target));
    }
    let (n_y, my, m2y) = (base.n, base.mean_y, base.var_y * (base.n as f64 - 1.0));
    for &v in ts.treatment() {
        let (mean_y, var_y) = downdate(n_y, my, m2y, v);
        let s = Summary {
            n: n_y - 1,
            mean_y,
            var_y,
            ..base
        };
        out.push(point_of(&estimate_summary(&s, rule)?, target));
    }
    Ok(out)
}

/// Same values as [`leave_one_out`], recomputing every deleted sample from scratch.
pub fn leave_one_out_naive(ts: &TwoSample, target: Target, rule: EpsilonRule) -> Result<Vec<f64>> {
    check_jackknife_sizes(&ts.summary())?;
    let mut out = Vec::with_capacity(ts.total_n());
    let drop = |v: &[f64], i: usize| -> Vec<f64> {
        v.iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &x)| x)
            .collect()
    };
    for i in 0..ts.control().len() {
        let t = TwoSample::new(drop(ts.control(), i), ts.treatment().to_vec())?;
        out.push(point_of(&estimate_summary(&t.summary(), rule)?, target));
    }
    for i in 0..ts.treatment().len() {
        let t = TwoSample::new(ts.control().to_vec(), drop(ts.treatment(), i))?;
        out.push(point_of(&estimate_summary(&t.summary(), rule)?, target));
    }
    Ok(out)
}

fn check_jackknife_sizes(s: &Summary) -> Result<()> {
    let smallest = s.m.min(s.n);
    if smallest < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: smallest,
        });
    }
    Ok(())
}

/// Mean and unbiased variance after deleting `x` from a sample of size `n`
/// with mean `mean` and centred sum of squares `m2`.
fn downdate(n: usize, mean: f64, m2: f64, x: f64) -> (f64, f64) {
    let k = (n - 1) as f64;
    let new_mean = mean - (x - mean) / k;
    let new_m2 = (m2 - (x - mean) * (x - new_mean)).max(0.0);
    (new_mean, new_m2 / (k - 1.0))
}

/// Pooled jackknife acceleration about the leave-one-out mean.
pub fn acceleration_a(ts: &TwoSample, target: Target) -> Result<f64> {
    let values = leave_one_out(ts, target, EpsilonRule::NaturalLog)?;
    Ok(acceleration_from_values(&values, None))
}

/// Two-sample acceleration from per-group jackknives:
/// a = Σ_g Σ_i U³/n_g³ / (6 (Σ_g Σ_i U²/n_g²)^{3/2}) with U = (n_g − 1)(τ̄_g − τ̂₍₋ᵢ₎).
pub fn acceleration_per_group(ts: &TwoSample, target: Target, rule: EpsilonRule) -> Result<f64> {
    let values = leave_one_out(ts, target, rule)?;
    let (cx, cy) = values.split_at(ts.control().len());
    let (mut s2, mut s3) = (0.0, 0.0);
    for group in [cx, cy] {
        let ng = group.len() as f64;
        let mean = group.iter().sum::<f64>() / ng;
        for &v in group {
            let u = (ng - 1.0) * (mean - v);
            s2 += u * u / (ng * ng);
            s3 += u * u * u / (ng * ng * ng);
        }
    }
    Ok(if s2 == 0.0 {
        0.0
    } else {
        s3 / (6.0 * s2.powf(1.5))
    })
}

fn acceleration_for(
    boot: &BootstrapDistribution,
    ts: &TwoSample,
    cfg: &BootstrapConfig,
    target: Target,
) -> Result<f64> {
    match cfg.jackknife {
        JackknifeScheme::PerGroup => acceleration_per_group(ts, target, cfg.epsilon),
        JackknifeScheme::Pooled => {
            let values = leave_one_out(ts, target, cfg.epsilon)?;
            let center = match cfg.jackknife_center {
                JackknifeCenter::LeaveOneOutMean => None,
                JackknifeCenter::BootstrapMean => {
                    let b = boot.estimates(target);
                    Some(b.iter().sum::<f64>() / b.len() as f64)
                }
            };
            Ok(acceleration_from_values(&values, center))
        }
    }
}

fn sorted_copy(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// BCa levels (α_l, α_u), or `None` when the correction is unusable
/// (infinite z₀ or a non-positive denominator).
pub fn bca_levels(z0: f64, a: f64, level: f64) -> Option<(f64, f64)> {
    if !z0.is_finite() || !a.is_finite() {
        return None;
    }
    let z = normal::quantile_extended(1.0 - (1.0 - level) / 2.0);
    let den_l = 1.0 - a * (z0 - z);
    let den_u = 1.0 - a * (z0 + z);
    if den_l <= 0.0 || den_u <= 0.0 {
        return None;
    }
    Some((
        normal::cdf(z0 + (z0 - z) / den_l),
        normal::cdf(z0 + (z0 + z) / den_u),
    ))
}

/// BCa interval from bootstrap values with given corrections. With
/// z₀ = a = 0 this is the plain percentile interval.
pub fn bca_from_corrections(
    values: &[f64],
    z0: f64,
    a: f64,
    level: f64,
    rule: QuantileRule,
    target: Target,
) -> Result<IntervalResult> {
    check_level(level)?;
    let sorted = sorted_copy(values)?;
    let half = (1.0 - level) / 2.0;
    let (alpha_l, alpha_u, fallback_used) = if z0 == 0.0 && a == 0.0 {
        (half, 1.0 - half, false)
    } else {
        match bca_levels(z0, a, level) {
            Some((l, u)) => (l, u, false),
            None => (half, 1.0 - half, true),
        }
    };
    let lower = rule.quantile(&sorted, alpha_l);
    let upper = rule.quantile(&sorted, alpha_u);
    let (lower, upper, truncated_low, truncated_high) = target.truncate(lower, upper);
    Ok(IntervalResult {
        method: IntervalMethod::BCa,
        target,
        lower,
        upper,
        level,
        truncated_low,
        truncated_high,
        variance_floored: false,
        diagnostics: Some(BcaDiagnostics {
            z0,
            a,
            alpha_l,
            alpha_u,
            fallback_used,
        }),
    })
}

/// Plain percentile interval at (α/2, 1 − α/2).
pub fn percentile_interval(values: &[f64], level: f64, rule: QuantileRule) -> Result<(f64, f64)> {
    check_level(level)?;
    let sorted = sorted_copy(values)?;
    let half = (1.0 - level) / 2.0;
    Ok((
        rule.quantile(&sorted, half),
        rule.quantile(&sorted, 1.0 - half),
    ))
}

/// Tie-adjusted BCa interval for `target`.
pub fn bca_interval(
    boot: &BootstrapDistribution,
    ts: &TwoSample,
    cfg: &BootstrapConfig,
    target: Target,
) -> Result<IntervalResult> {
    let values = boot.estimates(target);
    let z0 = bias_correction_z0(values, boot.point_value(target));
    let a = acceleration_for(boot, ts, cfg, target)?;
    bca_from_corrections(values, z0, a, cfg.level, cfg.quantile_rule, target)
}

/// Centered percentile interval (2τ̂ − q_{1−α/2}, 2τ̂ − q_{α/2}), truncated
/// to the parameter space.
pub fn centered_percentile_interval(
    boot: &BootstrapDistribution,
    cfg: &BootstrapConfig,
    target: Target,
) -> Result<IntervalResult> {
    let (q_lo, q_hi) = percentile_interval(boot.estimates(target), cfg.level, cfg.quantile_rule)?;
    let point = boot.point_value(target);
    let (lower, upper, truncated_low, truncated_high) =
        target.truncate(2.0 * point - q_hi, 2.0 * point - q_lo);
    Ok(IntervalResult {
        method: IntervalMethod::CenteredPercentile,
        target,
        lower,
        upper,
        level: cfg.level,
        truncated_low,
        truncated_high,
        variance_floored: false,
        diagnostics: None,
    })
}
