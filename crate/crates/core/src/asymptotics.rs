//! Delta-method variances of θ̂ and δ̂ and the asymptotic intervals.
//!
//! Notation: M = μ_Y − μ_X, D = σ²_Y − σ²_X, r = D / M².
//!
//! ```text
//! σ²_θ = (1 + r)⁻⁴ { 4D²/M⁶ (σ²_X + σ²_Y) − 4D/M⁵ (μ3_X + μ3_Y)
//!                    + [(μ4_X − σ⁴_X) + (μ4_Y − σ⁴_Y)] / M⁴ }
//! σ²_δ = (1 − r)² (σ²_X + σ²_Y) + 2(1 − r)(μ3_X + μ3_Y)/M
//!        + [(μ4_X − σ⁴_X) + (μ4_Y − σ⁴_Y)] / M²
//! ```
//!
//! These are the m = n limits (`√n(θ̂ − θ) → N(0, σ²_θ)`). The canonical
//! interval path, [`finite_sample_variances`], uses the general (m, n) forms
//! with Var(S²) = (μ₄ − (n−3)/(n−1)·σ⁴)/n and Cov(X̄, S²) = μ₃/n, and returns
//! variances already on the estimator scale.
//!
//! The covariance (μ₃) term is linear in D. A squared-D variant is kept as
//! [`SkewTermForm::Squared`] for comparison; Monte Carlo agrees with the linear
//! form (see the crate README).

use serde::{Deserialize, Serialize};

use crate::distributions::MomentSet;
use crate::error::{Error, Result};
use crate::estimators::{EstimateResult, SampleStats};
use crate::interval::{check_level, IntervalMethod, IntervalResult, Target};
use crate::normal;

pub use crate::normal::quantile as std_normal_quantile;

/// Power of D in the μ₃ covariance term of σ²_θ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkewTermForm {
    /// −4D/M⁵ (μ3_X + μ3_Y): the delta-method coefficient.
    #[default]
    Linear,
    /// −4D²/M⁵ (μ3_X + μ3_Y).
    Squared,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceOptions {
    /// Apply the (n−3)/(n−1) factor on σ⁴ in Var(S²).
    pub small_sample_correction: bool,
    pub skew_term: SkewTermForm,
}

impl Default for VarianceOptions {
    fn default() -> Self {
        Self {
            small_sample_correction: true,
            skew_term: SkewTermForm::Linear,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceEstimates {
    /// Variance of θ̂ on the estimator scale.
    pub var_theta: f64,
    pub var_delta: f64,
    pub se_theta: f64,
    pub se_delta: f64,
    /// A negative raw variance was floored at zero.
    pub floored: bool,
    /// The plug-in mean difference (Ȳ−X̄)₊ + ε_N was zero; variances are +∞.
    pub degenerate: bool,
}

impl VarianceEstimates {
    fn from_raw(raw_theta: f64, raw_delta: f64) -> Self {
        let floored = raw_theta < 0.0 || raw_delta < 0.0;
        let var_theta = raw_theta.max(0.0);
        let var_delta = raw_delta.max(0.0);
        Self {
            var_theta,
            var_delta,
            se_theta: var_theta.sqrt(),
            se_delta: var_delta.sqrt(),
            floored,
            degenerate: false,
        }
    }

    fn undefined() -> Self {
        Self {
            var_theta: f64::INFINITY,
            var_delta: f64::INFINITY,
            se_theta: f64::INFINITY,
            se_delta: f64::INFINITY,
            floored: false,
            degenerate: true,
        }
    }
}

/// Ingredients of the m = n variance formulas.
#[derive(Debug, Clone, Copy)]
struct EqualSizeParts {
    m_diff: f64,
    v_diff: f64,
    var_sum: f64,
    c3_sum: f64,
    /// (μ4_X − σ⁴_X) + (μ4_Y − σ⁴_Y)
    kurt_sum: f64,
}

impl EqualSizeParts {
    fn sigma2_theta(&self, form: SkewTermForm) -> f64 {
        let m = self.m_diff;
        let d = self.v_diff;
        let r = d / (m * m);
        let lead = (1.0 + r).powi(-4);
        let skew_coef = match form {
            SkewTermForm::Linear => d,
            SkewTermForm::Squared => d * d,
        };
        lead * (4.0 * d * d / m.powi(6) * self.var_sum - 4.0 * skew_coef / m.powi(5) * self.c3_sum
            + self.kurt_sum / m.powi(4))
    }

    fn sigma2_delta(&self) -> f64 {
        let m = self.m_diff;
        let r = self.v_diff / (m * m);
        (1.0 - r).powi(2) * self.var_sum
            + 2.0 * (1.0 - r) * self.c3_sum / m
            + self.kurt_sum / (m * m)
    }
}

fn population_parts(mom_x: &MomentSet, mom_y: &MomentSet) -> Result<EqualSizeParts> {
    let m_diff = mom_y.mean - mom_x.mean;
    if m_diff.is_nan() || m_diff <= 0.0 {
        return Err(Error::UndefinedPopulation(m_diff));
    }
    Ok(EqualSizeParts {
        m_diff,
        v_diff: mom_y.var - mom_x.var,
        var_sum: mom_x.var + mom_y.var,
        c3_sum: mom_x.c3 + mom_y.c3,
        kurt_sum: (mom_x.c4 - mom_x.var * mom_x.var) + (mom_y.c4 - mom_y.var * mom_y.var),
    })
}

/// Asymptotic variance σ²_θ of √n(θ̂ − θ) for m = n, floored at zero.
pub fn sigma2_theta(mom_x: &MomentSet, mom_y: &MomentSet) -> Result<f64> {
    sigma2_theta_with(mom_x, mom_y, SkewTermForm::Linear)
}

pub fn sigma2_theta_with(mom_x: &MomentSet, mom_y: &MomentSet, form: SkewTermForm) -> Result<f64> {
    Ok(population_parts(mom_x, mom_y)?.sigma2_theta(form).max(0.0))
}

/// Asymptotic variance σ²_δ of √n(δ̂ − δ) for m = n, floored at zero.
pub fn sigma2_delta(mom_x: &MomentSet, mom_y: &MomentSet) -> Result<f64> {
    Ok(population_parts(mom_x, mom_y)?.sigma2_delta().max(0.0))
}

/// Plug-in mean and variance differences: (Ȳ−X̄)₊ + ε_N and (S²_Y − S²_X)₊.
fn plugin_differences(x: &SampleStats, y: &SampleStats, epsilon_n: f64) -> (f64, f64) {
    let m_hat = (y.mean - x.mean).max(0.0) + epsilon_n;
    let d_hat = (y.var_unbiased - x.var_unbiased).max(0.0);
    (m_hat, d_hat)
}

fn var_s2_factor(size: usize, corrected: bool) -> f64 {
    if corrected {
        let n = size as f64;
        (n - 3.0) / (n - 1.0)
    } else {
        1.0
    }
}

/// Plug-in variances of θ̂ and δ̂ from the general (m, n) delta-method forms.
///
/// Population moments are replaced by sample moments, with μ_Y − μ_X
/// estimated by (Ȳ−X̄)₊ + ε_N and σ²_Y − σ²_X by (S²_Y − S²_X)₊. The result is
/// on the estimator scale: `se = sqrt(var)` with no further division.
pub fn finite_sample_variances(
    x: &SampleStats,
    y: &SampleStats,
    epsilon_n: f64,
    opts: &VarianceOptions,
) -> VarianceEstimates {
    let (mh, dh) = plugin_differences(x, y, epsilon_n);
    if mh.is_nan() || mh <= 0.0 {
        return VarianceEstimates::undefined();
    }
    let m = x.n as f64;
    let n = y.n as f64;
    let (vx, vy) = (x.var_unbiased, y.var_unbiased);
    let cm = var_s2_factor(x.n, opts.small_sample_correction);
    let cn = var_s2_factor(y.n, opts.small_sample_correction);

    let mean_var = vx / m + vy / n;
    let skew_cov = x.c3_plugin / m + y.c3_plugin / n;
    let var_s2 = (x.c4_plugin - cm * vx * vx) / m + (y.c4_plugin - cn * vy * vy) / n;

    let r = dh / (mh * mh);
    let skew_coef = match opts.skew_term {
        SkewTermForm::Linear => dh,
        SkewTermForm::Squared => dh * dh,
    };
    let raw_theta = (1.0 + r).powi(-4)
        * (4.0 * dh * dh / mh.powi(6) * mean_var - 4.0 * skew_coef / mh.powi(5) * skew_cov
            + var_s2 / mh.powi(4));
    let raw_delta =
        (1.0 - r).powi(2) * mean_var + 2.0 * (1.0 - r) * skew_cov / mh + var_s2 / (mh * mh);
    VarianceEstimates::from_raw(raw_theta, raw_delta)
}

/// The m = n validation path: σ²_θ and σ²_δ evaluated at plug-in moments
/// and divided by the treatment size n.
///
/// With `small_sample_correction` the σ⁴ terms carry (n−3)/(n−1), exactly as
/// the general forms do when m = n.
pub fn equal_size_variances(
    x: &SampleStats,
    y: &SampleStats,
    epsilon_n: f64,
    opts: &VarianceOptions,
) -> VarianceEstimates {
    let (mh, dh) = plugin_differences(x, y, epsilon_n);
    if mh.is_nan() || mh <= 0.0 {
        return VarianceEstimates::undefined();
    }
    let c = var_s2_factor(y.n, opts.small_sample_correction);
    let (vx, vy) = (x.var_unbiased, y.var_unbiased);
    let parts = EqualSizeParts {
        m_diff: mh,
        v_diff: dh,
        var_sum: vx + vy,
        c3_sum: x.c3_plugin + y.c3_plugin,
        kurt_sum: (x.c4_plugin - c * vx * vx) + (y.c4_plugin - c * vy * vy),
    };
    let n = y.n as f64;
    VarianceEstimates::from_raw(
        parts.sigma2_theta(opts.skew_term) / n,
        parts.sigma2_delta() / n,
    )
}

/// Symmetric normal-theory intervals θ̂ ± z·se_θ and δ̂ ± z·se_δ, truncated
/// to [0, 1] and [0, ∞).
pub fn asymptotic_ci(
    est: &EstimateResult,
    ve: &VarianceEstimates,
    level: f64,
) -> Result<(IntervalResult, IntervalResult)> {
    check_level(level)?;
    let z = normal::quantile(1.0 - (1.0 - level) / 2.0)?;
    let build = |target: Target, point: f64, se: f64| {
        let half = z * se;
        let (lower, upper, truncated_low, truncated_high) =
            target.truncate(point - half, point + half);
        IntervalResult {
            method: IntervalMethod::Asymptotic,
            target,
            lower,
            upper,
            level,
            truncated_low,
            truncated_high,
            variance_floored: ve.floored,
            diagnostics: None,
        }
    };
    Ok((
        build(Target::Theta, est.theta_hat, ve.se_theta),
        build(Target::Delta, est.delta_hat, ve.se_delta),
    ))
}
