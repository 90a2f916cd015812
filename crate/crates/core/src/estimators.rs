//! Sample summaries and the method-of-moments estimators of (θ, δ).
//!
//! With D = (S²_Y − S²_X)₊ and A = (Ȳ − X̄)₊ the estimators are
//!
//! ```text
//! θ̂ = 1 / (1 + D / (A² + ε_N))      δ̂ = A · (1 + D / (A² + ε_N))      Δ̂ = A
//! ```
//!
//! where ε_N = S_X · ln(N²) / N by default.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-group summary statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub n: usize,
    pub mean: f64,
    /// Sample variance with divisor n − 1.
    pub var_unbiased: f64,
    /// Third central moment with divisor n.
    pub c3_plugin: f64,
    /// Fourth central moment with divisor n.
    pub c4_plugin: f64,
}

impl SampleStats {
    pub fn sd(&self) -> f64 {
        self.var_unbiased.sqrt()
    }
}

/// Mean, unbiased variance and plug-in third/fourth central moments.
pub fn compute_stats(observations: &[f64]) -> Result<SampleStats> {
    let n = observations.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let nf = n as f64;
    let mean = observations.iter().sum::<f64>() / nf;
    let (mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0);
    for &x in observations {
        let d = x - mean;
        let d2 = d * d;
        s2 += d2;
        s3 += d2 * d;
        s4 += d2 * d2;
    }
    Ok(SampleStats {
        n,
        mean,
        var_unbiased: s2 / (nf - 1.0),
        c3_plugin: s3 / nf,
        c4_plugin: s4 / nf,
    })
}

/// How ε_N is computed from the control SD and the total sample size.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "rule", content = "value", rename_all = "snake_case")]
pub enum EpsilonRule {
    /// S_X · ln(N²) / N.
    #[default]
    NaturalLog,
    /// S_X · log₁₀(N²) / N.
    Log10,
    /// A fixed value, independent of the data.
    Fixed(f64),
}

impl EpsilonRule {
    pub fn evaluate(&self, s_x: f64, total_n: usize) -> f64 {
        match *self {
            EpsilonRule::NaturalLog => epsilon_n(s_x, total_n),
            EpsilonRule::Log10 => {
                let n = total_n as f64;
                s_x * (n * n).log10() / n
            }
            EpsilonRule::Fixed(v) => v,
        }
    }
}

/// The default regularizer ε_N = S_X · ln(N²) / N.
pub fn epsilon_n(s_x: f64, total_n: usize) -> f64 {
    let n = total_n as f64;
    s_x * (n * n).ln() / n
}

/// Control and treatment observations with their cached summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoSample {
    control: Vec<f64>,
    treatment: Vec<f64>,
    control_stats: SampleStats,
    treatment_stats: SampleStats,
}

impl TwoSample {
    pub fn new(control: Vec<f64>, treatment: Vec<f64>) -> Result<Self> {
        let control_stats = compute_stats(&control)?;
        let treatment_stats = compute_stats(&treatment)?;
        Ok(Self {
            control,
            treatment,
            control_stats,
            treatment_stats,
        })
    }

    pub fn control(&self) -> &[f64] {
        &self.control
    }

    pub fn treatment(&self) -> &[f64] {
        &self.treatment
    }

    pub fn control_stats(&self) -> &SampleStats {
        &self.control_stats
    }

    pub fn treatment_stats(&self) -> &SampleStats {
        &self.treatment_stats
    }

    /// N = m + n.
    pub fn total_n(&self) -> usize {
        self.control.len() + self.treatment.len()
    }

    pub fn summary(&self) -> Summary {
        Summary::from_stats(&self.control_stats, &self.treatment_stats)
    }
}

/// The four sample moments (and sizes) the estimators depend on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub m: usize,
    pub mean_x: f64,
    pub var_x: f64,
    pub n: usize,
    pub mean_y: f64,
    pub var_y: f64,
}

impl Summary {
    pub fn from_stats(x: &SampleStats, y: &SampleStats) -> Self {
        Self {
            m: x.n,
            mean_x: x.mean,
            var_x: x.var_unbiased,
            n: y.n,
            mean_y: y.mean,
            var_y: y.var_unbiased,
        }
    }

    pub fn total_n(&self) -> usize {
        self.m + self.n
    }
}

/// Which positive-part clamps fired, plus the degenerate-input warning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TruncationFlags {
    /// Ȳ − X̄ was negative and was set to zero.
    pub mean_diff_clamped: bool,
    /// S²_Y − S²_X was negative and was set to zero.
    pub var_diff_clamped: bool,
    /// The ratio denominator was zero (constant control sample at or above
    /// the treatment mean); θ̂ = 1 is reported.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub theta_hat: f64,
    pub delta_hat: f64,
    /// Δ̂ = (Ȳ − X̄)₊.
    pub delta_avg_hat: f64,
    pub epsilon_n: f64,
    pub flags: TruncationFlags,
}

/// Method-of-moments estimate of (θ, δ, Δ) with the default ε_N.
pub fn estimate(ts: &TwoSample) -> Result<EstimateResult> {
    estimate_summary(&ts.summary(), EpsilonRule::NaturalLog)
}

pub fn estimate_with(ts: &TwoSample, rule: EpsilonRule) -> Result<EstimateResult> {
    estimate_summary(&ts.summary(), rule)
}

/// The estimator evaluated on summary statistics. Bootstrap and jackknife
/// replicates go through here as well.
pub fn estimate_summary(s: &Summary, rule: EpsilonRule) -> Result<EstimateResult> {
    let eps = rule.evaluate(s.var_x.sqrt(), s.total_n());
    let mean_diff = s.mean_y - s.mean_x;
    let var_diff = s.var_y - s.var_x;
    let mut flags = TruncationFlags {
        mean_diff_clamped: mean_diff < 0.0,
        var_diff_clamped: var_diff < 0.0,
        degenerate: false,
    };
    let a = mean_diff.max(0.0);
    let d = var_diff.max(0.0);
    let denom = a * a + eps;
    let ratio = if d == 0.0 {
        if denom == 0.0 {
            flags.degenerate = true;
        }
        0.0
    } else if denom > 0.0 {
        d / denom
    } else {
        return Err(Error::DegenerateInput);
    };
    let factor = 1.0 + ratio;
    Ok(EstimateResult {
        theta_hat: 1.0 / factor,
        delta_hat: a * factor,
        delta_avg_hat: a,
        epsilon_n: eps,
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(mx: f64, vx: f64, m: usize, my: f64, vy: f64, n: usize) -> Summary {
        Summary {
            m,
            mean_x: mx,
            var_x: vx,
            n,
            mean_y: my,
            var_y: vy,
        }
    }

    #[test]
    fn stats_small_vectors() {
        let s = compute_stats(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.var_unbiased, 1.0);
        assert_eq!(s.c3_plugin, 0.0);
        assert!((s.c4_plugin - 2.0 / 3.0).abs() < 1e-15);

        let s = compute_stats(&[0.0, 0.0, 0.0, 4.0]).unwrap();
        assert_eq!(
            (s.mean, s.var_unbiased, s.c3_plugin, s.c4_plugin),
            (1.0, 4.0, 6.0, 21.0)
        );

        let s = compute_stats(&[2.5; 6]).unwrap();
        assert_eq!((s.var_unbiased, s.c3_plugin, s.c4_plugin), (0.0, 0.0, 0.0));
    }

    #[test]
    fn stats_need_two_points() {
        assert_eq!(
            compute_stats(&[1.0]),
            Err(Error::InsufficientData { needed: 2, got: 1 })
        );
        assert!(TwoSample::new(vec![1.0, 2.0], vec![]).is_err());
    }

    #[test]
    fn epsilon_values() {
        assert!((epsilon_n(1.0, 100) - 0.092_103_403_719_761_83).abs() < 1e-15);
        assert_eq!(epsilon_n(0.0, 40), 0.0);
        assert!((epsilon_n(2.0, 50) - 0.312_961_840_434_251_7).abs() < 1e-12);
        assert!((EpsilonRule::Log10.evaluate(1.0, 100) - 0.04).abs() < 1e-15);
        assert_eq!(EpsilonRule::Fixed(0.25).evaluate(3.0, 10), 0.25);
    }

    #[test]
    fn worked_example() {
        let e = estimate_summary(
            &summary(0.0, 1.0, 50, 1.0, 1.5, 50),
            EpsilonRule::NaturalLog,
        )
        .unwrap();
        assert!((e.epsilon_n - 0.092_103_4).abs() < 1e-7);
        assert!((e.theta_hat - 0.685_950_046_440_571).abs() < 1e-12);
        assert!((e.delta_hat - 1.457_832_104_814_41).abs() < 1e-12);
        assert_eq!(e.delta_avg_hat, 1.0);
        assert_eq!(e.flags, TruncationFlags::default());
    }

    #[test]
    fn variance_clamp_gives_pure_shift() {
        let e = estimate_summary(
            &summary(0.0, 2.0, 30, 0.7, 1.5, 30),
            EpsilonRule::NaturalLog,
        )
        .unwrap();
        assert_eq!(e.theta_hat, 1.0);
        assert_eq!(e.delta_hat, 0.7 - 0.0);
        assert_eq!(e.delta_avg_hat, e.delta_hat);
        assert!(e.flags.var_diff_clamped);
    }

    #[test]
    fn mean_clamp_branch() {
        let e = estimate_summary(
            &summary(0.0, 1.0, 50, -0.2, 1.1, 50),
            EpsilonRule::NaturalLog,
        )
        .unwrap();
        assert_eq!(e.delta_avg_hat, 0.0);
        assert_eq!(e.delta_hat, 0.0);
        assert!((e.theta_hat - 0.479_447_016_223_206_5).abs() < 1e-12);
        assert!(e.flags.mean_diff_clamped);
    }

    #[test]
    fn degenerate_inputs() {
        let ts = TwoSample::new(vec![0.0; 3], vec![0.0; 3]).unwrap();
        let e = estimate(&ts).unwrap();
        assert_eq!((e.theta_hat, e.delta_hat, e.delta_avg_hat), (1.0, 0.0, 0.0));
        assert!(e.flags.degenerate);

        // Constant control, treatment below it with more spread.
        let ts = TwoSample::new(vec![1.0; 4], vec![0.0, 0.5, -1.0]).unwrap();
        assert_eq!(estimate(&ts), Err(Error::DegenerateInput));

        // Constant control but treatment above it: ε_N = 0 is fine.
        let ts = TwoSample::new(vec![1.0; 4], vec![2.0, 3.0, 4.0]).unwrap();
        let e = estimate(&ts).unwrap();
        assert_eq!(e.epsilon_n, 0.0);
        assert!((e.theta_hat * e.delta_hat - e.delta_avg_hat).abs() < 1e-15);
    }
}
