//! Confidence interval results shared by the asymptotic and bootstrap methods.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalMethod {
    Asymptotic,
    #[serde(rename = "bca")]
    BCa,
    CenteredPercentile,
}

impl IntervalMethod {
    pub const ALL: [IntervalMethod; 3] = [
        IntervalMethod::Asymptotic,
        IntervalMethod::BCa,
        IntervalMethod::CenteredPercentile,
    ];

    pub fn label(self) -> &'static str {
        match self {
            IntervalMethod::Asymptotic => "asymptotic",
            IntervalMethod::BCa => "bca",
            IntervalMethod::CenteredPercentile => "centered_percentile",
        }
    }

    pub fn needs_bootstrap(self) -> bool {
        !matches!(self, IntervalMethod::Asymptotic)
    }
}

impl fmt::Display for IntervalMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for IntervalMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "asymptotic" | "asy" => Ok(IntervalMethod::Asymptotic),
            "bca" => Ok(IntervalMethod::BCa),
            "centered_percentile" | "centered" | "cp" => Ok(IntervalMethod::CenteredPercentile),
            other => Err(Error::InvalidParameter(format!("unknown method `{other}`"))),
        }
    }
}

/// The parameter an interval is for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Theta,
    Delta,
}

impl Target {
    /// Clamps a raw interval to the parameter space, reporting which ends moved.
    pub fn truncate(self, lower: f64, upper: f64) -> (f64, f64, bool, bool) {
        let (lo_bound, hi_bound) = match self {
            Target::Theta => (0.0, 1.0),
            Target::Delta => (0.0, f64::INFINITY),
        };
        let truncated_low = lower < lo_bound;
        let truncated_high = upper > hi_bound;
        let lo = if truncated_low { lo_bound } else { lower };
        let hi = if truncated_high { hi_bound } else { upper };
        // A raw interval lying wholly outside the space collapses onto the edge.
        (
            lo.min(hi_bound),
            hi.max(lo_bound),
            truncated_low,
            truncated_high,
        )
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Target::Theta => "theta",
            Target::Delta => "delta",
        })
    }
}

/// Diagnostics of a BCa interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BcaDiagnostics {
    /// Bias correction; may be ±∞.
    pub z0: f64,
    /// Acceleration.
    pub a: f64,
    pub alpha_l: f64,
    pub alpha_u: f64,
    /// The plain percentile interval was reported instead.
    pub fallback_used: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalResult {
    pub method: IntervalMethod,
    pub target: Target,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub truncated_low: bool,
    pub truncated_high: bool,
    /// The plug-in variance was negative and floored at zero (asymptotic only).
    #[serde(default)]
    pub variance_floored: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<BcaDiagnostics>,
}

impl IntervalResult {
    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }

    /// Closed-interval containment.
    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }
}

pub(crate) fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "confidence level must lie in (0, 1), got {level}"
        )))
    }
}
