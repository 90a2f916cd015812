//! Control families, the shift-mixture treatment law and their exact moments.
//!
//! Every family is parameterized by its mean and standard deviation; the
//! natural scale of each family is derived so that the variance is exactly
//! `scale_sigma²`. All samplers are inverse-CDF based on a [`Seed`]ed stream.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal;
use crate::rng::{Seed, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Normal,
    Logistic,
    Laplace,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Normal, Family::Logistic, Family::Laplace];

    /// Kurtosis μ₄/σ⁴ of the family.
    pub fn kurtosis(self) -> f64 {
        match self {
            Family::Normal => 3.0,
            Family::Logistic => 4.2,
            Family::Laplace => 6.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Normal => "Normal",
            Family::Logistic => "Logistic",
            Family::Laplace => "Laplace",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "normal" | "gaussian" => Ok(Family::Normal),
            "logistic" => Ok(Family::Logistic),
            "laplace" | "double-exponential" => Ok(Family::Laplace),
            other => Err(Error::InvalidParameter(format!("unknown family `{other}`"))),
        }
    }
}

/// A control distribution F: family, mean and standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub family: Family,
    pub location: f64,
    pub scale_sigma: f64,
}

impl FamilySpec {
    pub fn new(family: Family, location: f64, scale_sigma: f64) -> Result<Self> {
        if !(scale_sigma > 0.0 && scale_sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "scale_sigma must be positive and finite, got {scale_sigma}"
            )));
        }
        if !location.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "location must be finite, got {location}"
            )));
        }
        Ok(Self {
            family,
            location,
            scale_sigma,
        })
    }

    /// Unit-variance, zero-mean member of `family`.
    pub fn standard(family: Family) -> Self {
        Self {
            family,
            location: 0.0,
            scale_sigma: 1.0,
        }
    }

    /// The family's own scale parameter: σ for the normal, s with
    /// s²π²/3 = σ² for the logistic, b with 2b² = σ² for the Laplace.
    pub fn natural_scale(&self) -> f64 {
        match self.family {
            Family::Normal => self.scale_sigma,
            Family::Logistic => self.scale_sigma * 3f64.sqrt() / PI,
            Family::Laplace => self.scale_sigma / SQRT_2,
        }
    }

    /// One draw from F.
    pub fn draw(&self, rng: &mut StreamRng) -> f64 {
        let u = rng.open01();
        let scale = self.natural_scale();
        let z = match self.family {
            Family::Normal => normal::quantile_extended(u),
            Family::Logistic => (u / (1.0 - u)).ln(),
            Family::Laplace => {
                let c = u - 0.5;
                -c.signum() * (1.0 - 2.0 * c.abs()).ln()
            }
        };
        self.location + scale * z
    }
}

/// Treatment effect (θ, δ): responder fraction and responder shift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureParams {
    theta: f64,
    delta: f64,
}

impl MixtureParams {
    pub fn new(theta: f64, delta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "theta must lie in (0, 1], got {theta}"
            )));
        }
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "delta must be finite and non-negative, got {delta}"
            )));
        }
        Ok(Self { theta, delta })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Average treatment effect Δ = θδ.
    pub fn delta_avg(&self) -> f64 {
        self.theta * self.delta
    }
}

/// Mean, variance and third/fourth central moments of a distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub mean: f64,
    pub var: f64,
    pub c3: f64,
    pub c4: f64,
}

/// Draws `n` control observations from F.
pub fn sample_control(spec: &FamilySpec, n: usize, seed: Seed) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let mut rng = seed.rng();
    Ok(fill_control(spec, n, &mut rng))
}

/// Draws `n` treatment observations from G(u) = (1−θ)F(u) + θF(u−δ) as
/// X + Z·δ with Z ~ Bernoulli(θ) independent of X ~ F.
pub fn sample_treatment(
    spec: &FamilySpec,
    mix: &MixtureParams,
    n: usize,
    seed: Seed,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let mut rng = seed.rng();
    Ok(fill_treatment(spec, mix, n, &mut rng))
}

pub(crate) fn fill_control(spec: &FamilySpec, n: usize, rng: &mut StreamRng) -> Vec<f64> {
    (0..n).map(|_| spec.draw(rng)).collect()
}

pub(crate) fn fill_treatment(
    spec: &FamilySpec,
    mix: &MixtureParams,
    n: usize,
    rng: &mut StreamRng,
) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let x = spec.draw(rng);
            // θ = 1 must shift every draw; unit() < 1 always holds.
            if rng.unit() < mix.theta {
                x + mix.delta
            } else {
                x
            }
        })
        .collect()
}

/// Exact moments of F.
pub fn theoretical_moments_f(spec: &FamilySpec) -> MomentSet {
    let s2 = spec.scale_sigma * spec.scale_sigma;
    MomentSet {
        mean: spec.location,
        var: s2,
        c3: 0.0,
        c4: spec.family.kurtosis() * s2 * s2,
    }
}

/// Moments of Y ~ G in terms of the moments of F and (θ, δ).
pub fn mixture_moments(mom_f: &MomentSet, mix: &MixtureParams) -> MomentSet {
    let t = mix.theta;
    let d = mix.delta;
    let w = t * (1.0 - t);
    let d2 = d * d;
    // θ(1−θ)δ⁴·6σ²/δ² written as θ(1−θ)δ²·6σ², which is also the δ → 0 limit.
    let c4_extra = w * d2 * (d2 * ((1.0 - t) * (1.0 - 3.0 * t) + t) + 6.0 * mom_f.var);
    MomentSet {
        mean: mom_f.mean + t * d,
        var: mom_f.var + w * d2,
        c3: mom_f.c3 + w * d2 * d * (1.0 - 2.0 * t),
        c4: mom_f.c4 + c4_extra,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn natural_scales() {
        let lap = FamilySpec::standard(Family::Laplace);
        assert!(close(lap.natural_scale() * lap.natural_scale(), 0.5, 1e-15));
        let lg = FamilySpec::standard(Family::Logistic);
        assert!(close(lg.natural_scale(), 0.551_329, 1e-6));
        assert_eq!(FamilySpec::standard(Family::Normal).natural_scale(), 1.0);
    }

    #[test]
    fn family_moments() {
        for (f, k) in [
            (Family::Normal, 3.0),
            (Family::Logistic, 4.2),
            (Family::Laplace, 6.0),
        ] {
            let m = theoretical_moments_f(&FamilySpec::standard(f));
            assert_eq!((m.mean, m.var, m.c3, m.c4), (0.0, 1.0, 0.0, k));
        }
        let m = theoretical_moments_f(&FamilySpec::new(Family::Laplace, 1.0, 2.0).unwrap());
        assert_eq!((m.mean, m.var, m.c4), (1.0, 4.0, 96.0));
    }

    #[test]
    fn mixture_moment_examples() {
        let f = theoretical_moments_f(&FamilySpec::standard(Family::Normal));
        let g = mixture_moments(&f, &MixtureParams::new(0.5, 2.0).unwrap());
        assert_eq!((g.mean, g.var, g.c3, g.c4), (1.0, 2.0, 0.0, 10.0));

        let g1 = mixture_moments(&f, &MixtureParams::new(1.0, 3.7).unwrap());
        assert_eq!(g1.var, f.var);
        assert_eq!(g1.c3, f.c3);
        assert_eq!(g1.c4, f.c4);
        assert_eq!(g1.mean, 3.7);
    }

    #[test]
    fn zero_shift_adds_nothing() {
        let f = theoretical_moments_f(&FamilySpec::standard(Family::Logistic));
        let g = mixture_moments(&f, &MixtureParams::new(0.3, 0.0).unwrap());
        assert_eq!(g, f);
    }

    #[test]
    fn parameter_validation() {
        assert!(MixtureParams::new(0.0, 1.0).is_err());
        assert!(MixtureParams::new(1.1, 1.0).is_err());
        assert!(MixtureParams::new(0.5, -1.0).is_err());
        assert!(FamilySpec::new(Family::Normal, 0.0, 0.0).is_err());
        assert!(sample_control(&FamilySpec::standard(Family::Normal), 0, Seed::default()).is_err());
        let mix = MixtureParams::new(0.5, 1.0).unwrap();
        assert!(sample_treatment(
            &FamilySpec::standard(Family::Normal),
            &mix,
            0,
            Seed::default()
        )
        .is_err());
        assert_eq!(mix.delta_avg(), 0.5);
    }

    #[test]
    fn full_responders_shift_every_draw() {
        let spec = FamilySpec::standard(Family::Normal);
        let mix = MixtureParams::new(1.0, 2.5).unwrap();
        let seed = Seed::new(11, 0);
        let x = sample_control(&spec, 500, seed).unwrap();
        // Same stream: control draws interleave with gate draws, so compare
        // against the treatment sampler's own control component instead.
        let y = sample_treatment(&spec, &mix, 500, seed).unwrap();
        let mut rng = seed.rng();
        for yi in &y {
            let xi = spec.draw(&mut rng);
            let _gate = rng.unit();
            assert_eq!(*yi, xi + 2.5);
        }
        assert_eq!(x[0] + 2.5, y[0]);
    }

    #[test]
    fn family_parse() {
        assert_eq!("Laplace".parse::<Family>().unwrap(), Family::Laplace);
        assert!("cauchy".parse::<Family>().is_err());
    }
}
