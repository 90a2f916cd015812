use proptest::prelude::*;

use shiftmix::asymptotics::{sigma2_theta_with, SkewTermForm};
use shiftmix::distributions::{
    mixture_moments, sample_control, sample_treatment, theoretical_moments_f,
};
use shiftmix::estimators::{compute_stats, estimate_summary, Summary};
use shiftmix::normal;
use shiftmix::simulation::{export_sampling_distribution, Cell};
use shiftmix::{estimate, EpsilonRule, Family, FamilySpec, MixtureParams, Seed, TwoSample};

fn summary() -> impl Strategy<Value = Summary> {
    (
        2usize..300,
        -5.0f64..5.0,
        0.01f64..9.0,
        2usize..300,
        -5.0f64..9.0,
        0.01f64..20.0,
    )
        .prop_map(|(m, mean_x, var_x, n, mean_y, var_y)| Summary {
            m,
            mean_x,
            var_x,
            n,
            mean_y,
            var_y,
        })
}

fn samples() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (
        prop::collection::vec(-4.0f64..4.0, 2..60),
        prop::collection::vec(-4.0f64..10.0, 2..60),
    )
}

/// Textbook evaluation straight from the raw observations.
fn brute_force(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let var = |v: &[f64]| {
        let m = mean(v);
        v.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / (v.len() - 1) as f64
    };
    let big_n = (x.len() + y.len()) as f64;
    let eps = var(x).sqrt() * (big_n * big_n).ln() / big_n;
    let a = (mean(y) - mean(x)).max(0.0);
    let d = (var(y) - var(x)).max(0.0);
    let theta = 1.0 / (1.0 + d / (a * a + eps));
    (theta, a / theta, a)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 500, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn estimator_matches_brute_force((x, y) in samples()) {
        let ts = TwoSample::new(x.clone(), y.clone()).unwrap();
        let e = estimate(&ts).unwrap();
        let (t, d, avg) = brute_force(&x, &y);
        prop_assert!(close(e.theta_hat, t, 1e-9), "{} vs {}", e.theta_hat, t);
        prop_assert!(close(e.delta_hat, d, 1e-9), "{} vs {}", e.delta_hat, d);
        prop_assert!(close(e.delta_avg_hat, avg, 1e-12));
    }

    #[test]
    fn estimates_stay_in_parameter_space(s in summary()) {
        let e = estimate_summary(&s, EpsilonRule::NaturalLog).unwrap();
        prop_assert!(e.theta_hat > 0.0 && e.theta_hat <= 1.0);
        prop_assert!(e.delta_hat >= e.delta_avg_hat && e.delta_avg_hat >= 0.0);
    }

    #[test]
    fn location_invariance((x, y) in samples(), shift in -50.0f64..50.0) {
        let base = estimate(&TwoSample::new(x.clone(), y.clone()).unwrap()).unwrap();
        let moved = estimate(&TwoSample::new(
            x.iter().map(|v| v + shift).collect(),
            y.iter().map(|v| v + shift).collect(),
        ).unwrap()).unwrap();
        prop_assert!(close(base.theta_hat, moved.theta_hat, 1e-8));
        prop_assert!(close(base.delta_hat, moved.delta_hat, 1e-8));
    }

    #[test]
    fn scale_equivariance_with_scaled_epsilon(s in summary(), eps in 0.001f64..1.0, a in 0.05f64..20.0) {
        let base = estimate_summary(&s, EpsilonRule::Fixed(eps)).unwrap();
        let scaled = Summary {
            mean_x: a * s.mean_x,
            var_x: a * a * s.var_x,
            mean_y: a * s.mean_y,
            var_y: a * a * s.var_y,
            ..s
        };
        let e = estimate_summary(&scaled, EpsilonRule::Fixed(a * a * eps)).unwrap();
        prop_assert!(close(e.theta_hat, base.theta_hat, 1e-12));
        prop_assert!(close(e.delta_hat, a * base.delta_hat, 1e-12));
    }

    #[test]
    fn theta_hat_falls_as_treatment_spread_grows(s in summary(), extra in 0.0f64..10.0) {
        let lo = estimate_summary(&s, EpsilonRule::NaturalLog).unwrap();
        let hi = estimate_summary(&Summary { var_y: s.var_y + extra, ..s }, EpsilonRule::NaturalLog).unwrap();
        prop_assert!(hi.theta_hat <= lo.theta_hat);
        prop_assert!(hi.delta_hat >= lo.delta_hat);
    }

    #[test]
    fn delta_avg_grows_with_treatment_mean(s in summary(), extra in 0.0f64..10.0) {
        let lo = estimate_summary(&s, EpsilonRule::NaturalLog).unwrap();
        let hi = estimate_summary(&Summary { mean_y: s.mean_y + extra, ..s }, EpsilonRule::NaturalLog).unwrap();
        prop_assert!(hi.delta_avg_hat >= lo.delta_avg_hat);
    }

    #[test]
    fn quantile_is_monotone_and_symmetric(p in 1e-10f64..0.5, q in 1e-10f64..0.5) {
        let (zp, zq) = (normal::quantile(p).unwrap(), normal::quantile(q).unwrap());
        prop_assert_eq!(p < q, zp < zq);
        prop_assert!((zp + normal::quantile(1.0 - p).unwrap()).abs() <= 1e-9 * zp.abs().max(1.0));
    }

    #[test]
    fn mixture_mean_and_variance_identities(fi in 0usize..3, theta in 0.01f64..=1.0, delta in 0.0f64..6.0, sigma in 0.1f64..4.0) {
        let f = FamilySpec::new(Family::ALL[fi], 0.0, sigma).unwrap();
        let mom_f = theoretical_moments_f(&f);
        let g = mixture_moments(&mom_f, &MixtureParams::new(theta, delta).unwrap());
        prop_assert!(close(g.mean - mom_f.mean, theta * delta, 1e-12));
        prop_assert!(g.var >= mom_f.var);
        // The treatment excess variance and mean shift recover θ exactly.
        if delta > 0.0 {
            let m = g.mean - mom_f.mean;
            let recovered = 1.0 / (1.0 + (g.var - mom_f.var) / (m * m));
            prop_assert!(close(recovered, theta, 1e-10));
        }
    }
}

fn moments_of(v: &[f64]) -> (f64, f64) {
    let s = compute_stats(v).unwrap();
    (s.mean, s.var_unbiased)
}

#[test]
fn samplers_have_the_requested_mean_and_sd() {
    for (i, family) in Family::ALL.into_iter().enumerate() {
        let f = FamilySpec::new(family, 3.0, 2.0).unwrap();
        let x = sample_control(&f, 400_000, Seed::new(17, i as u64)).unwrap();
        let (mean, var) = moments_of(&x);
        assert!(
            (mean - 3.0).abs() < 5.0 * 2.0 / 400_000f64.sqrt(),
            "{family} mean {mean}"
        );
        let se_var = ((family.kurtosis() - 1.0) * 16.0 / 400_000.0f64).sqrt();
        assert!((var - 4.0).abs() < 5.0 * se_var, "{family} var {var}");
    }
}

#[test]
fn treatment_sampler_matches_mixture_moments() {
    let f = FamilySpec::standard(Family::Laplace);
    let mix = MixtureParams::new(0.3, 2.5).unwrap();
    let y = sample_treatment(&f, &mix, 400_000, Seed::new(18, 0)).unwrap();
    let g = mixture_moments(&theoretical_moments_f(&f), &mix);
    let (mean, var) = moments_of(&y);
    assert!((mean - g.mean).abs() < 5.0 * (g.var / 400_000.0f64).sqrt());
    assert!((var - g.var).abs() < 5.0 * ((g.c4 - g.var * g.var) / 400_000.0f64).sqrt());
}

#[test]
fn sampling_is_reproducible_and_streams_differ() {
    let f = FamilySpec::standard(Family::Logistic);
    let a = sample_control(&f, 100, Seed::new(1, 2)).unwrap();
    assert_eq!(a, sample_control(&f, 100, Seed::new(1, 2)).unwrap());
    assert_ne!(a, sample_control(&f, 100, Seed::new(1, 3)).unwrap());
}

#[test]
fn estimators_are_consistent() {
    let f = FamilySpec::standard(Family::Normal);
    let mix = MixtureParams::new(0.6, 2.0).unwrap();
    let mut errors = Vec::new();
    for (i, n) in [200usize, 2_000, 20_000, 200_000].into_iter().enumerate() {
        let seed = Seed::new(19, i as u64);
        let ts = TwoSample::new(
            sample_control(&f, n, seed.derive(0)).unwrap(),
            sample_treatment(&f, &mix, n, seed.derive(1)).unwrap(),
        )
        .unwrap();
        let e = estimate(&ts).unwrap();
        errors.push(((e.theta_hat - 0.6).abs(), (e.delta_hat - 2.0).abs()));
    }
    let (t, d) = errors[3];
    assert!(t < 0.02 && d < 0.05, "{errors:?}");
}

/// The linear-D skewness term predicts the Monte Carlo spread of θ̂; the
/// squared-D form does not. Normal F, θ = 0.2, δ = 3, n = 2000.
#[test]
fn linear_skew_term_matches_monte_carlo() {
    let c = Cell::new(FamilySpec::standard(Family::Normal), 0.2, 3.0, 2000).unwrap();
    let dist = export_sampling_distribution(&c, 10_000, Seed::new(23, 0)).unwrap();
    let n = dist.theta_hat.len() as f64;
    let mean = dist.theta_hat.iter().sum::<f64>() / n;
    let mc_sd = (dist
        .theta_hat
        .iter()
        .map(|t| (t - mean).powi(2))
        .sum::<f64>()
        / (n - 1.0))
        .sqrt();

    let f = theoretical_moments_f(&c.family);
    let g = mixture_moments(&f, &c.mixture().unwrap());
    let sd = |form| sigma2_theta_with(&f, &g, form).unwrap().sqrt() / 2000f64.sqrt();
    let (lin, sq) = (sd(SkewTermForm::Linear), sd(SkewTermForm::Squared));
    let (err_lin, err_sq) = ((lin / mc_sd - 1.0).abs(), (sq / mc_sd - 1.0).abs());
    assert!(err_lin < 0.03, "linear {lin} vs MC {mc_sd}");
    assert!(
        err_sq > 2.0 * err_lin,
        "squared {sq}, linear {lin}, MC {mc_sd}"
    );
}
