// Delta-method confidence intervals, with both skewness-term forms.
//
// `cargo run --example asymptotic_ci`

use shiftmix::asymptotics::{
    asymptotic_ci, finite_sample_variances, SkewTermForm, VarianceOptions,
};
use shiftmix::distributions::{sample_control, sample_treatment};
use shiftmix::{estimate, Family, FamilySpec, MixtureParams, Seed, TwoSample};

pub fn run_example() -> shiftmix::Result<()> {
    let f = FamilySpec::standard(Family::Normal);
    let mix = MixtureParams::new(0.5, 3.0)?;
    let seed = Seed::new(11, 0);
    let ts = TwoSample::new(
        sample_control(&f, 100, seed.derive(0))?,
        sample_treatment(&f, &mix, 100, seed.derive(1))?,
    )?;
    let est = estimate(&ts)?;

    for form in [SkewTermForm::Linear, SkewTermForm::Squared] {
        let opts = VarianceOptions {
            skew_term: form,
            ..VarianceOptions::default()
        };
        let ve = finite_sample_variances(
            ts.control_stats(),
            ts.treatment_stats(),
            est.epsilon_n,
            &opts,
        );
        let (t, d) = asymptotic_ci(&est, &ve, 0.95)?;
        println!("{form:?}");
        println!(
            "  theta {:.4} in [{:.4}, {:.4}]  se {:.4}",
            est.theta_hat, t.lower, t.upper, ve.se_theta
        );
        println!(
            "  delta {:.4} in [{:.4}, {:.4}]  se {:.4}",
            est.delta_hat, d.lower, d.upper, ve.se_delta
        );
    }
    Ok(())
}

fn main() {
    run_example().expect("asymptotic_ci example failed");
}
