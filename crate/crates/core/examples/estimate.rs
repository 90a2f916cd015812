// Point estimates of (θ, δ, Δ) from two simulated samples.
//
// `cargo run --example estimate`

use shiftmix::distributions::{sample_control, sample_treatment};
use shiftmix::{estimate, Family, FamilySpec, MixtureParams, Seed, TwoSample};

pub fn run_example() -> shiftmix::Result<()> {
    let f = FamilySpec::new(Family::Logistic, 10.0, 2.0)?;
    let mix = MixtureParams::new(0.6, 4.0)?;
    let seed = Seed::new(7, 0);

    let control = sample_control(&f, 200, seed.derive(0))?;
    let treatment = sample_treatment(&f, &mix, 200, seed.derive(1))?;
    let ts = TwoSample::new(control, treatment)?;
    let est = estimate(&ts)?;

    let (x, y) = (ts.control_stats(), ts.treatment_stats());
    println!("control   mean {:.4}  var {:.4}", x.mean, x.var_unbiased);
    println!("treatment mean {:.4}  var {:.4}", y.mean, y.var_unbiased);
    println!("epsilon_N {:.5}", est.epsilon_n);
    println!("theta_hat {:.4}  (true {})", est.theta_hat, mix.theta());
    println!("delta_hat {:.4}  (true {})", est.delta_hat, mix.delta());
    println!(
        "Delta_hat {:.4}  (true {})",
        est.delta_avg_hat,
        mix.delta_avg()
    );
    Ok(())
}

fn main() {
    run_example().expect("estimate example failed");
}
