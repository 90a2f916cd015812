// Sampling distribution of (θ̂, δ̂) against its normal approximation.
//
// `cargo run --release --example sampling_distribution`

use shiftmix::simulation::{export_sampling_distribution, Cell};
use shiftmix::{Family, FamilySpec, Seed};

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (
        m,
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt(),
    )
}

pub fn run_example() -> shiftmix::Result<()> {
    let cell = Cell::new(FamilySpec::standard(Family::Laplace), 0.5, 2.0, 500)?;
    let dist = export_sampling_distribution(&cell, 500, Seed::new(1, 0))?;

    let (mt, st) = mean_sd(&dist.theta_hat);
    let (md, sd) = mean_sd(&dist.delta_hat);
    println!(
        "theta_hat: mean {mt:.4} sd {st:.4}  normal approx sd {:.4}",
        dist.theta_sd.unwrap_or(f64::NAN)
    );
    println!(
        "delta_hat: mean {md:.4} sd {sd:.4}  normal approx sd {:.4}",
        dist.delta_sd.unwrap_or(f64::NAN)
    );
    let csv = dist.to_csv();
    for line in csv.lines().take(4) {
        println!("{line}");
    }
    Ok(())
}

fn main() {
    run_example().expect("sampling_distribution example failed");
}
