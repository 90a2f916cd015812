// BCa and centered-percentile bootstrap intervals with diagnostics.
//
// `cargo run --release --example bca_bootstrap`

use shiftmix::bootstrap::{bca_interval, centered_percentile_interval, resample, BootstrapConfig};
use shiftmix::distributions::{sample_control, sample_treatment};
use shiftmix::{Family, FamilySpec, MixtureParams, Seed, Target, TwoSample};

pub fn run_example() -> shiftmix::Result<()> {
    let f = FamilySpec::standard(Family::Laplace);
    let mix = MixtureParams::new(0.8, 3.0)?;
    let seed = Seed::new(5, 0);
    let ts = TwoSample::new(
        sample_control(&f, 50, seed.derive(0))?,
        sample_treatment(&f, &mix, 50, seed.derive(1))?,
    )?;

    let cfg = BootstrapConfig {
        replicates: 500,
        seed: seed.derive(2),
        ..BootstrapConfig::default()
    };
    let boot = resample(&ts, &cfg)?;
    println!(
        "{} bootstrap replicates, {} failed",
        cfg.replicates, boot.failed
    );

    for target in [Target::Theta, Target::Delta] {
        let bca = bca_interval(&boot, &ts, &cfg, target)?;
        let cp = centered_percentile_interval(&boot, &cfg, target)?;
        let diag = bca.diagnostics.expect("BCa reports diagnostics");
        println!("{target}: estimate {:.4}", boot.point_value(target));
        println!(
            "  BCa      [{:.4}, {:.4}]  z0 {:.4}  a {:.4}  fallback {}",
            bca.lower, bca.upper, diag.z0, diag.a, diag.fallback_used
        );
        println!(
            "  centered [{:.4}, {:.4}]  truncated {}",
            cp.lower,
            cp.upper,
            cp.truncated_low || cp.truncated_high
        );
    }
    Ok(())
}

fn main() {
    run_example().expect("bca_bootstrap example failed");
}
