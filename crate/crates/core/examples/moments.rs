// Mixture moments and the asymptotic variances they imply.
//
// `cargo run --example moments`

use shiftmix::asymptotics::{sigma2_delta, sigma2_theta};
use shiftmix::distributions::{mixture_moments, theoretical_moments_f};
use shiftmix::{Family, FamilySpec, MixtureParams};

pub fn run_example() -> shiftmix::Result<()> {
    println!(
        "{:<9} {:>5} {:>3} {:>9} {:>9} {:>9} {:>9} {:>10} {:>10}",
        "F", "theta", "K", "mean", "var", "c3", "c4", "s2_theta", "s2_delta"
    );
    for family in Family::ALL {
        let f = FamilySpec::standard(family);
        let mom_f = theoretical_moments_f(&f);
        for theta in [0.5, 0.8] {
            for k in [1.0, 3.0] {
                let mix = MixtureParams::new(theta, k * f.scale_sigma)?;
                let g = mixture_moments(&mom_f, &mix);
                println!(
                    "{:<9} {:>5} {:>3} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>10.4} {:>10.4}",
                    family.name(),
                    theta,
                    k,
                    g.mean,
                    g.var,
                    g.c3,
                    g.c4,
                    sigma2_theta(&mom_f, &g)?,
                    sigma2_delta(&mom_f, &g)?,
                );
            }
        }
    }
    Ok(())
}

fn main() {
    run_example().expect("moments example failed");
}
