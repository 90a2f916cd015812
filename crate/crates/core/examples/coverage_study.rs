// A small Monte Carlo coverage study printed as markdown and CSV.
//
// `cargo run --release --example coverage_study`

use shiftmix::simulation::{
    coverage_csv, coverage_markdown, run_grid, RunSettings, SimulationGrid,
};
use shiftmix::{Family, FamilySpec, IntervalMethod, Target};

pub fn run_example() -> shiftmix::Result<()> {
    let grid = SimulationGrid {
        families: vec![
            FamilySpec::standard(Family::Normal),
            FamilySpec::standard(Family::Laplace),
        ],
        thetas: vec![0.5],
        ks: vec![3.0],
        sizes: vec![50],
        settings: RunSettings {
            replications: 100,
            bootstrap_replicates: 200,
            methods: vec![IntervalMethod::Asymptotic, IntervalMethod::BCa],
            ..RunSettings::default()
        },
        master_seed: 2024,
    };
    let rows = run_grid(&grid)?;
    print!("{}", coverage_markdown(&rows, Target::Theta));
    print!("{}", coverage_markdown(&rows, Target::Delta));
    print!("{}", coverage_csv(&rows));
    Ok(())
}

fn main() {
    run_example().expect("coverage_study example failed");
}
