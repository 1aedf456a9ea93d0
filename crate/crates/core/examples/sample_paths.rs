//! Draws one path of each family on a coarse grid and prints a few nodes.
//!
//! `cargo run --example sample_paths`

use regcalc::grid_paths::{make_grid, sample, GaussianSpec};

fn main() -> regcalc::Result<()> {
    let grid = make_grid(1.0, 512)?;
    let specs = [
        GaussianSpec::Brownian,
        GaussianSpec::fbm(0.75),
        GaussianSpec::bifractional(5.0 / 6.0, 0.6),
        GaussianSpec::scaled(GaussianSpec::Brownian, 2.0),
        GaussianSpec::mixed(vec![GaussianSpec::Brownian, GaussianSpec::fbm(0.75)]),
    ];
    for spec in &specs {
        let x = sample(spec, &grid, 7)?;
        let picks: Vec<String> = [128, 256, 384, 512].iter().map(|&i| format!("{:+.4}", x.values()[i])).collect();
        println!("{:<28} X at 1/4,1/2,3/4,1: {}", spec.to_string(), picks.join("  "));
    }
    // same seed, same draw
    let a = sample(&GaussianSpec::Brownian, &grid, 7)?;
    let b = sample(&GaussianSpec::Brownian, &grid, 7)?;
    assert_eq!(a, b);
    Ok(())
}
