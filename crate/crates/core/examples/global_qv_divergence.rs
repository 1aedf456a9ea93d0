//! The global-norm statistic grows like `ln(1/eps)` for Brownian motion, so the
//! window process has no global quadratic variation; for fbm with `H > 1/2`
//! it shrinks to zero.
//!
//! `cargo run --release --example global_qv_divergence`

use regcalc::chi_qv::global_qv_divergence;
use regcalc::grid_paths::{make_grid, GaussianSpec, PathSource};
use regcalc::regularize::EpsilonLadder;

fn main() -> regcalc::Result<()> {
    let grid = make_grid(1.0, 2048)?;
    let ladder = EpsilonLadder::new(&grid, &[32, 16, 8, 4, 2], 20)?;
    for spec in [GaussianSpec::Brownian, GaussianSpec::fbm(0.75)] {
        let d = global_qv_divergence(&PathSource::new(spec.clone(), grid, 5)?, 0.25, &ladder)?;
        println!("{spec}");
        for k in 0..d.eps.len() {
            println!("  ln(1/eps~) = {:.3}  median = {:.4}", d.log_inverse[k], d.median_statistic[k]);
        }
        println!("  slope = {:.4}  R^2 = {:.4}  ratio at smallest eps = {:.4}", d.slope, d.r_squared, d.ratio_at_smallest);
    }
    Ok(())
}
