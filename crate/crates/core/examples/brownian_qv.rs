//! The eps-regularized bracket of Brownian motion against `[W]_t = t`.
//!
//! `cargo run --release --example brownian_qv`

use regcalc::grid_paths::{make_grid, Path, PathSource, GaussianSpec};
use regcalc::regularize::{converge, covariation_eps, EpsilonLadder};
use regcalc::report::ErrorStatistic;

fn main() -> regcalc::Result<()> {
    let grid = make_grid(1.0, 4096)?;
    let source = PathSource::new(GaussianSpec::Brownian, grid, 0)?;
    let ladder = EpsilonLadder::new(&grid, &[64, 32, 16, 8], 40)?;
    let report = converge(
        |seed, eps| {
            let w = source.with_seed(seed)?;
            covariation_eps(&w, &w, eps)
        },
        |_| Path::from_fn(grid, "t", |t| t),
        &ladder,
        0.05,
        ErrorStatistic::SupOverGrid,
        0,
    )?;
    for row in &report.rows {
        println!("eps = {:.5}  median sup error = {:.4}  q90 = {:.4}", row.eps, row.median, row.q90);
    }
    println!("verdict: {}", report.verdict.as_str());
    Ok(())
}
