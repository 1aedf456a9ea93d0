//! Bifractional Brownian motion with `HK = 1/2` has `[X]_t = 2^{1-K} t`.
//! The atomic test element `lambda delta_0 (x) delta_0` sees exactly that bracket.
//!
//! `cargo run --release --example bifractional_qv`

use regcalc::chi_qv::{chi_qv_suite, ChiElement};
use regcalc::grid_paths::{make_grid, GaussianSpec, PathSource};
use regcalc::regularize::EpsilonLadder;

fn main() -> regcalc::Result<()> {
    let (h, k) = (5.0 / 6.0, 0.6);
    let spec = GaussianSpec::bifractional(h, k);
    println!("{spec}: known rate {:?}, expected 2^(1-K) = {:.5}", spec.known_qv_rate(), 2f64.powf(1.0 - k));

    let grid = make_grid(1.0, 2048)?;
    let source = PathSource::new(spec, grid, 11)?;
    let ladder = EpsilonLadder::new(&grid, &[32, 16, 8, 4], 30)?;
    let res = chi_qv_suite(&source, 0.25, &ChiElement::atomic(1.0), &ladder, 0.07)?;
    println!("reference: {}", res.reference_label());
    for row in &res.report.rows {
        println!("eps = {:.5}  median = {:.4}", row.eps, row.median);
    }
    println!("verdict: {}", res.report.verdict.as_str());
    Ok(())
}
