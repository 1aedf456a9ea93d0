//! Chi-quadratic variations of the Brownian window process for the four kinds
//! of test element, each against its closed form.
//!
//! `cargo run --release --example window_chi_qv`

use regcalc::chi_qv::{chi_qv_suite, ChiElement, Kernel};
use regcalc::grid_paths::{make_grid, GaussianSpec, PathSource};
use regcalc::regularize::EpsilonLadder;
use regcalc::window::LagInterval;

fn main() -> regcalc::Result<()> {
    let grid = make_grid(1.0, 2048)?;
    let tau = 0.25;
    let lag = LagInterval::on_grid(&grid, tau)?;
    let source = PathSource::new(GaussianSpec::Brownian, grid, 3)?;
    let ladder = EpsilonLadder::new(&grid, &[32, 16, 8], 20)?;

    let ones = vec![1.0; lag.len()];
    let elements = [
        ("atomic 2 delta0 x delta0", ChiElement::atomic(2.0)),
        ("L2 kernel g = 1", ChiElement::l2(Kernel::constant(&lag, 1.0))),
        ("diagonal g(x) = 1 + x", ChiElement::diag(&lag, |x| 1.0 + x)),
        ("chi0 mixture", ChiElement::chi0(1.0, ones.clone(), ones, Kernel::constant(&lag, 0.5))),
    ];
    for (name, phi) in &elements {
        let res = chi_qv_suite(&source, tau, phi, &ladder, 0.07)?;
        let terminal = res.reference.as_ref().map(|p| p.terminal()).unwrap_or(f64::NAN);
        println!(
            "{name:<26} reference(T) = {terminal:+.4}  medians = {:?}  h1 bounded = {}  -> {}",
            res.report.medians().iter().map(|m| (m * 1e4).round() / 1e4).collect::<Vec<_>>(),
            res.h1.bounded,
            res.report.verdict.as_str()
        );
    }
    Ok(())
}
