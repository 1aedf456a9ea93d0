//! Checks the window Ito formula term by term on one Brownian path for the
//! three reference functionals.
//!
//! `cargo run --release --example ito_residual`

use regcalc::functionals::NamedFunctional;
use regcalc::grid_paths::{make_grid, sample, GaussianSpec};
use regcalc::ito_check::{ito_residual, QuadraticMode, QvInput};
use regcalc::regularize::EpsilonLadder;

fn main() -> regcalc::Result<()> {
    let grid = make_grid(1.0, 4096)?;
    let w = sample(&GaussianSpec::Brownian, &grid, 1)?;
    let ladder = EpsilonLadder::new(&grid, &[64, 32, 16, 8, 1], 1)?;
    for name in ["a:x", "a:square", "a:cos", "b", "c"] {
        let f = name.parse::<NamedFunctional>()?.build();
        let rep = ito_residual(f.as_ref(), &w, 0.25, &ladder, &QvInput::Rate(1.0), QuadraticMode::ClosedForm, 0.05)?;
        let last = rep.terms.last().unwrap();
        println!(
            "{:<22} sup residual per eps {:?}   at eps = dt: F(T) = {:+.4}, fwd = {:+.4}, quad = {:+.4}",
            rep.functional,
            rep.report.medians().iter().map(|m| (m * 1e4).round() / 1e4).collect::<Vec<_>>(),
            last.lhs.terminal(),
            last.fwd_term.terminal(),
            last.quad_term.terminal()
        );
    }
    Ok(())
}
