//! Finite differences against the closed-form first and second derivatives of
//! the reference functionals on random window segments.
//!
//! `cargo run --example derivative_check`

use regcalc::functionals::{fd_check_seeded, NamedFunctional};
use regcalc::window::LagInterval;

fn main() -> regcalc::Result<()> {
    let lag = LagInterval::new(64, 0.25 / 64.0)?;
    for name in ["a:x", "a:square", "a:cos", "b", "c"] {
        let f = name.parse::<NamedFunctional>()?.build();
        let (rep, draws) = fd_check_seeded(f.as_ref(), lag, 20, 42, 1e-4)?;
        println!(
            "{:<22} tag {:?}  max rel err: first {:.2e}  second {:.2e}  ({} draws) {}",
            f.name(),
            f.chi_tag(),
            rep.max_first,
            rep.max_second,
            draws.len(),
            if rep.passes(1e-5) { "ok" } else { "FAIL" }
        );
    }
    Ok(())
}
