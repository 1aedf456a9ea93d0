//! Replicates `X_T^2` and a call on `X = W + B^{0.75}`, which has `[X]_t = t`,
//! with the strategy `d_x v(t, X_t)` from the backward heat equation.
//!
//! `cargo run --release --example hedge_mixed`

use regcalc::clark_ocone::{replication_study, solve_vanilla, HedgeTask, NamedPayoff, QvGate};
use regcalc::grid_paths::GaussianSpec;

fn main() -> regcalc::Result<()> {
    let spec = GaussianSpec::mixed(vec![GaussianSpec::Brownian, GaussianSpec::fbm(0.75)]);
    let grids = [256, 1024, 4096];

    let v = solve_vanilla(NamedPayoff::Square, 1.0)?;
    println!("v(0,0) for X^2 = {:.6}", v.value(0.0, 0.0));
    let task = HedgeTask::Vanilla { payoff: NamedPayoff::Square, gate: QvGate::ByConstruction(spec.clone()) };
    let study = replication_study(&task, &spec, 1.0, &grids, 50, 0)?;
    for n in grids {
        println!("square  N = {n:>5}  median |error| = {:.5}", study.median_error(n));
    }

    // the call's kink makes Q-doubling converge slowly, so build it with a looser tolerance
    let call = NamedPayoff::Call { strike: 0.0 };
    let vc = regcalc::clark_ocone::solve_vanilla_with(call, 1.0, 64, 1e-2)?;
    println!("call at the money: v(0,0) = {:.5}, delta = {:.4}", vc.value(0.0, 0.0), vc.dx(0.0, 0.0));
    Ok(())
}
