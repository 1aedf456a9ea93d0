//! Wiener functionals `f(int phi dX)` of a zero-QV driver (fbm, H = 0.75) are
//! represented as `f(0) + int sum_j d_j f(Y_t) phi_j(t) dX_t` with no second-order
//! term. Linear `f` is exact on the grid; for curved `f` the left-point sum leaves
//! an error of the order of `sum (dX)^2`, which vanishes with the mesh.
//!
//! `cargo run --release --example zero_qv_representation`

use regcalc::clark_ocone::{hedge_wiener_functional, MultiPayoff, NamedPayoff, TimeFunction, WienerMode};
use regcalc::grid_paths::{make_grid, sample, GaussianSpec};

fn main() -> regcalc::Result<()> {
    let x = sample(&GaussianSpec::fbm(0.75), &make_grid(1.0, 4096)?, 9)?;
    let phis = [TimeFunction::constant(1.0), TimeFunction::time_to_go(1.0)];
    let cases = [
        ("linear", MultiPayoff::Scalar(NamedPayoff::Linear), &phis[..1]),
        ("sum of squares", MultiPayoff::SumOfSquares, &phis[..]),
        ("product", MultiPayoff::Product, &phis[..]),
    ];
    for (name, f, p) in cases {
        let r = hedge_wiener_functional(f, p, &x, WienerMode::ZeroQv)?;
        println!("{name:<15} H0 = {:+.4}  payoff = {:+.5}  H0 + integral = {:+.5}  error = {:.2e}", r.h0, r.payoff, r.h0 + r.integral, r.error);
    }
    let w = sample(&GaussianSpec::Brownian, &make_grid(1.0, 4096)?, 9)?;
    let r = hedge_wiener_functional(MultiPayoff::Scalar(NamedPayoff::Square), &phis[1..], &w, WienerMode::BrownianQv)?;
    println!("brownian, (int (1-s) dW)^2: H0 = {:.5} (= 1/3)  error = {:.4}", r.h0, r.error);
    Ok(())
}
