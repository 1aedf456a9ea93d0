//! Stochastic calculus via regularization on sampled Gaussian paths.
//!
//! Paths live on a uniform grid. Forward integrals and covariations are
//! computed with a finite regularization parameter `eps`, and convergence as
//! `eps -> 0` is reported through Monte Carlo medians over replicas.

pub mod chi_qv;
pub mod clark_ocone;
pub mod cli;
pub mod error;
pub mod functionals;
pub mod grid_paths;
pub mod ito_check;
pub mod regularize;
pub mod report;
pub mod rng;
pub mod window;

pub use error::{Error, Result};
