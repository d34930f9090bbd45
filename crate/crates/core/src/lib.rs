//! Scalable two-stage Bayesian exposure-health modeling under spatial
//! exposure measurement error.
//!
//! The centerpiece is a sparse multivariate-normal prior built from a Vecchia
//! truncation of the first-stage posterior-predictive distribution, which
//! replaces cubic-cost dense MVN sampling inside the second-stage Gibbs
//! samplers. The crate also ships the dense and independent-normal baselines,
//! fully Bayesian joint samplers, a time-averaging layer for per-subject
//! exposure windows, and a simulation harness that regenerates the benchmark
//! protocol end to end.

pub mod error;
pub mod linalg;
pub mod rng;
pub mod polya_gamma;
pub mod vecchia;
pub mod bspline;
pub mod exposure;
pub mod health;
pub mod joint;
pub mod timeavg;
pub mod sim;
pub mod io;

mod clock;
mod pool;

pub use error::{Error, Result};
