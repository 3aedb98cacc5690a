//! Truncated Gaussian-process regression in the spectral basis of the
//! squared-exponential kernel under Gaussian covariate design.
//!
//! The kernel `K_a(x, x') = exp(-a² (x - x')²)` paired with the covariate
//! density `ρ(x) = √(2b/π) e^{-2bx²}` has a closed-form Mercer expansion in
//! scaled Hermite functions with geometrically decaying eigenvalues. This
//! crate builds that basis ([`spectrum`]), the conjugate posterior of the
//! truncated Karhunen–Loève coefficients ([`tgp`]), Wasserstein and matrix
//! utilities for comparing the posterior to its Gaussian limit
//! ([`gaussmetrics`]), concentration and small-ball bounds with paired
//! Monte Carlo estimators ([`bounds`]), and reproducible simulation studies
//! of the approximation and contraction behaviour ([`experiments`]).

pub mod bounds;
mod error;
pub mod experiments;
pub mod gaussmetrics;
pub mod hermite;
pub mod plot;
mod special;
pub mod spectrum;
pub mod tgp;

pub use error::{Error, Result};
