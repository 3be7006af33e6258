//! Analytic hyperbolic-series formulas for square indicators, weighted sums
//! over solutions of `da² ± kb² = N`, and the divisor function, each paired
//! with an exact or brute-force oracle.
//!
//! All evaluation is in binary64 with compensated summation. Every analytic
//! evaluator returns an [`Evaluation`] carrying an error estimate and
//! per-series term counts.

pub mod closed_form_integrals;
pub mod diophantine_sums;
pub mod divisor_rh;
pub mod error;
pub mod hyperbolic_kernels;
pub mod indicator_functions;
pub mod series_engine;
pub mod sum;

pub use error::{Error, Result};
pub use series_engine::{Evaluation, TruncationPolicy};
