//! Composite proximal thresholding for generalized linear models.
//!
//! The crate is organized bottom-up:
//!
//! - [`prox`]: exact and certified-inexact proximity operators of
//!   `g = iota_C + sigma_D + h` and of separable sums of such functions.
//! - [`fb`]: a relaxed, error-tolerant forward-backward solver with
//!   objective-rate diagnostics.
//! - [`glm`]: dictionary models, squared-loss empirical risk, and the
//!   componentwise fitting loop built on the two modules above.
//! - [`harness`]: synthetic-data experiments for consistency and
//!   regularization-path behaviour.
//! - [`cli`]: configuration and commands behind the `proxthresh` binary.

// Negated comparisons are how NaN inputs get rejected throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod fb;
pub mod glm;
pub mod harness;
pub mod prox;
pub(crate) mod seed;

pub use error::{Error, Result};
