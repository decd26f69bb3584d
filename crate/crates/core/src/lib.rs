//! Numerical core for non-localized KP-I solutions built from a spectral-plane
//! integral equation over a bounded domain, their finite-rank reductions and
//! the large-time curved soliton trains.
//!
//! The crate is `no_std` and only needs `alloc`. Everything runs on `f64`
//! with exponentials kept in log form relative to a per-point anchor, so the
//! same code paths are used for `t = 10` and `t = 1e4`.
//!
//! Tiers, from most to least expensive:
//!
//! * [`fredholm`]: Nyström solution of the full integral equation.
//! * [`reduction`]: degenerate-kernel reduction to an `(N+1) x (N+1)` system.
//! * [`asymptotics`]: closed-form tau function and sech² trains.
//!
//! [`validation`] ties all of them back to the PDE.
#![no_std]
// `num_traits::Float` supplies f64 math without std; once std is anywhere in
// the build graph its inherent methods win and the import looks unused.
#![allow(unused_imports)]
// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod asymptotics;
pub mod domain;
mod error;
pub mod fredholm;
pub mod linalg;
pub mod optimize;
pub mod phase;
pub mod quad;
pub mod reduction;
pub mod validation;

pub use error::{Error, Result};

pub use num_complex::Complex64;
