//! Command layer of the soliton laboratory: run configuration, file output
//! and the computations behind each subcommand.

// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;

pub use config::RunConfig;
