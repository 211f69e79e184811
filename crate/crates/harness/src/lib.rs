//! Experiment runner that chains the core modules into reproducible data sets.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod run;

pub use error::{HarnessError, Result};
