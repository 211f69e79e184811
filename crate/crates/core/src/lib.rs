//! Qubit dynamics under the PT-symmetric Hamiltonian `H = sigma_x + i r sigma_z`,
//! simulated through an ancilla dilation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuit;
pub mod circuitsim;
pub mod dilation;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod nonhermitian;
pub mod ode;
pub mod seeding;
pub mod synthesis;
pub mod tomography;

pub use error::{Error, Result};
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
