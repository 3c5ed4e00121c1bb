//! Replica transformation, self-replicability and block renormalization on
//! discrete Laplacian Hamiltonians.

pub mod blockrg;
pub mod eigen;
pub mod experiments;
pub mod error;
pub mod lattice;
pub mod replica;

pub use error::{Error, Result};
