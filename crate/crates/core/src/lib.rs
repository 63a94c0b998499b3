//! Weighted block Hankel operators over truncated unitary duals of compact groups.

pub mod dual_catalog;
pub mod error;
pub mod fredholm;
pub mod inverse_recovery;
pub mod linalg;
pub mod operator_assembly;
pub mod registry;
pub mod spectral_analysis;
pub mod symbol_space;

pub use error::{Error, ErrorKind, Result};
