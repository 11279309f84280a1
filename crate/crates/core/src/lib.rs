//! Hard-instance constructions for non-adaptive distribution-free junta
//! testing, and the machinery to check their properties empirically.

pub mod bitspace;
pub mod cli;
pub mod error;
pub mod harness;
pub mod instances;
pub mod oracles;
pub mod seed;
pub mod stats;
pub mod verification;

pub use error::{LabError, Result};
