//! Finite-dimensional quantum histories.

pub mod bayes;
pub mod decoherence;
pub mod entropy;
pub mod error;
pub mod exec;
pub mod hpo;
pub mod linalg;
pub mod lp;
pub mod mzi;
pub mod quantum;
pub mod random;
pub mod report;
pub mod scenario;
pub mod search;

pub use error::{Error, Result};
