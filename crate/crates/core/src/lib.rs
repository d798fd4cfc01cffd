//! Multivariate peer-effect estimation on endogenously formed networks.

pub mod dgp;
pub mod error;
pub mod gof;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod network;
pub mod peer;
pub mod predict;
pub mod rng;
pub mod sieve;

pub use error::{Error, Result};
