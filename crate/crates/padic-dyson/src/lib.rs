//! Exact p-adic linear algebra and two interchangeable random-growth
//! simulators on integer signatures: a matrix product process driven by
//! Haar-uniform unimodular factors, and a reflected multi-clock Poisson
//! walk. The crate verifies, both symbolically and by simulation, that the
//! two processes have the same law after a constant time change.

pub mod error;
pub mod matrix;
pub mod process;
pub mod sampling;
pub mod scalar;
pub mod verify;

pub use error::{Error, Result};
