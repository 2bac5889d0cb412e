//! Dense matrices and deterministic random numbers.

mod matrix;
mod rng;

pub use matrix::Matrix;
pub use rng::{derive_seed, Rng};
