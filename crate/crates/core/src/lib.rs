//! Operator means of positive-definite Hermitian tensors, Kantorovich-type
//! reverse bounds, and seeded Monte Carlo verification of Loewner-order
//! inequalities.

pub mod bounds;
pub mod error;
pub mod means;
pub mod random;
pub mod tensor;

pub use error::{Error, Result};
