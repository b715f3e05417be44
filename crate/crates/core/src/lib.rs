pub mod capacity;
pub mod error;
pub mod exterior;
pub mod fock;
pub mod measures;
pub mod numerics;
pub mod perturbation;
pub mod rates;
pub mod toeplitz;
pub mod verify;

pub use error::{Error, Result};
