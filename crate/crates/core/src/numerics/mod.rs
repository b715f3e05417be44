//! Arbitrary-precision scalars, special functions and quadrature rules.

pub mod big;
pub mod quadrature;
pub mod special;

pub use big::{default_precision, BigComplex, BigReal};
pub use quadrature::{gauss_legendre, QuadratureRule};
pub use special::{lgamma, ln_factorial, lower_incomplete_gamma_ladder, lower_incomplete_gamma_reg};
