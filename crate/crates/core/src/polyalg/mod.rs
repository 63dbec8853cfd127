//! Polynomial and scalar arithmetic over the commutative coefficient field.
//!
//! Everything downstream works over a [`Scalar`] field: plain `f64` for
//! scalar generators, `Complex64` for the rotation-generator embedding.
//! [`compose_abc`] builds the second-order operator coefficients that the
//! identification step fits.

mod poly;
mod scalar;

pub use poly::{compose_abc, Polynomial};
pub use scalar::{ulp_distance, Scalar};
