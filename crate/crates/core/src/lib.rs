//! Separation of a two-component signal F(t) = a1 f1(t) + a2 f2(t) on [0,1],
//! where each component satisfies a first-order ODE with polynomial
//! coefficients, f_i' + P_i(t) f_i = 0.
//!
//! The nonlinear parameter-estimation problem is reduced to two sequential
//! linear least-squares solves:
//!
//! 1. **Identification** ([`identify`]): fit the coefficients of the
//!    second-order operator annihilating F, in twice-integrated form to keep
//!    numerical differentiation out of the loop.
//! 2. **Recovery** ([`recover`]): turn those coefficients into the pointwise
//!    symmetric functions P1 + P2 and P1 P2, solve the quadratic for the two
//!    root branches, fit the generator coefficients, and solve the remaining
//!    linear problem for the amplitudes.
//!
//! [`harness`] wires the stages together, adds a brute-force validation
//! oracle and Monte-Carlo noise sweeps, and serializes results. The `modesep`
//! binary exposes `generate`, `separate`, `sweep` and `oracle` subcommands.

mod error;

pub mod harness;
pub mod identify;
pub mod linsolve;
pub mod polyalg;
pub mod recover;
pub mod signalkit;

pub use error::{Error, Result};
