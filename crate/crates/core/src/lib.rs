//! Numerical verification toolkit for oscillatory dynamics of the radial
//! energy-critical heat equation in six dimensions.
//!
//! The crate is organized around the ingredients of a matched-asymptotic
//! construction:
//!
//! - [`profiles`]: ground state Q, its scaling generator LambdaQ, the second
//!   homogeneous solution Gamma, the matching profile T1, and the smooth
//!   cutoff.
//! - [`spectrum`]: the radial Dirichlet eigenvalue problem for the
//!   linearized operator on balls, with its scaling laws.
//! - [`heat_tail`]: slowly decaying radial initial data with alternating
//!   signs and exact heat-kernel quadrature of their evolution, including
//!   the logarithmic corrections.
//! - [`duhamel`]: inhomogeneous heat bounds checked by nested quadrature of
//!   the Duhamel representation.
//! - [`scaling_dynamics`]: the piecewise ODE for the scaling parameter in
//!   log-time, its perturbed envelopes, telescoping bounds, and the
//!   modulation projection.
//! - [`pde_sim`]: a radial IMEX method-of-lines solver for the full
//!   nonlinear flow, used for short-horizon consistency checks of the
//!   glued ansatz.

pub mod duhamel;
pub mod error;
pub mod grid;
pub mod heat_tail;
pub mod pde_sim;
pub mod profiles;
pub mod quad;
pub mod scaling_dynamics;
pub mod spectrum;
pub mod stencil;

pub use error::{CoreError, Result};
pub use grid::RadialProfile;
