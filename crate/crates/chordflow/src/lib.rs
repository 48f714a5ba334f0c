//! Numerical solver for the Orlicz chord Minkowski problem via the
//! normalized Gauss curvature flow of the support function.
//!
//! The crate is organized bottom-up:
//! - [`grid`]: spherical grids, quadrature, and tangential derivatives;
//! - [`body`]: convex bodies as sampled support functions;
//! - [`orlicz`]: the Orlicz weight family phi and its antiderivative psi;
//! - [`chord`]: dual quermassintegrals, chord integrals, chord measures;
//! - [`flow`]: the normalized curvature flow with adaptive stepping;
//! - [`verify`]: closed-form oracles and the Monge-Ampere residual.

pub mod body;
pub mod chord;
pub mod error;
pub mod flow;
pub mod grid;
pub mod orlicz;
pub mod util;
pub mod verify;

pub use error::{Error, Result};
