//! Finite element library and experiment drivers for the coupled
//! Joule-heating (thermistor) system
//!
//!   du/dt - Lap(u) = sigma(u) |grad(phi)|^2 + f1,
//!   -div(sigma(u) grad(phi)) = f2,
//!
//! on the unit square/cube, integrated in time by an uncoupled, linearized
//! Crank-Nicolson scheme: each step extrapolates the conductivity to the
//! half time level, solves the potential equation, then advances the
//! temperature with Crank-Nicolson averaging. Both solves are linear and
//! symmetric positive definite.

pub mod error;
pub mod experiment;
pub mod fem;
pub mod linalg;
pub mod mesh;
pub mod mms;
pub mod scheme;

pub use error::{Error, Result};
