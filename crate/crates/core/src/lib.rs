//! Discrete-time linear control and estimation.
//!
//! Finite-horizon and steady-state LQR synthesis, Kalman prediction,
//! filtering and RTS smoothing, Gaussian utilities, and a seeded scenario
//! harness that closes the loop (LQG). The crate is `no_std` and needs only
//! `alloc`; file formats and the command line live in `lqg-cli`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod estimation;
pub mod harness;
pub mod linalg;
pub mod lqr;
pub mod model;
pub mod schedule;
pub mod stochastic;

pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};
pub use model::{LqrWeights, LtvSystem, NoiseModel, Trajectory, ValidationReport};
pub use schedule::Schedule;
