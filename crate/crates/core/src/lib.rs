//! Numerics for thermalization of long-range spin chains whose conserved
//! charges fail to commute.
//!
//! Conventions used everywhere in the crate:
//!
//! * `hbar = 1`; energies and couplings are in rad/s, times in seconds and
//!   inverse temperatures in s/rad.
//! * Sites are numbered `1..=n`. Site 1 is the most significant bit of a
//!   basis index, and bit value 0 is the spin-up state `|z+>`.
//! * Spin operators are `S = sigma / 2`.

pub mod error;
pub mod evolution;
pub mod linalg;
pub mod metrics;
pub mod models;
pub mod noise;
pub mod thermal;
pub mod tomography;

pub use error::{Error, Result};
pub use linalg::{Axis, DensityMatrix, Operator, PauliSum, QuantumState, StateVector, C64};
pub use models::{ChainSpec, CouplingLaw, Model};
