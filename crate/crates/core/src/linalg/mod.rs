//! Operator and state algebra for `n`-qubit chains.
//!
//! Dense [`Operator`]s cover everything up to a few thousand dimensions;
//! [`PauliSum`] and [`Spectrum`] keep the 12-qubit workloads tractable by
//! exploiting sparsity and magnetization conservation.

pub mod local;
mod operator;
mod pauli;
pub mod random;
mod spectrum;
mod state;
mod trace;

pub use local::Mat2;
pub use operator::{embed, hermitian_function, pauli, total_operator, Axis, HermitianEigen, Operator, C64, HERMITIAN_TOL, I, ONE, UNITARY_TOL, ZERO};
pub use pauli::{PauliString, PauliSum};
pub use spectrum::{Sector, Spectrum};
pub use state::{axis_eigenstate, DensityMatrix, QuantumState, StateVector, NORM_TOL, PSD_TOL, TRACE_TOL};
pub use trace::{partial_trace, partial_trace_operator, stochastic_reduced_state, SiteSplit};
