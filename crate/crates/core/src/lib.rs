//! Deterministic unitary transfer of a single bosonic mode into a register of
//! qubits and back, simulated in a truncated Fock basis.
//!
//! The crate is split along the lines of the physics:
//!
//! * [`hilbert`]: single-mode operators, standard states, wavefunctions,
//!   Wigner functions and fidelities.
//! * [`register`]: sign-vector bookkeeping for the qubit register.
//! * [`protocol`]: the conditional-displacement encoder, the pointer state
//!   `|0̃⟩`, the transfer error and recovered fidelity.
//! * [`oracle`]: closed-form reference results used to cross-check the
//!   unitary simulation.
//! * [`noise`]: single-qubit Kraus channels on branch ensembles.
//! * [`randgen`]: seeded random input states with a target photon number.

pub mod error;
pub mod hilbert;
pub mod noise;
pub mod oracle;
pub mod protocol;
pub mod quad;
pub mod randgen;
pub mod register;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
