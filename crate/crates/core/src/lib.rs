//! Open-quantum-system simulation of excitation energy transfer on
//! chromophore networks, with entanglement diagnostics.
//!
//! The crate is organised bottom-up:
//!
//! * [`quantum`] — dense complex-matrix primitives over labelled tensor-product
//!   bases (partial trace, partial transpose, trace norm, validity checks) and
//!   the sparse operators the master equation is assembled from.
//! * [`model`] — network Hamiltonians, Lindblad terms, structured baths and the
//!   laser drive, combined into a [`model::Generator`].
//! * [`dynamics`] — time propagation of the master equation and observable
//!   recording.
//! * [`entanglement`] — logarithmic negativity (general and single-excitation
//!   closed form), exciton-basis negativity and entangling power.
//! * [`scenarios`] — the named experiment catalog and sweep runner.
//! * [`io`] — configuration parsing, CSV output and run manifests.

pub mod dynamics;
pub mod entanglement;
pub mod error;
pub mod io;
pub mod model;
pub mod quantum;
pub mod scenarios;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Dense complex matrix used for states and operators.
pub type CMatrix = nalgebra::DMatrix<C64>;
