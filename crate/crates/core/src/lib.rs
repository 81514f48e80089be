//! Numerics and closed-form analytics for a single cavity mode coupled to a
//! two- or three-level atom in the ultrastrong-coupling regime.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: truncated Hilbert space, bare operators and Hamiltonians.
//! - [`spectrum`]: dressed eigensystems and the Jaynes-Cummings ladder.
//! - [`observables`]: positive-frequency operators and normal-ordered
//!   correlation functions (physical versus bare photons).
//! - [`perturbation`]: Jaynes-Cummings Green's functions, Dyson partial sums,
//!   second-order energy shifts and drive matrix elements.
//! - [`dynamics`]: dressed-basis Lindblad evolution with Gaussian pulses.
//! - [`scenario`]: TOML scenario files, presets and CSV artifacts.
//!
//! Units: the cavity frequency sets the scale (`omega_c = 1` in all presets)
//! and the bare ground level `|g>` is the energy zero.

pub mod dynamics;
pub mod error;
pub mod model;
pub mod observables;
pub mod par;
pub mod perturbation;
pub mod scenario;
pub mod spectrum;

mod linalg;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Dense complex matrix used for every operator in the crate.
pub type CMatrix = nalgebra::DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<Complex64>;
