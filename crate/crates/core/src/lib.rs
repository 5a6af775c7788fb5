//! Spectral analysis of star-even operator pencils through the Krein matrix.
//!
//! The crate is organised bottom-up:
//!
//! * [`pencil`] holds the pencil type, the polynomial eigensolver and Krein indices.
//! * [`krein`] builds Krein matrices, traces Krein eigenvalues and finds their zeros and poles.
//! * [`hki`] evaluates Hamiltonian-Krein index formulas and checks them against spectra.
//! * [`kdv5`] and [`bridge`] are the two applications: small periodic waves of a
//!   fifth-order KdV equation and multi-pulses of the suspension bridge equation.

pub mod bridge;
pub mod error;
pub mod hki;
pub mod kdv5;
pub mod krein;
pub mod linalg;
pub mod pencil;
pub mod tol;

pub use error::{Error, Result};
pub use faer::c64;
pub use linalg::CMat;
pub use pencil::{
    krein_index_of, polynomial_spectrum, validate_pencil, Census, PolyEigenvalue,
    SpectrumReport, StarEvenPencil,
};
pub use tol::Tolerances;
