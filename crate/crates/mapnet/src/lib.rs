//! Measurement networks for moment-based spectrum estimation of linear
//! hermiticity-preserving maps applied to quantum states, with
//! entanglement-detection pipelines built on top.
//!
//! The flow: a map Theta and a state rho define moments
//! alpha_k = Tr[Theta(rho)^k], each measurable as the mean of a collective
//! observable on rho^{⊗k}. The observable is realized as a two-outcome POVM
//! dilated to a single-control-qubit network; the control visibility yields
//! the mean. Newton-Girard plus companion-matrix roots turn the moments back
//! into the spectrum of Theta(rho), which drives positive-map and
//! linear-contraction entanglement criteria.

pub mod detect;
pub mod error;
pub mod io;
pub mod linmaps;
pub mod network;
pub mod observables;
pub mod spectra;
pub mod tensor;
pub mod testkit;

pub use detect::{
    bell_state, isotropic_state, random_state, run_contraction_test, run_positive_map_test,
    werner_state, DetectionReport, Mode, Verdict,
};
pub use error::{Error, Result};
pub use linmaps::{
    builtin_map, extend_with_identity, identity_map, pair_product_map, realignment_map,
    reduction_map, transpose_map, LinearMap,
};
pub use network::{binary_povm, dilation_unitary, BinaryPovm, DilationUnitary};
pub use observables::{collective_observable, moment_exact, MomentVector, Observable};
pub use spectra::{newton_girard, spectrum_from_moments, Spectrum};
pub use tensor::{CMatrix, DensityMatrix};
