//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not hermitian (max |A - A^dag| = {residue:.3e}, tol = {tol:.3e})")]
    NotHermitian { residue: f64, tol: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue = {min_eig:.3e}, tol = {tol:.3e})")]
    NotPsd { min_eig: f64, tol: f64 },

    #[error("state validation failed: {property} violated (residue = {residue:.3e})")]
    StateValidation { property: String, residue: f64 },

    #[error("operator size {rows} rows exceeds the configured size cap {cap}")]
    SizeCap { rows: usize, cap: usize },

    #[error("degenerate observable: a_plus = {a_plus:.3e} <= 0")]
    DegenerateObservable { a_plus: f64 },

    #[error("V0 and V1 do not commute (residue = {residue:.3e})")]
    NonCommutingPovm { residue: f64 },

    #[error("visibility {v} outside [-1, 1] beyond tolerance")]
    InvalidVisibility { v: f64 },

    #[error("probability {p0} outside [0, 1] beyond tolerance")]
    InvalidProbability { p0: f64 },

    #[error("spectrum reconstruction failed: root {root} has |Im| beyond tolerance {tol:.3e}")]
    ReconstructionFailure { root: num_complex::Complex64, tol: f64 },

    #[error("invalid gamma moment eigenvalue {gamma:.3e} < -1e-6")]
    InvalidGamma { gamma: f64 },

    #[error("interval [{c1}, {c2}] invalid or outside the observable spectrum")]
    InvalidInterval { c1: f64, c2: f64 },

    #[error("map is not hermiticity-preserving; the positive-map criterion does not apply")]
    CriterionMisuse,

    #[error("unknown map or criterion name: {0}")]
    UnknownName(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
