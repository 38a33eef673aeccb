//! State space, probability vectors, generator matrices and rate fields.
//!
//! States are 0-based everywhere inside the library. Configuration files,
//! CSV exports and CLI output use 1-based labels; the conversion happens in
//! [`crate::config`] and the exporters, nowhere else.

mod field;
mod generator;
mod simplex;
mod space;

pub use field::{CustomRates, RateFamily, RateField};
pub use generator::{validate_generator, GeneratorMatrix};
pub use simplex::{l1_distance, SimplexVector, SIMPLEX_TOL};
pub use space::{CurrentVector, FluxVector, StateSpace};

use thiserror::Error;

/// Errors raised while constructing or evaluating model objects.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("state space needs at least two states, got {0}")]
    TooFewStates(usize),
    #[error("matrix is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("negative off-diagonal entry {value} at ({row}, {col})")]
    NegativeOffDiagonal { row: usize, col: usize, value: f64 },
    #[error("row {row} sums to {sum}, expected 0")]
    RowSumNonzero { row: usize, sum: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("vector is not a probability vector: {0}")]
    NotInSimplex(String),
    #[error("state {0} is outside the state space")]
    InvalidState(usize),
    #[error("negative rate {value} on edge ({from}, {to})")]
    NegativeRate { from: usize, to: usize, value: f64 },
    #[error("declared support does not match the field: {0}")]
    SupportMismatch(String),
    #[error("congestion parameters violate the margin on edge ({from}, {to}): alpha + beta = {sum}")]
    CongestionMargin { from: usize, to: usize, sum: f64 },
    #[error("invalid field parameter: {0}")]
    InvalidParameter(String),
    #[error("rate field has no affine vertex representation")]
    NotAffine,
    #[error("flux entry {value} on edge {edge} is negative or non-finite")]
    NegativeFlux { edge: usize, value: f64 },
    #[error("current is not antisymmetric on edge ({from}, {to})")]
    NotAntisymmetric { from: usize, to: usize },
}
