//! Discretized dynamical rate function and its constrained minimization.
//!
//! A [`ControlPath`] is a pair `(rho, H)` of occupation vectors and jump-rate
//! matrices, piecewise constant on a [`TimeGrid`] over `[0, T_h]` with one
//! constant tail piece on `[T_h, inf)`. Its discounted cost [`jtilde`] is
//! minimized under the constraints that `rho_s` is stationary for `H_s`,
//! `int e^{-s} rho_s ds = gamma` and `int e^{-s} rho_s H_s ds = flux`.
//! The relaxed-control form of the same cost is [`jtheta`].
//!
//! Minimization uses an augmented Lagrangian with L-BFGS inner solves from
//! several starts; returned values are always `jtilde` of the returned path,
//! so a converged value is an upper bound on the discrete infimum up to the
//! residual slack.

mod export;
mod grid;
mod lbfgs;
mod objective;
mod path;
mod solver;
mod theta;

use thiserror::Error;

use crate::ldp::LdpError;
use crate::model::ModelError;

pub use export::{write_path_csv, write_result_toml, ExportError};
pub use grid::TimeGrid;
pub use path::{jtilde, jtilde_with, m_evolution_defect, m_from_rho, residuals, ControlPath, MEval, Residuals};
pub use solver::{current_rate, occupation_rate, solve_rate, RateResult, SolveStatus, SolverOptions};
pub use theta::{convert_to_theta, convert_to_theta_with, jtheta, ThetaPath};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VarSolveError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Ldp(#[from] LdpError),
}
