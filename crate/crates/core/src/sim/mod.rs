//! Exact pathwise simulation of self-interacting jump processes.
//!
//! Two samplers produce the same law:
//!
//! - [`simulate_thinning`] proposes candidate jumps at the uniform bound
//!   `c_Q` per edge and accepts a candidate `x -> y` at time `t` with
//!   probability `Q_xy(L_t) / c_Q`. It only needs `Q` to be bounded.
//! - [`simulate_exact_affine`] uses that for affine fields the occupation
//!   measure between jumps, `L_t = (s L_s + (t - s) delta_x) / t`, makes the
//!   total hazard `q1 + s (q0 - q1) / t` explicit, and inverts its integral.
//!
//! Trajectories store jump events only; occupation, flux and current are
//! recomputed exactly on demand.

mod batch;
mod sampler;
mod trajectory;

pub use batch::{batch_simulate, BatchResult, PathRecord};
pub use sampler::{
    simulate, simulate_exact_affine, simulate_exact_affine_with, simulate_thinning, simulate_thinning_with, Sampler,
};
pub use trajectory::{JumpEvent, OccupationAnchor, Trajectory};

use thiserror::Error;

use crate::model::ModelError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("initial state {0} is outside the state space")]
    InvalidState(usize),
    #[error("horizon must be positive and finite, got {0}")]
    InvalidHorizon(f64),
    #[error("query time {t} outside (0, {horizon}]")]
    OutOfRange { t: f64, horizon: f64 },
    #[error("rate field is not affine")]
    NotAffine,
    #[error("rate {rate} on edge ({from}, {to}) exceeds the declared bound {bound}")]
    BoundExceeded { from: usize, to: usize, rate: f64, bound: f64 },
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}
