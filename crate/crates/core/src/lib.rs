//! Exact simulation and large-deviation analysis of self-interacting Markov
//! jump processes on a finite state space.
//!
//! A self-interacting jump process jumps from `x` to `y` at rate
//! `Q_xy(L_t)`, where `L_t` is its own occupation measure up to time `t`.
//! The crate provides
//!
//! - [`model`]: probability vectors, generators and the rate-field families
//!   (constant, affine, autochemotaxis, congestion, catalytic);
//! - [`sim`]: exact path simulation by Poisson thinning and by inversion of
//!   the closed-form hazard for affine fields, with occupation, flux and
//!   current extraction;
//! - [`ldp`]: the Poisson cost, the level-2.5 Donsker–Varadhan rate,
//!   stationary distributions and the self-consistent fixed point;
//! - [`varsolve`]: discretized discounted control paths and a penalized
//!   multistart solver for the dynamical rate function and its
//!   contractions to occupation and current;
//! - [`mc`]: Monte Carlo decay-rate estimation for ball targets;
//! - [`config`] and [`cli`]: the TOML run configuration and the command
//!   front end used by the `sijump` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod config;
pub mod ldp;
pub mod mc;
pub mod model;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod varsolve;

pub use model::{
    l1_distance, validate_generator, CurrentVector, FluxVector, GeneratorMatrix, ModelError, RateFamily, RateField,
    SimplexVector, StateSpace,
};
