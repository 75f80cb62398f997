//! Two- and threepeakon solutions of the Camassa–Holm equation, treated as
//! geodesics of the peakon metric `g = E(q)^{-1}` with `E_ij = e^{-|q_i - q_j|}`.
//!
//! The crate integrates the Hamiltonian flow with collision detection, evaluates
//! the first integrals and the curvature of the metric in closed form, checks
//! both against independent numerical oracles, and implements the sign criteria
//! that predict whether peaks collide.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod collision;
pub mod error;
pub mod geometry;
pub mod integrator;
pub mod invariants;
pub mod io;
pub mod matrix;
pub mod model;
pub mod par;
pub mod scan;
pub mod verify;

pub use error::{PeakonError, Result};
pub use integrator::{exp_map, integrate, CollisionEvent, IntegratorOptions, Sample, Status, Trajectory};
pub use invariants::{DriftReport, InvariantVector};
pub use matrix::SmallMatrix;
pub use model::{Covector, PeakonState, TangentVector};
