//! INS/DVL navigation with DVL-derived acceleration updates.
//!
//! The crate is organized bottom-up:
//!
//! - [`frames`]: NED conventions, rotations, gravity and Earth-rate models.
//! - [`dvl`]: beam geometry, beam error model, least-squares velocity and
//!   sliding-window acceleration estimators.
//! - [`ins`]: strapdown velocity/attitude mechanization.
//! - [`ekf`]: 12-state error-state EKF with velocity and acceleration updates.
//! - [`observability`]: numeric observability Gramian and the analytic
//!   unobservable subspace.
//! - [`sim`]: truth trajectories, sensor synthesis and the Monte Carlo harness.
//! - [`cli`]: experiment configuration, CSV output and comparison reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dvl;
pub mod ekf;
pub mod error;
pub mod frames;
pub mod ins;
pub mod observability;
pub mod sim;

pub use error::{Error, Result};
pub use frames::{GeoContext, Mat3, Vec3};
