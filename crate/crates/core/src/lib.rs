//! Quantum Cramér-Rao bounds for calibrating two nearly orthogonal Sagnac
//! interferometers with a two-orientation (multi-position) test.
//!
//! The pipeline is:
//!
//! 1. [`model`]: accumulated phases of the four commuting number-difference
//!    observables, the coupling matrix `M` (Jacobian of those phases with
//!    respect to `(phi_y, phi_z, theta, delta)`), and the probe covariance.
//! 2. [`fisher`]: quantum Fisher information `4 M cov(n) M^T` and its scaled
//!    inverse, the Cramér-Rao bound.
//! 3. [`closed_form`]: the long-hand expressions for the bound diagonals, kept
//!    as a cross-check against the matrix route.
//! 4. [`optimize`]: choice of the inter-interferometer correlation coefficient
//!    `lambda`, parameter sweeps and phase-averaged optima.
//! 5. [`calibration`]: parameter counting for the three-axis generalisation.
//!
//! All angles and phases are in radians. Every matrix or vector indexed by
//! parameter uses the order `(phi_y, phi_z, theta, delta)`; every one indexed
//! by observable uses `(n_y, n_z, n_y', n_z')`.

pub mod calibration;
pub mod cli;
pub mod closed_form;
pub mod config;
pub mod error;
pub mod fisher;
pub mod linalg;
pub mod model;
pub mod optimize;

pub use error::{Error, Result};
pub use fisher::{crb_matrix, qfi_matrix, BoundMatrix, FisherMatrix};
pub use model::{GyroParams, Param, ProbeStats};
pub use optimize::{optimal_lambda, Objective, OptimizationResult};
