//! Penalized state-space estimation of latent source activity and lagged
//! MVAR connectivity from sensor recordings.
//!
//! The model is `y_t = B x_t + w_t` with `x_t = sum_p A_p x_{t-p} + v_t`.
//! [`solvers`] jointly estimates `X` and `A`, [`cv`] picks regularization
//! weights by blocked K-fold cross-validation and [`metrics`] scores the
//! result against ground truth.

pub mod cv;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod solvers;
pub mod rng;

pub use error::{MpssError, Result};
pub use model::{LatentSeries, LeadField, MvarCoefficients, NoiseSpec, ObservedSeries, Series};
