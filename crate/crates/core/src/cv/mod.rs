//! Blocked K-fold cross-validation with imputation.
//!
//! Each fold hides a set of time samples from the data term (the mask
//! `L_t`), fits the remaining samples and scores how well `B x_t` predicts
//! the hidden observations.

mod partition;
mod search;

pub use partition::{make_partition, CviPartition};
pub use search::{best_index, cross_validate, grid_search, log_spaced, prediction_error, CvConfig, CvResult, SearchGrid};
