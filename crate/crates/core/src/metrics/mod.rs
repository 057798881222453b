//! Accuracy statistics against simulated ground truth.

mod error;
mod montecarlo;
mod roc;
mod saliency;

pub use error::{rrse, rse, rse_per_source};
pub use montecarlo::{awroc_mc_harness, McConfig, McReport, McScenario, Summary};
pub use roc::{med, roc, roc_at_thresholds, weighted_roc, xi_weight, RocCurve};
pub use saliency::{source_energy, source_energy_series, spectral_energy_selection, spectral_scores};

use crate::error::{arg_err, dim_err, Result};
use crate::model::{LatentSeries, MvarCoefficients};
use ndarray::Array2;

/// Simulated truth used for scoring.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub latent: LatentSeries,
    pub coefficients: MvarCoefficients,
    /// Indices of the truly active sources.
    pub active_set: Vec<usize>,
    /// `N x 3` source positions in mm; needed for the weighted ROC.
    pub source_coords: Option<Array2<f64>>,
}

impl GroundTruth {
    pub fn new(
        latent: LatentSeries,
        coefficients: MvarCoefficients,
        active_set: Vec<usize>,
        source_coords: Option<Array2<f64>>,
    ) -> Result<Self> {
        let n = latent.n_rows();
        if let Some(&i) = active_set.iter().find(|&&i| i >= n) {
            return arg_err(format!("active index {i} out of range for {n} sources"));
        }
        if let Some(c) = &source_coords {
            if c.dim() != (n, 3) {
                return dim_err(format!("source coordinates must be {n} x 3, got {:?}", c.dim()));
            }
        }
        Ok(Self {
            latent,
            coefficients,
            active_set,
            source_coords,
        })
    }

    /// False-positive weights from the distance to the nearest active source.
    pub fn xi(&self) -> Result<Vec<f64>> {
        let Some(coords) = &self.source_coords else {
            return arg_err("source coordinates are required for distance weights");
        };
        let truth: Vec<[f64; 3]> = self
            .active_set
            .iter()
            .map(|&i| [coords[[i, 0]], coords[[i, 1]], coords[[i, 2]]])
            .collect();
        xi_weight(&med(coords.view(), &truth)?)
    }
}
