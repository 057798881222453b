//! Generative state-space model, simulation presets and dataset synthesis.
//!
//! Observation equation `y_t = B x_t + w_t` and MVAR state equation
//! `x_t = sum_p A_p x_{t-p} + v_t`, with Gaussian noises of standard
//! deviation `sigma_obs` and `sigma_state`.

mod event;
mod mesh;
mod presets;
mod simulate;
mod stability;

pub use event::{generate_event_related, EventDataset, EventProtocol};
pub use mesh::{expand_patches, SurfaceMesh};
pub use presets::{
    preset_bivariate, preset_event_related, preset_resting_state, preset_three_variate,
    three_variate_coefficients, uniform_lead_field, Preset,
};
pub use simulate::{observe, observe_at_snr, simulate_latent, LatentSimulation};
pub use stability::companion_spectral_radius;

use crate::error::{arg_err, dim_err, Result};
use ndarray::{Array2, ArrayView1, ArrayView2};

/// Lagged connectivity tensor `A_1..A_P`, each `N x N`.
#[derive(Debug, Clone, PartialEq)]
pub struct MvarCoefficients {
    lags: Vec<Array2<f64>>,
}

impl MvarCoefficients {
    /// Build from the lag matrices in increasing delay order.
    pub fn new(lags: Vec<Array2<f64>>) -> Result<Self> {
        if lags.is_empty() {
            return arg_err("MVAR order must be at least 1");
        }
        let n = lags[0].nrows();
        if n == 0 {
            return arg_err("MVAR coefficients need at least one source");
        }
        for (p, a) in lags.iter().enumerate() {
            if a.nrows() != n || a.ncols() != n {
                return dim_err(format!(
                    "lag {} has shape {}x{}, expected {n}x{n}",
                    p + 1,
                    a.nrows(),
                    a.ncols()
                ));
            }
            if a.iter().any(|v| !v.is_finite()) {
                return arg_err(format!("lag {} has non-finite entries", p + 1));
            }
        }
        Ok(Self { lags })
    }

    pub fn zeros(n_sources: usize, order: usize) -> Self {
        Self {
            lags: (0..order).map(|_| Array2::zeros((n_sources, n_sources))).collect(),
        }
    }

    pub fn n_sources(&self) -> usize {
        self.lags[0].nrows()
    }

    pub fn order(&self) -> usize {
        self.lags.len()
    }

    /// `A_p` for `p` in `1..=order`.
    pub fn lag(&self, p: usize) -> &Array2<f64> {
        &self.lags[p - 1]
    }

    pub fn lags(&self) -> &[Array2<f64>] {
        &self.lags
    }

    pub fn lags_mut(&mut self) -> &mut [Array2<f64>] {
        &mut self.lags
    }

    /// Horizontal concatenation `[A_1, .., A_P]` (`N x NP`).
    pub fn stacked(&self) -> Array2<f64> {
        let n = self.n_sources();
        let mut out = Array2::zeros((n, n * self.order()));
        for (p, a) in self.lags.iter().enumerate() {
            out.slice_mut(ndarray::s![.., p * n..(p + 1) * n]).assign(a);
        }
        out
    }

    /// Inverse of [`stacked`](Self::stacked).
    pub fn from_stacked(stacked: ArrayView2<f64>, order: usize) -> Result<Self> {
        let n = stacked.nrows();
        if order == 0 || stacked.ncols() != n * order {
            return dim_err(format!(
                "stacked coefficients {}x{} do not split into {order} square lags",
                stacked.nrows(),
                stacked.ncols()
            ));
        }
        let lags = (0..order)
            .map(|p| stacked.slice(ndarray::s![.., p * n..(p + 1) * n]).to_owned())
            .collect();
        Self::new(lags)
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.lags.iter().flat_map(|a| a.iter()).map(|v| v * v).sum()
    }

    pub fn l1_norm(&self) -> f64 {
        self.lags.iter().flat_map(|a| a.iter()).map(|v| v.abs()).sum()
    }

    /// `sum_p A_p x_{t-p}` for the series `x` (columns are time) at 0-based `t >= P`.
    pub(crate) fn predict(&self, x: ArrayView2<f64>, t: usize) -> ndarray::Array1<f64> {
        let mut acc = ndarray::Array1::zeros(self.n_sources());
        for (k, a) in self.lags.iter().enumerate() {
            acc += &a.dot(&x.column(t - k - 1));
        }
        acc
    }

    /// Keep only the sources in `keep` (rows and columns), in the given order.
    pub fn restrict(&self, keep: &[usize]) -> Result<Self> {
        let n = self.n_sources();
        if let Some(&bad) = keep.iter().find(|&&i| i >= n) {
            return arg_err(format!("source index {bad} out of range for N={n}"));
        }
        let lags = self
            .lags
            .iter()
            .map(|a| Array2::from_shape_fn((keep.len(), keep.len()), |(i, j)| a[[keep[i], keep[j]]]))
            .collect();
        Self::new(lags)
    }
}

/// Mixing (lead field) matrix `B`, `M x N`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeadField(Array2<f64>);

impl LeadField {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return arg_err("lead field must be at least 1x1");
        }
        if values.iter().any(|v| !v.is_finite()) {
            return arg_err("lead field has non-finite entries");
        }
        Ok(Self(values))
    }

    pub fn n_sensors(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_sources(&self) -> usize {
        self.0.ncols()
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    /// Scale every column to unit Euclidean norm (zero columns are left alone).
    pub fn normalized_columns(&self) -> Self {
        let mut b = self.0.clone();
        for mut col in b.columns_mut() {
            let norm = col.dot(&col).sqrt();
            if norm > 0.0 {
                col /= norm;
            }
        }
        Self(b)
    }
}

/// A `rows x T x E` tensor stored as `E` matrices of shape `rows x T`.
///
/// Used for both latent (`N` rows) and observed (`M` rows) series.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    epochs: Vec<Array2<f64>>,
    sampling_rate: Option<f64>,
}

pub type LatentSeries = Series;
pub type ObservedSeries = Series;

impl Series {
    pub fn new(epochs: Vec<Array2<f64>>) -> Result<Self> {
        let Some(first) = epochs.first() else {
            return arg_err("series needs at least one epoch");
        };
        let dim = first.dim();
        for (e, m) in epochs.iter().enumerate() {
            if m.dim() != dim {
                return dim_err(format!(
                    "epoch {e} has shape {:?}, expected {:?}",
                    m.dim(),
                    dim
                ));
            }
            if m.iter().any(|v| !v.is_finite()) {
                return arg_err(format!("epoch {e} has non-finite entries"));
            }
        }
        Ok(Self {
            epochs,
            sampling_rate: None,
        })
    }

    pub fn single(values: Array2<f64>) -> Result<Self> {
        Self::new(vec![values])
    }

    pub fn zeros(rows: usize, samples: usize, epochs: usize) -> Self {
        Self {
            epochs: (0..epochs.max(1)).map(|_| Array2::zeros((rows, samples))).collect(),
            sampling_rate: None,
        }
    }

    pub fn with_sampling_rate(mut self, hz: f64) -> Self {
        self.sampling_rate = Some(hz);
        self
    }

    pub fn sampling_rate(&self) -> Option<f64> {
        self.sampling_rate
    }

    pub fn n_rows(&self) -> usize {
        self.epochs[0].nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.epochs[0].ncols()
    }

    pub fn n_epochs(&self) -> usize {
        self.epochs.len()
    }

    pub fn epoch(&self, e: usize) -> &Array2<f64> {
        &self.epochs[e]
    }

    pub fn epochs(&self) -> &[Array2<f64>] {
        &self.epochs
    }

    pub fn epochs_mut(&mut self) -> &mut [Array2<f64>] {
        &mut self.epochs
    }

    pub fn into_epochs(self) -> Vec<Array2<f64>> {
        self.epochs
    }

    /// Time series of one row in one epoch.
    pub fn row(&self, e: usize, i: usize) -> ArrayView1<'_, f64> {
        self.epochs[e].row(i)
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.epochs.iter().flat_map(|m| m.iter()).map(|v| v * v).sum()
    }

    /// Average over epochs (`rows x T`).
    pub fn epoch_mean(&self) -> Array2<f64> {
        let mut acc = Array2::zeros(self.epochs[0].dim());
        for m in &self.epochs {
            acc += m;
        }
        acc / self.epochs.len() as f64
    }
}

/// Standard deviations of the state and observation noises.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub sigma_state: f64,
    pub sigma_obs: f64,
}

impl NoiseSpec {
    pub fn new(sigma_state: f64, sigma_obs: f64) -> Result<Self> {
        if !(sigma_state > 0.0 && sigma_state.is_finite()) {
            return arg_err(format!("sigma_state must be positive, got {sigma_state}"));
        }
        if !(sigma_obs >= 0.0 && sigma_obs.is_finite()) {
            return arg_err(format!("sigma_obs must be nonnegative, got {sigma_obs}"));
        }
        Ok(Self {
            sigma_state,
            sigma_obs,
        })
    }
}
