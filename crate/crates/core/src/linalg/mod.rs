//! Block-banded representations and solves for the autoregressive operator
//! `(I - W)` and the state system of the alternating solver.
//!
//! State vectors are stacked in forward time order: `vec(X) = (x_1, .., x_T)`,
//! so `A_p` sits on the `p`-th block sub-diagonal of `W`.

pub(crate) mod dense;
mod state_system;
mod woperator;

pub use state_system::{assemble_state_system, StateSystem};
pub use woperator::{build_w, residual_autoregressive, WOperator};

use ndarray::{Array1, Array2, ArrayView2};

/// Stack the columns of `x` (`N x T`) into `vec(X)` of length `NT`.
pub fn vec_series(x: ArrayView2<f64>) -> Array1<f64> {
    let (n, t) = x.dim();
    let mut out = Array1::zeros(n * t);
    for (k, col) in x.columns().into_iter().enumerate() {
        out.slice_mut(ndarray::s![k * n..(k + 1) * n]).assign(&col);
    }
    out
}

/// Inverse of [`vec_series`].
pub fn unvec_series(v: ndarray::ArrayView1<f64>, n: usize) -> Array2<f64> {
    let t = v.len() / n;
    Array2::from_shape_fn((n, t), |(i, k)| v[k * n + i])
}
