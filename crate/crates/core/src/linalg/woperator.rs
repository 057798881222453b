use crate::error::{dim_err, Result};
use crate::model::MvarCoefficients;
use ndarray::{s, Array1, ArrayView1, ArrayView2};

/// The block operator `W` acting on stacked state vectors.
///
/// Row block `t` of `W vec(X)` is `sum_p A_p x_{t-p}` for `t > P` and zero for
/// `t <= P` (1-based). Only the `P` coefficient blocks are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct WOperator {
    coefficients: MvarCoefficients,
    n_samples: usize,
}

/// Build `W` for a series of `n_samples` time points.
pub fn build_w(coefficients: &MvarCoefficients, n_samples: usize) -> Result<WOperator> {
    let p = coefficients.order();
    if n_samples <= p {
        return dim_err(format!(
            "need more samples than the model order (T={n_samples}, P={p})"
        ));
    }
    Ok(WOperator {
        coefficients: coefficients.clone(),
        n_samples,
    })
}

impl WOperator {
    pub fn n_sources(&self) -> usize {
        self.coefficients.n_sources()
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn lag_order(&self) -> usize {
        self.coefficients.order()
    }

    pub fn coefficients(&self) -> &MvarCoefficients {
        &self.coefficients
    }

    /// Length of the stacked vectors this operator accepts.
    pub fn dim(&self) -> usize {
        self.n_sources() * self.n_samples
    }

    /// Number of `f64` values held by the operator.
    pub fn storage_len(&self) -> usize {
        self.lag_order() * self.n_sources() * self.n_sources()
    }

    /// `W v` for a stacked vector `v`.
    pub fn apply(&self, v: ArrayView1<f64>) -> Result<Array1<f64>> {
        if v.len() != self.dim() {
            return dim_err(format!(
                "stacked vector has length {}, operator expects {}",
                v.len(),
                self.dim()
            ));
        }
        let n = self.n_sources();
        let p = self.lag_order();
        let mut out = Array1::zeros(v.len());
        for t in p..self.n_samples {
            let mut block = out.slice_mut(s![t * n..(t + 1) * n]);
            for (k, a) in self.coefficients.lags().iter().enumerate() {
                let src = v.slice(s![(t - k - 1) * n..(t - k) * n]);
                block += &a.dot(&src);
            }
        }
        Ok(out)
    }
}

/// `(I - W) vec(X)` for a latent series `X` (`N x T`).
///
/// Its squared norm is `sum_{t>P} ||x_t - sum_p A_p x_{t-p}||^2 + sum_{t<=P} ||x_t||^2`.
pub fn residual_autoregressive(x: ArrayView2<f64>, w: &WOperator) -> Result<Array1<f64>> {
    if x.nrows() != w.n_sources() || x.ncols() != w.n_samples() {
        return dim_err(format!(
            "series is {}x{}, operator expects {}x{}",
            x.nrows(),
            x.ncols(),
            w.n_sources(),
            w.n_samples()
        ));
    }
    let v = super::vec_series(x);
    let wv = w.apply(v.view())?;
    Ok(v - wv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vec_series;
    use ndarray::{array, Array2};

    #[test]
    fn bivariate_pattern() {
        let a = MvarCoefficients::new(vec![array![[-0.5, 0.0], [0.7, -0.5]]]).unwrap();
        let w = build_w(&a, 3).unwrap();
        let x = array![[1.0, 2.0, 3.0], [-1.0, 0.5, 4.0]];
        let out = w.apply(vec_series(x.view()).view()).unwrap();
        let a1 = a.lag(1);
        let e1 = a1.dot(&x.column(0));
        let e2 = a1.dot(&x.column(1));
        assert_eq!(out.slice(s![0..2]).to_vec(), vec![0.0, 0.0]);
        assert_eq!(out.slice(s![2..4]).to_vec(), e1.to_vec());
        assert_eq!(out.slice(s![4..6]).to_vec(), e2.to_vec());
    }

    #[test]
    fn zero_operator() {
        let a = MvarCoefficients::zeros(3, 2);
        let w = build_w(&a, 5).unwrap();
        let v = Array1::from_iter((0..15).map(|i| i as f64 - 3.0));
        assert!(w.apply(v.view()).unwrap().iter().all(|&x| x == 0.0));
        let x = Array2::from_shape_fn((3, 5), |(i, j)| (i * 5 + j) as f64);
        let r = residual_autoregressive(x.view(), &w).unwrap();
        assert_eq!(r, vec_series(x.view()));
    }

    #[test]
    fn scalar_two_lag_expansion() {
        let a = MvarCoefficients::new(vec![array![[0.5]], array![[0.25]]]).unwrap();
        let w = build_w(&a, 4).unwrap();
        let out = w.apply(Array1::ones(4).view()).unwrap();
        assert_eq!(out.to_vec(), vec![0.0, 0.0, 0.75, 0.75]);
    }

    #[test]
    fn rejects_short_series_and_wrong_lengths() {
        let a = MvarCoefficients::zeros(2, 3);
        assert!(build_w(&a, 3).is_err());
        let w = build_w(&a, 4).unwrap();
        assert!(w.apply(Array1::zeros(7).view()).is_err());
        assert!(residual_autoregressive(Array2::zeros((2, 5)).view(), &w).is_err());
        assert_eq!(w.storage_len(), 12);
    }

    #[test]
    fn noise_free_recursion_has_zero_tail_residual() {
        let a = MvarCoefficients::new(vec![array![[0.3, 0.1], [0.0, -0.4]], array![[0.1, 0.0], [0.2, 0.1]]])
            .unwrap();
        let t = 8;
        let mut x = Array2::zeros((2, t));
        x.column_mut(0).assign(&array![1.0, -2.0]);
        x.column_mut(1).assign(&array![0.5, 0.25]);
        for k in 2..t {
            let pred = a.predict(x.view(), k);
            x.column_mut(k).assign(&pred);
        }
        let w = build_w(&a, t).unwrap();
        let r = residual_autoregressive(x.view(), &w).unwrap();
        assert!(r.slice(s![4..]).iter().all(|v| v.abs() < 1e-15));
    }
}
