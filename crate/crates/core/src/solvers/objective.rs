use super::Hyperparameters;
use crate::error::{dim_err, Result};
use crate::model::{LatentSeries, LeadField, MvarCoefficients, ObservedSeries};
use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2, ArrayView2, Zip};

/// Partial derivatives of the objective.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    /// One `N x T` block per epoch.
    pub x: Vec<Array2<f64>>,
    /// One `N x N` block per lag.
    pub a: Vec<Array2<f64>>,
}

impl Gradients {
    pub fn norm_sq(&self) -> f64 {
        self.x
            .iter()
            .chain(self.a.iter())
            .flat_map(|m| m.iter())
            .map(|v| v * v)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }
}

/// Autoregressive residuals `(I - W) vec(X)` in matrix form: column `t` is
/// `x_t - sum_p A_p x_{t-p}` for `t >= P` and `x_t` for the first `P` columns.
pub fn ar_residuals(x: ArrayView2<f64>, a: &MvarCoefficients) -> Array2<f64> {
    let p = a.order();
    let t = x.ncols();
    let mut r = x.to_owned();
    if t > p {
        let mut tail = r.slice_mut(s![.., p..]);
        for (k, lag) in a.lags().iter().enumerate() {
            let shifted = x.slice(s![.., p - k - 1..t - k - 1]);
            general_mat_mul(-1.0, lag, &shifted, 1.0, &mut tail);
        }
    }
    r
}

fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn check_dims(
    x: &LatentSeries,
    a: &MvarCoefficients,
    y: &ObservedSeries,
    b: &LeadField,
    mask: &[bool],
) -> Result<()> {
    let ok = x.n_rows() == a.n_sources()
        && b.n_sources() == x.n_rows()
        && b.n_sensors() == y.n_rows()
        && x.n_samples() == y.n_samples()
        && x.n_epochs() == y.n_epochs()
        && mask.len() == x.n_samples()
        && x.n_samples() > a.order();
    if !ok {
        return dim_err(format!(
            "inconsistent shapes: X {}x{}x{}, A {}x{}x{}, Y {}x{}x{}, B {}x{}, mask {}",
            x.n_rows(),
            x.n_samples(),
            x.n_epochs(),
            a.n_sources(),
            a.n_sources(),
            a.order(),
            y.n_rows(),
            y.n_samples(),
            y.n_epochs(),
            b.n_sensors(),
            b.n_sources(),
            mask.len()
        ));
    }
    Ok(())
}

/// Objective value. With an all-true mask and `l2_x = 0` this is the
/// single-epoch penalized objective; held-out samples drop out of the data
/// term only.
pub fn objective(
    x: &LatentSeries,
    a: &MvarCoefficients,
    y: &ObservedSeries,
    b: &LeadField,
    hp: &Hyperparameters,
    mask: &[bool],
) -> Result<f64> {
    check_dims(x, a, y, b, mask)?;
    Ok(objective_raw(x.epochs(), a, y.epochs(), b.matrix(), hp, mask))
}

/// Objective and gradients of the smooth part plus L1 subgradients with
/// `sgn(0) = 0`.
pub fn ssgd_gradients(
    x: &LatentSeries,
    a: &MvarCoefficients,
    y: &ObservedSeries,
    b: &LeadField,
    hp: &Hyperparameters,
    mask: &[bool],
) -> Result<Gradients> {
    check_dims(x, a, y, b, mask)?;
    Ok(value_and_gradients(x.epochs(), a, y.epochs(), b.matrix(), hp, mask).1)
}

fn data_residual(xe: &Array2<f64>, ye: &Array2<f64>, b: &Array2<f64>, mask: &[bool]) -> Array2<f64> {
    let mut d = ye.clone();
    general_mat_mul(-1.0, b, xe, 1.0, &mut d);
    for (t, &keep) in mask.iter().enumerate() {
        if !keep {
            d.column_mut(t).fill(0.0);
        }
    }
    d
}

fn penalty_terms(xs: &[Array2<f64>], a: &MvarCoefficients, hp: &Hyperparameters) -> f64 {
    let mut total = hp.l2_a * a.frobenius_sq() + 2.0 * hp.l1_a * a.l1_norm();
    if hp.l2_x > 0.0 || hp.l1_x > 0.0 {
        for xe in xs {
            for &v in xe.iter() {
                total += hp.l2_x * v * v + 2.0 * hp.l1_x * v.abs();
            }
        }
    }
    total
}

pub(crate) fn objective_raw(
    xs: &[Array2<f64>],
    a: &MvarCoefficients,
    ys: &[Array2<f64>],
    b: &Array2<f64>,
    hp: &Hyperparameters,
    mask: &[bool],
) -> f64 {
    let t = xs[0].ncols();
    let scale = 1.0 / (2.0 * (t * xs.len()) as f64);
    let mut total = penalty_terms(xs, a, hp);
    for (xe, ye) in xs.iter().zip(ys) {
        let d = data_residual(xe, ye, b, mask);
        total += d.iter().map(|v| v * v).sum::<f64>();
        if hp.lambda > 0.0 {
            let r = ar_residuals(xe.view(), a);
            total += hp.lambda * r.iter().map(|v| v * v).sum::<f64>();
        }
    }
    scale * total
}

pub(crate) fn value_and_gradients(
    xs: &[Array2<f64>],
    a: &MvarCoefficients,
    ys: &[Array2<f64>],
    b: &Array2<f64>,
    hp: &Hyperparameters,
    mask: &[bool],
) -> (f64, Gradients) {
    let n = a.n_sources();
    let p = a.order();
    let t = xs[0].ncols();
    let inv = 1.0 / (t * xs.len()) as f64;
    let mut total = penalty_terms(xs, a, hp);
    let mut grad_a: Vec<Array2<f64>> = vec![Array2::zeros((n, n)); p];
    let mut grad_x = Vec::with_capacity(xs.len());
    for (xe, ye) in xs.iter().zip(ys) {
        let d = data_residual(xe, ye, b, mask);
        total += d.iter().map(|v| v * v).sum::<f64>();
        let mut g = b.t().dot(&d);
        g.mapv_inplace(|v| -v);
        let r = ar_residuals(xe.view(), a);
        total += hp.lambda * r.iter().map(|v| v * v).sum::<f64>();
        // lambda (I - W)^T r
        g.scaled_add(hp.lambda, &r);
        let r_tail = r.slice(s![.., p..]);
        for (k, lag) in a.lags().iter().enumerate() {
            let mut head = g.slice_mut(s![.., p - k - 1..t - k - 1]);
            general_mat_mul(-hp.lambda, &lag.t(), &r_tail, 1.0, &mut head);
            let shifted = xe.slice(s![.., p - k - 1..t - k - 1]);
            general_mat_mul(-hp.lambda, &r_tail, &shifted.t(), 1.0, &mut grad_a[k]);
        }
        if hp.l2_x > 0.0 || hp.l1_x > 0.0 {
            Zip::from(&mut g)
                .and(xe)
                .for_each(|gv, &xv| *gv += hp.l2_x * xv + hp.l1_x * sgn(xv));
        }
        g *= inv;
        grad_x.push(g);
    }
    for (ga, lag) in grad_a.iter_mut().zip(a.lags()) {
        Zip::from(&mut *ga)
            .and(lag)
            .for_each(|gv, &av| *gv += hp.l2_a * av + hp.l1_a * sgn(av));
        *ga *= inv;
    }
    (
        0.5 * inv * total,
        Gradients {
            x: grad_x,
            a: grad_a,
        },
    )
}
