use crate::error::{arg_err, dim_err, Result};
use crate::model::Series;
use ndarray::ArrayView1;

/// Relative squared error in percent,
/// `100 sum (x_t - x_hat_t)^2 / sum (x_t - mean(x))^2`.
pub fn rse(x_hat: ArrayView1<f64>, x: ArrayView1<f64>) -> Result<f64> {
    if x_hat.len() != x.len() {
        return dim_err(format!("estimate has {} samples, truth has {}", x_hat.len(), x.len()));
    }
    if x.len() < 2 {
        return arg_err("rse needs at least two samples");
    }
    let mean = x.mean().expect("nonempty");
    let base: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    if base == 0.0 {
        return arg_err("rse is undefined for a constant ground truth");
    }
    let err: f64 = x.iter().zip(x_hat.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(100.0 * err / base)
}

/// Per-source RSE with all epochs concatenated in time.
pub fn rse_per_source(x_hat: &Series, x: &Series) -> Result<Vec<f64>> {
    same_shape(x_hat, x)?;
    (0..x.n_rows())
        .map(|i| {
            let cat = |s: &Series| ndarray::Array1::from_iter(s.epochs().iter().flat_map(|e| e.row(i).to_vec()));
            rse(cat(x_hat).view(), cat(x).view())
        })
        .collect()
}

fn same_shape(a: &Series, b: &Series) -> Result<()> {
    if a.n_rows() != b.n_rows() || a.n_samples() != b.n_samples() || a.n_epochs() != b.n_epochs() {
        return dim_err(format!(
            "shape {}x{}x{} does not match {}x{}x{}",
            a.n_rows(),
            a.n_samples(),
            a.n_epochs(),
            b.n_rows(),
            b.n_samples(),
            b.n_epochs()
        ));
    }
    Ok(())
}

fn max_abs(s: &Series) -> f64 {
    s.epochs().iter().flat_map(|e| e.iter()).fold(0.0, |m: f64, v| m.max(v.abs()))
}

/// Relative root squared error after dividing each tensor by its own
/// largest-magnitude entry. Works for single-epoch (`N x T`) and trial
/// (`N x T x E`) series alike.
pub fn rrse(x_hat: &Series, x: &Series) -> Result<f64> {
    same_shape(x_hat, x)?;
    let sx = max_abs(x);
    if sx == 0.0 {
        return arg_err("rrse is undefined for an all-zero ground truth");
    }
    let sh = max_abs(x_hat);
    let sh = if sh == 0.0 { 1.0 } else { sh };
    let mut num = 0.0;
    let mut den = 0.0;
    for (eh, e) in x_hat.epochs().iter().zip(x.epochs()) {
        for (a, b) in eh.iter().zip(e.iter()) {
            let (a, b) = (a / sh, b / sx);
            num += (b - a) * (b - a);
            den += b * b;
        }
    }
    Ok((num / den).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    #[test]
    fn rse_values() {
        let x = array![1.0, 2.0, 3.0];
        assert_eq!(rse(x.view(), x.view()).unwrap(), 0.0);
        assert!((rse(array![1.0, 2.0, 4.0].view(), x.view()).unwrap() - 50.0).abs() < 1e-12);
        assert!((rse(array![2.0, 2.0, 2.0].view(), x.view()).unwrap() - 100.0).abs() < 1e-12);
        assert!(rse(x.view(), array![1.0, 1.0, 1.0].view()).is_err());
    }

    #[test]
    fn rrse_values() {
        let x = Series::single(Array2::from_shape_fn((3, 5), |(i, t)| (i as f64 + 1.0) * (t as f64).sin())).unwrap();
        assert_eq!(rrse(&x, &x).unwrap(), 0.0);
        let scaled = Series::single(x.epoch(0) * 3.5).unwrap();
        assert!(rrse(&scaled, &x).unwrap() < 1e-15);
        let neg = Series::single(-x.epoch(0)).unwrap();
        assert!((rrse(&neg, &x).unwrap() - 2.0).abs() < 1e-12);
        assert!(rrse(&x, &Series::zeros(3, 5, 1)).is_err());
    }
}
