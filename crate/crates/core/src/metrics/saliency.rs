use crate::error::{arg_err, Result};
use crate::model::Series;
use ndarray::ArrayView2;
use std::f64::consts::PI;

/// Row energies `q_i = |x_i|` divided by their maximum.
pub fn source_energy(x_hat: ArrayView2<f64>) -> Result<Vec<f64>> {
    let q: Vec<f64> = x_hat.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect();
    normalize_max(q)
}

/// Row energies pooled over all epochs, divided by their maximum.
pub fn source_energy_series(x_hat: &Series) -> Result<Vec<f64>> {
    let q: Vec<f64> = (0..x_hat.n_rows())
        .map(|i| x_hat.epochs().iter().map(|e| e.row(i).dot(&e.row(i))).sum::<f64>().sqrt())
        .collect();
    normalize_max(q)
}

fn normalize_max(q: Vec<f64>) -> Result<Vec<f64>> {
    let max = q.iter().cloned().fold(0.0, f64::max);
    if !(max > 0.0) || !max.is_finite() {
        return arg_err("source energy is undefined for an all-zero estimate");
    }
    Ok(q.into_iter().map(|v| v / max).collect())
}

/// Mean DFT magnitude over frequency bins 1..=5 (bin 0 is DC) and epochs.
pub fn spectral_scores(x_hat: &Series) -> Result<Vec<f64>> {
    let t_len = x_hat.n_samples();
    if t_len < 7 {
        return arg_err(format!("spectral scores need at least 7 samples, got {t_len}"));
    }
    let mut scores = vec![0.0; x_hat.n_rows()];
    for e in x_hat.epochs() {
        for (i, row) in e.rows().into_iter().enumerate() {
            for k in 1..=5 {
                let w = 2.0 * PI * k as f64 / t_len as f64;
                let (mut re, mut im) = (0.0, 0.0);
                for (t, v) in row.iter().enumerate() {
                    let (s, c) = (w * t as f64).sin_cos();
                    re += v * c;
                    im -= v * s;
                }
                scores[i] += re.hypot(im);
            }
        }
    }
    let norm = 5.0 * x_hat.n_epochs() as f64;
    Ok(scores.into_iter().map(|s| s / norm).collect())
}

/// The `top_k` sources with the largest spectral scores, best first; equal
/// scores are ordered by index.
pub fn spectral_energy_selection(x_hat: &Series, top_k: usize) -> Result<Vec<usize>> {
    if top_k > x_hat.n_rows() {
        return arg_err(format!("top_k={top_k} exceeds the {} sources", x_hat.n_rows()));
    }
    let scores = spectral_scores(x_hat)?;
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx.truncate(top_k);
    Ok(idx)
}
