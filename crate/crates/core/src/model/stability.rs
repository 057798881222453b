use super::MvarCoefficients;
use nalgebra::DMatrix;

/// Largest eigenvalue modulus of the `NP x NP` companion matrix.
///
/// Values below one certify that the MVAR recursion is stable.
pub fn companion_spectral_radius(a: &MvarCoefficients) -> f64 {
    let n = a.n_sources();
    let p = a.order();
    let dim = n * p;
    let mut c = DMatrix::<f64>::zeros(dim, dim);
    for (k, lag) in a.lags().iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                c[(i, k * n + j)] = lag[[i, j]];
            }
        }
    }
    for i in n..dim {
        c[(i, i - n)] = 1.0;
    }
    c.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn triangular_and_zero() {
        let a = MvarCoefficients::new(vec![array![[-0.5, 0.0], [0.7, -0.5]]]).unwrap();
        assert!((companion_spectral_radius(&a) - 0.5).abs() < 1e-6);
        assert!(companion_spectral_radius(&MvarCoefficients::zeros(3, 2)) < 1e-12);
    }

    #[test]
    fn scalar_ar2_radius() {
        // x_t = 0.5 x_{t-1} + 0.25 x_{t-2}: roots of z^2 - 0.5 z - 0.25.
        let a = MvarCoefficients::new(vec![array![[0.5]], array![[0.25]]]).unwrap();
        let expected = (0.5 + (0.25f64 + 1.0).sqrt()) / 2.0;
        assert!((companion_spectral_radius(&a) - expected).abs() < 1e-10);
    }
}
