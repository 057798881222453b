use super::{companion_spectral_radius, LatentSeries, LeadField, MvarCoefficients, NoiseSpec, ObservedSeries, Series};
use crate::error::{arg_err, dim_err, Result};
use crate::rng::stream_rng;
use ndarray::Array2;
use rand::Rng as _;
use rand_distr::StandardNormal;

/// Observation noise draws use a separate range of sub-streams so that the
/// same seed can drive both the latent and the sensor noise.
const OBS_STREAM: u64 = 1 << 40;

/// Output of [`simulate_latent`].
#[derive(Debug, Clone)]
pub struct LatentSimulation {
    pub series: LatentSeries,
    pub spectral_radius: f64,
    /// Set when the companion spectral radius is at least one.
    pub unstable: bool,
}

/// Draw `E` independent epochs of the MVAR recursion.
///
/// The first `P` samples of every epoch are pure state noise; later samples
/// follow `x_t = sum_p A_p x_{t-p} + v_t`. Epoch `e` uses sub-stream `e` of
/// `seed`.
pub fn simulate_latent(
    a: &MvarCoefficients,
    noise: NoiseSpec,
    n_samples: usize,
    n_epochs: usize,
    seed: u64,
) -> Result<LatentSimulation> {
    let n = a.n_sources();
    let p = a.order();
    if n_samples <= p {
        return dim_err(format!("T={n_samples} must exceed the model order P={p}"));
    }
    if n_epochs == 0 {
        return arg_err("at least one epoch is required");
    }
    let epochs = (0..n_epochs)
        .map(|e| {
            let mut rng = stream_rng(seed, e as u64);
            let mut x = Array2::<f64>::zeros((n, n_samples));
            for t in 0..n_samples {
                let mut col = if t >= p {
                    a.predict(x.view(), t)
                } else {
                    ndarray::Array1::zeros(n)
                };
                for v in col.iter_mut() {
                    *v += noise.sigma_state * rng.sample::<f64, _>(StandardNormal);
                }
                x.column_mut(t).assign(&col);
            }
            x
        })
        .collect();
    let spectral_radius = companion_spectral_radius(a);
    Ok(LatentSimulation {
        series: Series::new(epochs)?,
        spectral_radius,
        unstable: spectral_radius >= 1.0,
    })
}

fn check_mixing(b: &LeadField, x: &LatentSeries) -> Result<()> {
    if b.n_sources() != x.n_rows() {
        return dim_err(format!(
            "lead field has {} columns but the latent series has {} rows",
            b.n_sources(),
            x.n_rows()
        ));
    }
    Ok(())
}

fn mix_with_noise(b: &LeadField, x: &LatentSeries, sigma: f64, seed: u64) -> Result<ObservedSeries> {
    let epochs = x
        .epochs()
        .iter()
        .enumerate()
        .map(|(e, xe)| {
            let mut y = b.matrix().dot(xe);
            if sigma > 0.0 {
                let mut rng = stream_rng(seed, OBS_STREAM + e as u64);
                for v in y.iter_mut() {
                    *v += sigma * rng.sample::<f64, _>(StandardNormal);
                }
            }
            y
        })
        .collect();
    let mut out = Series::new(epochs)?;
    if let Some(fs) = x.sampling_rate() {
        out = out.with_sampling_rate(fs);
    }
    Ok(out)
}

/// `Y = B X + sigma_obs * eps` with standard normal `eps`.
pub fn observe(b: &LeadField, x: &LatentSeries, noise: NoiseSpec, seed: u64) -> Result<ObservedSeries> {
    check_mixing(b, x)?;
    mix_with_noise(b, x, noise.sigma_obs, seed)
}

/// Sensor noise scaled so that `10 log10(P_signal / P_noise) = snr_db`, with
/// powers taken as mean squared amplitude over all sensors, samples and
/// epochs. `snr_db = +inf` disables the noise.
///
/// Returns the observations and the noise standard deviation used.
pub fn observe_at_snr(b: &LeadField, x: &LatentSeries, snr_db: f64, seed: u64) -> Result<(ObservedSeries, f64)> {
    check_mixing(b, x)?;
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return arg_err(format!("snr_db must be a number or +inf, got {snr_db}"));
    }
    let clean = mix_with_noise(b, x, 0.0, seed)?;
    if snr_db == f64::INFINITY {
        return Ok((clean, 0.0));
    }
    let count = (clean.n_rows() * clean.n_samples() * clean.n_epochs()) as f64;
    let signal_power = clean.frobenius_sq() / count;
    if signal_power == 0.0 {
        return arg_err("cannot calibrate SNR against an all-zero signal");
    }
    // Draw unit noise, then scale to the exact requested power.
    let mut noise: Vec<Array2<f64>> = Vec::with_capacity(clean.n_epochs());
    let mut noise_energy = 0.0;
    for e in 0..clean.n_epochs() {
        let mut rng = stream_rng(seed, OBS_STREAM + e as u64);
        let w = Array2::from_shape_simple_fn(clean.epoch(e).dim(), || rng.sample::<f64, _>(StandardNormal));
        noise_energy += w.iter().map(|v| v * v).sum::<f64>();
        noise.push(w);
    }
    let target_power = signal_power / 10f64.powf(snr_db / 10.0);
    let scale = (target_power * count / noise_energy).sqrt();
    let mut epochs = clean.into_epochs();
    for (y, w) in epochs.iter_mut().zip(&noise) {
        y.scaled_add(scale, w);
    }
    let mut out = Series::new(epochs)?;
    if let Some(fs) = x.sampling_rate() {
        out = out.with_sampling_rate(fs);
    }
    Ok((out, target_power.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::preset_bivariate;

    #[test]
    fn deterministic_and_stable_flag() {
        let (a, _) = preset_bivariate(1);
        let noise = NoiseSpec::new(1.0, 0.1).unwrap();
        let s1 = simulate_latent(&a, noise, 200, 1, 9).unwrap();
        let s2 = simulate_latent(&a, noise, 200, 1, 9).unwrap();
        assert_eq!(s1.series, s2.series);
        assert!(!s1.unstable);
        assert!((s1.spectral_radius - 0.5).abs() < 1e-6);
    }

    #[test]
    fn unstable_flag_set() {
        let a = MvarCoefficients::new(vec![ndarray::array![[1.1]]]).unwrap();
        let s = simulate_latent(&a, NoiseSpec::new(1.0, 0.0).unwrap(), 20, 1, 0).unwrap();
        assert!(s.unstable);
    }

    #[test]
    fn noiseless_observation_is_exact() {
        let (a, b) = preset_bivariate(2);
        let noise = NoiseSpec::new(1.0, 0.0).unwrap();
        let x = simulate_latent(&a, noise, 50, 2, 3).unwrap().series;
        let y = observe(&b, &x, noise, 4).unwrap();
        assert_eq!(y.epoch(1), &b.matrix().dot(x.epoch(1)));
        let eye = LeadField::new(Array2::eye(2)).unwrap();
        assert_eq!(observe(&eye, &x, noise, 4).unwrap(), x);
        let (y_inf, sigma) = observe_at_snr(&b, &x, f64::INFINITY, 4).unwrap();
        assert_eq!(sigma, 0.0);
        assert_eq!(y_inf, y);
    }

    #[test]
    fn snr_calibration_is_exact() {
        let (a, b) = preset_bivariate(2);
        let x = simulate_latent(&a, NoiseSpec::new(1.0, 0.0).unwrap(), 200, 50, 3).unwrap().series;
        let (y, _) = observe_at_snr(&b, &x, 20.0, 5).unwrap();
        let mut sig = 0.0;
        let mut nse = 0.0;
        for e in 0..x.n_epochs() {
            let clean = b.matrix().dot(x.epoch(e));
            sig += clean.iter().map(|v| v * v).sum::<f64>();
            nse += (y.epoch(e) - &clean).iter().map(|v| v * v).sum::<f64>();
        }
        let measured = 10.0 * (sig / nse).log10();
        assert!((measured - 20.0).abs() < 0.1, "{measured}");
    }

    #[test]
    fn rejects_short_series_and_bad_mixing() {
        let (a, _) = preset_bivariate(0);
        let noise = NoiseSpec::new(1.0, 0.1).unwrap();
        assert!(simulate_latent(&a, noise, 1, 1, 0).is_err());
        let x = simulate_latent(&a, noise, 10, 1, 0).unwrap().series;
        let b3 = LeadField::new(Array2::ones((4, 3))).unwrap();
        assert!(observe(&b3, &x, noise, 0).is_err());
    }
}
