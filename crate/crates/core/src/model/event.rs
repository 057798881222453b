use super::{observe_at_snr, LatentSeries, LeadField, MvarCoefficients, ObservedSeries, Series};
use crate::error::{arg_err, dim_err, Result};
use crate::rng::stream_rng;
use ndarray::{s, Array2};
use rand::Rng as _;
use rand_distr::{Distribution, Normal, StandardNormal};
use std::f64::consts::PI;

/// Stimulus and epoching protocol of the event-related scenario. Times in ms.
#[derive(Debug, Clone, PartialEq)]
pub struct EventProtocol {
    pub segment_ms: f64,
    pub onset_window_ms: [f64; 2],
    pub hanning_ms: f64,
    pub jitter_mean_ms: f64,
    pub jitter_std_ms: f64,
    pub pulse_height: f64,
    pub pulse_ms: f64,
    pub epoch_window_ms: [f64; 2],
    /// Region indices receiving the input pulse, in stimulation order.
    pub stimulated_regions: Vec<usize>,
    /// Delay between consecutive stimulated regions.
    pub inter_pulse_ms: f64,
    /// Innovation standard deviation of the region dynamics.
    pub sigma_state: f64,
    /// Keep cross-region couplings at their full value outside the gate
    /// window instead of switching them off.
    pub baseline_coupling: bool,
    pub sampling_rate: f64,
}

impl Default for EventProtocol {
    fn default() -> Self {
        Self {
            segment_ms: 750.0,
            onset_window_ms: [200.0, 500.0],
            hanning_ms: 120.0,
            jitter_mean_ms: 20.0,
            jitter_std_ms: 10.0,
            pulse_height: 0.3,
            pulse_ms: 24.0,
            epoch_window_ms: [-150.0, 282.0],
            stimulated_regions: vec![0],
            inter_pulse_ms: 48.0,
            sigma_state: 0.1,
            baseline_coupling: false,
            sampling_rate: 125.0,
        }
    }
}

impl EventProtocol {
    /// Five-region variant: regions 1 and 4 stimulated 48 ms apart.
    pub fn five_region() -> Self {
        Self {
            stimulated_regions: vec![0, 3],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let durations = [
            self.segment_ms,
            self.hanning_ms,
            self.pulse_ms,
            self.sampling_rate,
            self.sigma_state,
        ];
        if durations.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return arg_err("segment, Hanning, pulse durations, sampling rate and state noise must be positive");
        }
        let [lo, hi] = self.onset_window_ms;
        if !(0.0 <= lo && lo <= hi && hi <= self.segment_ms) {
            return arg_err(format!("onset window [{lo}, {hi}] ms must lie inside the {} ms segment", self.segment_ms));
        }
        let [pre, post] = self.epoch_window_ms;
        if !(pre <= 0.0 && post >= 0.0) {
            return arg_err("epoch window must contain the onset");
        }
        if -pre > lo {
            return arg_err(format!(
                "epoch window starts {} ms before onset but the earliest onset is {lo} ms into the segment",
                -pre
            ));
        }
        if self.jitter_std_ms < 0.0 || self.inter_pulse_ms < 0.0 {
            return arg_err("jitter std and inter-pulse interval must be nonnegative");
        }
        Ok(())
    }

    fn samples(&self, ms: f64) -> usize {
        (ms * 1e-3 * self.sampling_rate).round() as usize
    }

    /// Number of samples per epoch.
    pub fn epoch_len(&self) -> usize {
        self.samples(-self.epoch_window_ms[0]) + self.samples(self.epoch_window_ms[1]) + 1
    }
}

/// Output of [`generate_event_related`].
#[derive(Debug, Clone)]
pub struct EventDataset {
    /// Continuous sensor recording (`M x T_c`, one epoch).
    pub continuous: ObservedSeries,
    /// Continuous dipole activity (`N x T_c`).
    pub continuous_latent: LatentSeries,
    pub epoched: ObservedSeries,
    pub epoched_latent: LatentSeries,
    /// Onset sample indices into the continuous series.
    pub onsets: Vec<usize>,
    /// Sensor noise standard deviation actually used.
    pub noise_sigma: f64,
}

/// Hanning window of `len` samples (zero at both ends).
fn hanning(len: usize) -> Vec<f64> {
    if len < 2 {
        return vec![1.0; len];
    }
    (0..len)
        .map(|k| 0.5 * (1.0 - (2.0 * PI * k as f64 / (len - 1) as f64).cos()))
        .collect()
}

/// Simulate a continuous recording of `n_trials` segments and cut epochs
/// around each stimulus onset.
///
/// `a` describes the region dynamics. Region `r` drives every dipole of
/// `patches[r]`; an empty `patches` maps region `r` to source `r`.
/// Cross-region couplings are multiplied by the Hanning envelope of the
/// presynaptic region, evaluated at the presynaptic sample. The window of a
/// region starts at its pulse time plus the trial jitter. Outside the window
/// the couplings are off, or at their full value with `baseline_coupling`.
/// Self-couplings are never gated.
pub fn generate_event_related(
    a: &MvarCoefficients,
    b: &LeadField,
    patches: &[Vec<usize>],
    proto: &EventProtocol,
    snr_db: f64,
    n_trials: usize,
    seed: u64,
) -> Result<EventDataset> {
    proto.validate()?;
    if n_trials == 0 {
        return arg_err("at least one trial is required");
    }
    let regions = a.n_sources();
    let p = a.order();
    let n = b.n_sources();
    if let Some(&r) = proto.stimulated_regions.iter().find(|&&r| r >= regions) {
        return arg_err(format!("stimulated region {r} out of range for {regions} regions"));
    }
    if patches.is_empty() {
        if n != regions {
            return dim_err(format!("without patches the lead field needs {regions} columns, found {n}"));
        }
    } else {
        if patches.len() != regions {
            return dim_err(format!("{} patches supplied for {regions} regions", patches.len()));
        }
        if let Some(&v) = patches.iter().flatten().find(|&&v| v >= n) {
            return arg_err(format!("patch dipole {v} out of range for {n} sources"));
        }
    }

    let seg = proto.samples(proto.segment_ms);
    let pre = proto.samples(-proto.epoch_window_ms[0]);
    let post = proto.samples(proto.epoch_window_ms[1]);
    let hann = hanning(proto.samples(proto.hanning_ms).max(1));
    let pulse_len = proto.samples(proto.pulse_ms).max(1);
    let inter_pulse = proto.samples(proto.inter_pulse_ms);
    let jitter = Normal::new(proto.jitter_mean_ms, proto.jitter_std_ms)
        .map_err(|e| crate::MpssError::InvalidArgument(e.to_string()))?;

    // Trial timing; each trial draws from its own stream.
    let mut onsets = Vec::with_capacity(n_trials);
    let mut gates = Vec::with_capacity(n_trials);
    for k in 0..n_trials {
        let mut rng = stream_rng(seed, k as u64 + 1);
        let [lo, hi] = proto.onset_window_ms;
        let onset_ms = lo + (hi - lo) * rng.random::<f64>();
        let delay_ms = jitter.sample(&mut rng).max(0.0);
        let onset = k * seg + proto.samples(onset_ms);
        onsets.push(onset);
        gates.push(onset + proto.samples(delay_ms));
    }
    // Pad the tail so the last epoch (and its gate) fits.
    let last_needed = onsets.last().unwrap() + post + 1;
    let total = (n_trials * seg).max(last_needed);

    // Per-region gate on outgoing couplings. A stimulated region opens its
    // gate at its own pulse time plus the trial jitter, others at onset plus
    // jitter.
    let outside = if proto.baseline_coupling { 1.0 } else { 0.0 };
    let mut envelope = Array2::<f64>::from_elem((regions, total), outside);
    for (&onset, &gate) in onsets.iter().zip(&gates) {
        for r in 0..regions {
            let offset = proto
                .stimulated_regions
                .iter()
                .position(|&q| q == r)
                .map_or(0, |order| order * inter_pulse);
            let g = gate + offset;
            debug_assert!(g >= onset);
            for (k, w) in hann.iter().enumerate() {
                if g + k < total {
                    envelope[[r, g + k]] = *w;
                }
            }
        }
    }
    let mut drive = Array2::<f64>::zeros((regions, total));
    for &onset in &onsets {
        for (order, &r) in proto.stimulated_regions.iter().enumerate() {
            let start = onset + order * inter_pulse;
            for t in start..(start + pulse_len).min(total) {
                drive[[r, t]] += proto.pulse_height;
            }
        }
    }

    let mut rng = stream_rng(seed, 0);
    let mut z = Array2::<f64>::zeros((regions, total));
    for t in 0..total {
        for i in 0..regions {
            let mut acc = drive[[i, t]] + proto.sigma_state * rng.sample::<f64, _>(StandardNormal);
            if t >= p {
                for (k, lag) in a.lags().iter().enumerate() {
                    let src = t - k - 1;
                    for j in 0..regions {
                        let c = lag[[i, j]];
                        if c == 0.0 {
                            continue;
                        }
                        let f = if i == j { 1.0 } else { envelope[[j, src]] };
                        acc += f * c * z[[j, src]];
                    }
                }
            }
            z[[i, t]] = acc;
        }
    }

    let x = if patches.is_empty() {
        z
    } else {
        let mut x = Array2::<f64>::zeros((n, total));
        for (r, patch) in patches.iter().enumerate() {
            for &v in patch {
                x.row_mut(v).assign(&z.row(r));
            }
        }
        x
    };
    let latent = Series::single(x)?.with_sampling_rate(proto.sampling_rate);
    let (continuous, noise_sigma) = observe_at_snr(b, &latent, snr_db, seed)?;

    let cut = |m: &Array2<f64>| -> Vec<Array2<f64>> {
        onsets
            .iter()
            .map(|&o| m.slice(s![.., o - pre..=o + post]).to_owned())
            .collect()
    };
    let epoched = Series::new(cut(continuous.epoch(0)))?.with_sampling_rate(proto.sampling_rate);
    let epoched_latent = Series::new(cut(latent.epoch(0)))?.with_sampling_rate(proto.sampling_rate);
    Ok(EventDataset {
        continuous,
        continuous_latent: latent,
        epoched,
        epoched_latent,
        onsets,
        noise_sigma,
    })
}
