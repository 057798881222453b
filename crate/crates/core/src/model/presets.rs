use super::{LeadField, MvarCoefficients};
use crate::error::{arg_err, Result};
use crate::rng::rng_from_seed;
use ndarray::{array, Array2};
use rand::Rng as _;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

/// Named simulation scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    Bivariate,
    ThreeVariate,
    RestingState,
    EventRelated,
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::Bivariate,
        Preset::ThreeVariate,
        Preset::RestingState,
        Preset::EventRelated,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Bivariate => "bivariate",
            Preset::ThreeVariate => "three-variate",
            Preset::RestingState => "resting-state",
            Preset::EventRelated => "event-related",
        }
    }

    pub fn coefficients(self) -> MvarCoefficients {
        match self {
            Preset::Bivariate => bivariate_coefficients(),
            Preset::ThreeVariate => preset_three_variate(),
            Preset::RestingState => preset_resting_state(),
            Preset::EventRelated => preset_event_related(),
        }
    }

    /// Default number of samples per epoch.
    pub fn default_samples(self) -> usize {
        match self {
            Preset::Bivariate => 200,
            Preset::ThreeVariate => 240,
            Preset::RestingState => 30,
            Preset::EventRelated => 18,
        }
    }

    /// Default number of sensors for the small-scale scenarios.
    pub fn default_sensors(self) -> usize {
        match self {
            Preset::Bivariate | Preset::ThreeVariate => 5,
            Preset::RestingState => 298,
            Preset::EventRelated => 108,
        }
    }

    pub fn sampling_rate(self) -> Option<f64> {
        match self {
            Preset::Bivariate => None,
            Preset::ThreeVariate => Some(120.0),
            Preset::RestingState => Some(250.0),
            Preset::EventRelated => Some(125.0),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = crate::MpssError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == key)
            .map_or_else(
                || {
                    arg_err(format!(
                        "unknown preset '{s}' (expected bivariate, three-variate, resting-state or event-related)"
                    ))
                },
                Ok,
            )
    }
}

fn bivariate_coefficients() -> MvarCoefficients {
    MvarCoefficients::new(vec![array![[-0.5, 0.0], [0.7, -0.5]]]).expect("valid preset")
}

/// Bivariate scenario: fixed `A_1` and a seeded `5 x 2` lead field with
/// entries uniform on `[0, 1)`.
pub fn preset_bivariate(seed: u64) -> (MvarCoefficients, LeadField) {
    (bivariate_coefficients(), uniform_lead_field(5, 2, seed))
}

/// `m x n` lead field with entries uniform on `[0, 1)`.
pub fn uniform_lead_field(m: usize, n: usize, seed: u64) -> LeadField {
    let mut rng = rng_from_seed(seed);
    let b = Array2::from_shape_simple_fn((m, n), || rng.random::<f64>());
    LeadField::new(b).expect("finite")
}

/// Damped-oscillator construction with pole radii `r` and frequencies `f`
/// (Hz) at sampling rate `fs`, plus the fixed cross-lag couplings of the
/// three-variate scenario.
pub fn three_variate_coefficients(r: [f64; 3], f: [f64; 3], fs: f64) -> MvarCoefficients {
    let mut a1 = Array2::zeros((3, 3));
    let mut a2 = Array2::zeros((3, 3));
    for i in 0..3 {
        let theta = 2.0 * PI * f[i] / fs;
        a1[[i, i]] = 2.0 * r[i] * theta.cos();
        a2[[i, i]] = -r[i] * r[i];
    }
    a1[[1, 0]] = -0.356;
    a1[[2, 1]] = -0.3098;
    a2[[1, 0]] = 0.7136;
    a2[[2, 1]] = 0.5;
    let mut a3 = Array2::zeros((3, 3));
    a3[[1, 0]] = -0.356;
    a3[[2, 1]] = -0.3098;
    MvarCoefficients::new(vec![a1, a2, a3]).expect("valid preset")
}

/// Three-variate scenario, `P = 3`.
pub fn preset_three_variate() -> MvarCoefficients {
    three_variate_coefficients([0.9, 0.7, 0.8], [40.0, 10.0, 50.0], 120.0)
}

/// Five-region resting-state scenario, `P = 5`.
pub fn preset_resting_state() -> MvarCoefficients {
    let mut lags = vec![Array2::zeros((5, 5)); 5];
    for i in 0..3 {
        lags[0][[i, i]] = 1.356;
        lags[1][[i, i]] = -0.49;
    }
    for i in 3..5 {
        lags[0][[i, i]] = 1.5;
        lags[1][[i, i]] = -0.75;
    }
    lags[0][[1, 0]] = 0.8;
    lags[1][[1, 0]] = -0.8;
    lags[1][[2, 0]] = 0.8;
    lags[2][[2, 0]] = -0.8;
    lags[2][[3, 0]] = 0.8;
    lags[3][[3, 0]] = -0.8;
    lags[4][[3, 4]] = -0.1;
    lags[4][[4, 3]] = 0.1;
    MvarCoefficients::new(lags).expect("valid preset")
}

/// Five-region event-related scenario, `P = 5` with an all-zero fifth lag.
pub fn preset_event_related() -> MvarCoefficients {
    let mut lags = vec![Array2::zeros((5, 5)); 5];
    for i in 0..5 {
        lags[0][[i, i]] = 0.8;
        lags[1][[i, i]] = -0.5;
    }
    lags[2][[1, 0]] = 1.0;
    lags[3][[3, 4]] = -1.0;
    lags[3][[4, 3]] = 1.0;
    MvarCoefficients::new(lags).expect("valid preset")
}
