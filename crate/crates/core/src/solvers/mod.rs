//! Joint estimation of latent states and MVAR coefficients.
//!
//! All solvers minimise
//!
//! ```text
//! F = 1/(2TE) ( sum_e sum_t L_t |y_t - B x_t|^2
//!             + lambda sum_e |(I - W) vec(X_e)|^2
//!             + l2_x |X|^2 + l2_a |A|^2 + 2 l1_x |X|_1 + 2 l1_a |A|_1 )
//! ```
//!
//! where `L_t` is the cross-validation mask.

mod backprop;
mod hgdals;
mod objective;
mod ssals;
mod ssgd;

pub use backprop::backprop_fit;
pub use hgdals::{gd_budget, hgdals_fit, GdBudget};
pub use objective::{ar_residuals, objective, ssgd_gradients, Gradients};
pub use ssals::{ssals_fit, ssals_state_step};
pub use ssgd::ssgd_fit;

use crate::error::{arg_err, dim_err, Result};
use crate::model::{LatentSeries, LeadField, MvarCoefficients, ObservedSeries};
use crate::MpssError;
use std::fmt;
use std::str::FromStr;

/// Regularization weights.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Hyperparameters {
    pub lambda: f64,
    pub l2_a: f64,
    pub l1_x: f64,
    pub l1_a: f64,
    pub l2_x: f64,
}

impl Hyperparameters {
    pub fn new(lambda: f64, l2_a: f64, l1_x: f64, l1_a: f64, l2_x: f64) -> Result<Self> {
        let hp = Self {
            lambda,
            l2_a,
            l1_x,
            l1_a,
            l2_x,
        };
        hp.validate()?;
        Ok(hp)
    }

    /// Only the autoregressive weight set.
    pub fn with_lambda(lambda: f64) -> Self {
        Self {
            lambda,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.named() {
            if !(v >= 0.0 && v.is_finite()) {
                return arg_err(format!("hyperparameter {name} must be finite and nonnegative, got {v}"));
            }
        }
        Ok(())
    }

    pub fn named(&self) -> [(&'static str, f64); 5] {
        [
            ("lambda", self.lambda),
            ("l2_a", self.l2_a),
            ("l1_x", self.l1_x),
            ("l1_a", self.l1_a),
            ("l2_x", self.l2_x),
        ]
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.named().iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let slot = match name {
            "lambda" => &mut self.lambda,
            "l2_a" => &mut self.l2_a,
            "l1_x" => &mut self.l1_x,
            "l1_a" => &mut self.l1_a,
            "l2_x" => &mut self.l2_x,
            _ => return arg_err(format!("unknown hyperparameter '{name}'")),
        };
        *slot = value;
        Ok(())
    }

    pub fn has_l1(&self) -> bool {
        self.l1_x > 0.0 || self.l1_a > 0.0
    }
}

/// Map prior standard deviations to weights: `lambda = so^2/ss^2`,
/// `l2_a = so^2/s2a^2`, `l1_x = 0.5 so^2/s1x^2`, `l1_a = 0.5 so^2/s1a^2`.
/// A missing prior gives a zero weight.
pub fn naive_hyperparameters(
    sigma_obs: f64,
    sigma_state: f64,
    sigma_2a: Option<f64>,
    sigma_1x: Option<f64>,
    sigma_1a: Option<f64>,
) -> Result<Hyperparameters> {
    if !(sigma_state > 0.0 && sigma_state.is_finite()) {
        return arg_err(format!("sigma_state must be positive, got {sigma_state}"));
    }
    if !(sigma_obs >= 0.0 && sigma_obs.is_finite()) {
        return arg_err(format!("sigma_obs must be nonnegative, got {sigma_obs}"));
    }
    let so2 = sigma_obs * sigma_obs;
    let ratio = |s: Option<f64>, c: f64| -> Result<f64> {
        match s {
            None => Ok(0.0),
            Some(s) if s > 0.0 && s.is_finite() => Ok(c * so2 / (s * s)),
            Some(s) => arg_err(format!("prior standard deviations must be positive, got {s}")),
        }
    };
    Hyperparameters::new(
        so2 / (sigma_state * sigma_state),
        ratio(sigma_2a, 1.0)?,
        ratio(sigma_1x, 0.5)?,
        ratio(sigma_1a, 0.5)?,
        0.0,
    )
}

/// Iteration controls shared by all solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Gradient step size (GD family and the GD part of the hybrid).
    pub step_size: f64,
    pub momentum: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Seed of the random initialisation used by the GD family.
    pub rng_seed: u64,
    /// Apply the `l2_a` weight decay to `A` in backpropagation.
    pub decay_a: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            step_size: 1.0,
            momentum: 0.9,
            tolerance: 1e-6,
            max_iterations: 50_000,
            rng_seed: 0,
            decay_a: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return arg_err(format!("tolerance must be positive, got {}", self.tolerance));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return arg_err(format!("step size must be positive, got {}", self.step_size));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return arg_err(format!("momentum must be in [0, 1), got {}", self.momentum));
        }
        Ok(())
    }
}

/// Observations, lead field, model order and the time mask `L_t`.
#[derive(Debug, Clone)]
pub struct StateSpaceProblem {
    y: ObservedSeries,
    b: LeadField,
    order: usize,
    mask: Vec<bool>,
}

impl StateSpaceProblem {
    pub fn new(y: ObservedSeries, b: LeadField, order: usize) -> Result<Self> {
        if b.n_sensors() != y.n_rows() {
            return dim_err(format!(
                "lead field has {} rows but the observations have {} sensors",
                b.n_sensors(),
                y.n_rows()
            ));
        }
        if order == 0 {
            return arg_err("model order must be at least 1");
        }
        if y.n_samples() <= order {
            return dim_err(format!("T={} must exceed the model order P={order}", y.n_samples()));
        }
        let mask = vec![true; y.n_samples()];
        Ok(Self { y, b, order, mask })
    }

    /// Replace the time mask (`false` marks a held-out sample).
    pub fn with_mask(mut self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.y.n_samples() {
            return dim_err(format!("mask has length {}, series has {} samples", mask.len(), self.y.n_samples()));
        }
        self.mask = mask;
        Ok(self)
    }

    pub fn observations(&self) -> &ObservedSeries {
        &self.y
    }

    pub fn lead_field(&self) -> &LeadField {
        &self.b
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn n_sources(&self) -> usize {
        self.b.n_sources()
    }

    pub fn n_sensors(&self) -> usize {
        self.b.n_sensors()
    }

    pub fn n_samples(&self) -> usize {
        self.y.n_samples()
    }

    pub fn n_epochs(&self) -> usize {
        self.y.n_epochs()
    }
}

/// Starting point for a fit. Missing parts use the solver's default.
#[derive(Debug, Clone, Default)]
pub struct Init {
    pub x: Option<LatentSeries>,
    pub a: Option<MvarCoefficients>,
}

impl Init {
    pub fn from_fit(fit: &FitResult) -> Self {
        Self {
            x: Some(fit.x_hat.clone()),
            a: Some(fit.a_hat.clone()),
        }
    }

    fn check(&self, problem: &StateSpaceProblem) -> Result<()> {
        if let Some(x) = &self.x {
            if x.n_rows() != problem.n_sources()
                || x.n_samples() != problem.n_samples()
                || x.n_epochs() != problem.n_epochs()
            {
                return dim_err("initial states do not match the problem dimensions");
            }
        }
        if let Some(a) = &self.a {
            if a.n_sources() != problem.n_sources() || a.order() != problem.order() {
                return dim_err("initial coefficients do not match the problem dimensions");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub x_hat: LatentSeries,
    pub a_hat: MvarCoefficients,
    /// Objective at the starting point followed by one value per iteration.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub wall_time_ms: f64,
    /// Hybrid solver only: the GD budget chosen at each sweep.
    pub gd_schedule: Vec<GdBudget>,
}

impl FitResult {
    pub fn final_objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace holds the initial objective")
    }
}

/// Solver selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Solver {
    Backprop,
    Ssgd,
    Ssals,
    Hgdals,
}

impl Solver {
    pub const ALL: [Solver; 4] = [Solver::Backprop, Solver::Ssgd, Solver::Ssals, Solver::Hgdals];

    pub fn name(self) -> &'static str {
        match self {
            Solver::Backprop => "backprop",
            Solver::Ssgd => "ssgd",
            Solver::Ssals => "ssals",
            Solver::Hgdals => "hgdals",
        }
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Solver {
    type Err = MpssError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        Solver::ALL
            .into_iter()
            .find(|v| v.name() == key)
            .ok_or_else(|| {
                MpssError::InvalidArgument(format!("unknown solver '{s}' (expected backprop, ssgd, ssals or hgdals)"))
            })
    }
}

/// Run `solver` on `problem`.
pub fn fit(
    solver: Solver,
    problem: &StateSpaceProblem,
    hp: &Hyperparameters,
    cfg: &SolverConfig,
    init: &Init,
) -> Result<FitResult> {
    match solver {
        Solver::Backprop => backprop_fit(problem, hp, cfg, init),
        Solver::Ssgd => ssgd_fit(problem, hp, cfg, init),
        Solver::Ssals => ssals_fit(problem, hp, cfg, init),
        Solver::Hgdals => hgdals_fit(problem, hp, cfg, init),
    }
}

/// Tracks the running minimum of the objective for the divergence guard.
///
/// A fit is declared divergent when the objective exceeds ten times its
/// running minimum and also exceeds its starting value; momentum methods
/// legitimately bounce by large factors once the objective is near zero.
#[derive(Debug, Clone, Copy)]
struct DivergenceGuard {
    start: f64,
    minimum: f64,
}

impl DivergenceGuard {
    fn new(start: f64) -> Self {
        Self { start, minimum: start }
    }

    fn check(&mut self, iteration: usize, objective: f64) -> Result<()> {
        if !objective.is_finite() || (objective > 10.0 * self.minimum && objective > self.start) {
            return Err(MpssError::Divergence {
                iteration,
                objective,
                minimum: self.minimum,
            });
        }
        self.minimum = self.minimum.min(objective);
        Ok(())
    }
}
