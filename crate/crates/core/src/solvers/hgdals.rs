use super::objective::{objective_raw, value_and_gradients};
use super::ssals::{check_als, coefficient_step, relative_change, relative_decrease, ssals_state_step, starting_point};
use super::{FitResult, Hyperparameters, Init, SolverConfig, StateSpaceProblem};
use crate::error::Result;
use crate::model::{MvarCoefficients, Series};
use ndarray::Array2;
use std::time::Instant;

/// Share of the ALS cost that the GD steps of one sweep may use.
const GD_SHARE: f64 = 0.2;

/// Step-halving attempts before a GD step is skipped.
const MAX_HALVINGS: usize = 40;

/// Bookkeeping for one hybrid sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GdBudget {
    pub iteration: usize,
    /// Number of GD steps run in this sweep.
    pub gd_steps: usize,
    /// Cost of one ALS sweep and of one GD step, in model flops.
    pub t_als: f64,
    pub t_gd: f64,
    pub delta_als: f64,
    pub delta_gd: f64,
}

/// `min(floor(0.2 T_ALS / T_GD), ceil(dF_GD T_ALS / (dF_ALS T_GD)))`.
///
/// The cap is floored so that `I_GD T_GD <= 0.2 T_ALS` holds exactly. A GD
/// phase that made no progress gets no steps; a stalled ALS phase gives the GD
/// phase the full cap.
pub fn gd_budget(t_als: f64, t_gd: f64, delta_als: f64, delta_gd: f64) -> usize {
    if !(t_gd > 0.0) || !(t_als > 0.0) {
        return 0;
    }
    let cap = (GD_SHARE * t_als / t_gd).floor();
    if !(delta_gd > 0.0) {
        return 0;
    }
    let wanted = if delta_als > 0.0 {
        (delta_gd * t_als / (delta_als * t_gd)).ceil()
    } else {
        f64::INFINITY
    };
    cap.min(wanted).max(0.0) as usize
}

/// Deterministic operation counts standing in for clock time, so that the
/// schedule does not depend on machine load.
fn als_cost(n: f64, m: f64, t: f64, p: f64, e: f64) -> f64 {
    let assembly = (p + 1.0).powi(2) * n.powi(3) + t * (p + 1.0) * (p + 2.0) / 2.0 * n * n + m * n * n;
    let factor = t * (p * (p + 1.0) / 2.0 + p + 1.0 / 3.0) * n.powi(3);
    let solve = e * (2.0 * t * m * n + 2.0 * t * (2.0 * p + 1.0) * n * n);
    let coeff = e * t * (n * p).powi(2) + (n * p).powi(3) / 3.0 + 2.0 * (n * p).powi(2) * n;
    assembly + factor + solve + coeff
}

fn gd_cost(n: f64, m: f64, t: f64, p: f64, e: f64) -> f64 {
    e * t * (4.0 * m * n + 6.0 * p * n * n + 4.0 * n)
}

/// Take one gradient step, halving the step until the objective does not
/// increase. Returns the new objective.
fn safeguarded_step(
    x: &mut [Array2<f64>],
    a: &mut MvarCoefficients,
    problem: &StateSpaceProblem,
    hp: &Hyperparameters,
    step: &mut f64,
) -> f64 {
    let ys = problem.observations().epochs();
    let b = problem.lead_field().matrix();
    let mask = problem.mask();
    let (f, g) = value_and_gradients(x, a, ys, b, hp, mask);
    for _ in 0..MAX_HALVINGS {
        let xt: Vec<Array2<f64>> = x
            .iter()
            .zip(&g.x)
            .map(|(xe, ge)| {
                let mut v = xe.clone();
                v.scaled_add(-*step, ge);
                v
            })
            .collect();
        let mut at = a.clone();
        for (lag, ga) in at.lags_mut().iter_mut().zip(&g.a) {
            lag.scaled_add(-*step, ga);
        }
        let ft = objective_raw(&xt, &at, ys, b, hp, mask);
        if ft <= f {
            x.clone_from_slice(&xt);
            *a = at;
            return ft;
        }
        *step *= 0.5;
    }
    f
}

/// Hybrid solver: each sweep runs one ALS iteration followed by `I_GD`
/// gradient steps, with `I_GD = 1` in the first sweep (0 when a single step
/// exceeds the budget) and [`gd_budget`] afterwards. Convergence uses the ALS criteria over a whole sweep.
pub fn hgdals_fit(problem: &StateSpaceProblem, hp: &Hyperparameters, cfg: &SolverConfig, init: &Init) -> Result<FitResult> {
    check_als(hp, cfg)?;
    let start = Instant::now();
    let (mut x, mut a) = starting_point(problem, init)?;
    let ys = problem.observations().epochs();
    let b = problem.lead_field().matrix();
    let mask = problem.mask();
    let dims = (
        problem.n_sources() as f64,
        problem.n_sensors() as f64,
        problem.n_samples() as f64,
        problem.order() as f64,
        problem.n_epochs() as f64,
    );
    let t_als = als_cost(dims.0, dims.1, dims.2, dims.3, dims.4);
    let t_gd = gd_cost(dims.0, dims.1, dims.2, dims.3, dims.4);

    let mut trace = vec![objective_raw(&x, &a, ys, b, hp, mask)];
    let mut schedule = Vec::new();
    let mut step = cfg.step_size;
    // One GD step in the first sweep, if the budget allows it at all.
    let mut i_gd = gd_budget(t_als, t_gd, 0.0, 1.0).min(1);
    let mut delta_gd = 0.0;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iterations {
        iterations += 1;
        let f_start = *trace.last().unwrap();
        let x_prev = x.clone();
        let a_prev = a.clone();

        x = ssals_state_step(problem, &a, hp)?;
        a = coefficient_step(&x, problem.order(), hp)?;
        let f_als = objective_raw(&x, &a, ys, b, hp, mask);
        let delta_als = f_start - f_als;
        if iterations > 1 {
            i_gd = gd_budget(t_als, t_gd, delta_als, delta_gd);
        }

        let mut f = f_als;
        for _ in 0..i_gd {
            f = safeguarded_step(&mut x, &mut a, problem, hp, &mut step);
        }
        if i_gd > 0 {
            delta_gd = f_als - f;
        }
        schedule.push(GdBudget {
            iteration: iterations,
            gd_steps: i_gd,
            t_als,
            t_gd,
            delta_als,
            delta_gd,
        });
        trace.push(f);
        if relative_decrease(f_start, f) < cfg.tolerance && relative_change(&x_prev, &a_prev, &x, &a) < cfg.tolerance {
            converged = true;
            break;
        }
    }
    Ok(FitResult {
        x_hat: Series::new(x)?,
        a_hat: a,
        objective_trace: trace,
        iterations,
        converged,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        gd_schedule: schedule,
    })
}
