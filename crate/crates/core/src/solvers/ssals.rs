use super::objective::objective_raw;
use super::{FitResult, Hyperparameters, Init, SolverConfig, StateSpaceProblem};
use crate::error::{arg_err, Result};
use crate::linalg::dense::spd_solve;
use crate::linalg::{build_w, unvec_series, StateSystem};
use crate::model::{MvarCoefficients, Series};
use crate::MpssError;
use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2};
use std::time::Instant;

pub(super) fn check_als(hp: &Hyperparameters, cfg: &SolverConfig) -> Result<()> {
    hp.validate()?;
    cfg.validate()?;
    if !(hp.lambda > 0.0) {
        return arg_err("the alternating solvers need lambda > 0");
    }
    if hp.has_l1() {
        return arg_err("L1 penalties are not supported by the alternating solvers; use ssgd");
    }
    Ok(())
}

/// Exact minimiser over the states for fixed `A`: one banded factorisation
/// shared by every epoch.
pub fn ssals_state_step(
    problem: &StateSpaceProblem,
    a: &MvarCoefficients,
    hp: &Hyperparameters,
) -> Result<Vec<Array2<f64>>> {
    let n = problem.n_sources();
    let t = problem.n_samples();
    let w = build_w(a, t)?;
    let b = problem.lead_field().matrix();
    let sys = StateSystem::assemble(b.view(), &w, hp.lambda, hp.l2_x, problem.mask())?;
    let epochs = problem.observations().epochs();
    let mut rhs = Array2::zeros((n * t, epochs.len()));
    for (e, ye) in epochs.iter().enumerate() {
        rhs.column_mut(e).assign(&sys.observation_rhs(b.view(), ye.view())?);
    }
    let sol = sys.solve_states(&rhs)?;
    Ok((0..epochs.len()).map(|e| unvec_series(sol.column(e), n)).collect())
}

/// Ridge least-squares MVAR fit pooled over epochs:
/// `A (lambda Z Z^T + l2_a I) = lambda X_{P+1:T} Z^T`.
pub(super) fn coefficient_step(xs: &[Array2<f64>], order: usize, hp: &Hyperparameters) -> Result<MvarCoefficients> {
    let n = xs[0].nrows();
    let t = xs[0].ncols();
    let np = n * order;
    let mut zz = Array2::<f64>::zeros((np, np));
    let mut xz = Array2::<f64>::zeros((n, np));
    let mut z = Array2::<f64>::zeros((np, t - order));
    for xe in xs {
        for k in 0..order {
            z.slice_mut(s![k * n..(k + 1) * n, ..])
                .assign(&xe.slice(s![.., order - k - 1..t - k - 1]));
        }
        general_mat_mul(1.0, &z, &z.t(), 1.0, &mut zz);
        general_mat_mul(1.0, &xe.slice(s![.., order..]), &z.t(), 1.0, &mut xz);
    }
    zz *= hp.lambda;
    xz *= hp.lambda;
    for i in 0..np {
        zz[[i, i]] += hp.l2_a;
    }
    let at = spd_solve(&zz, &xz.t().to_owned()).ok_or_else(|| {
        MpssError::Singular(format!(
            "the lagged state covariance Z Z^T ({np}x{np}) is singular; add a ridge term l2_a > 0"
        ))
    })?;
    MvarCoefficients::from_stacked(at.t(), order)
}

pub(super) fn relative_change(
    x_old: &[Array2<f64>],
    a_old: &MvarCoefficients,
    x_new: &[Array2<f64>],
    a_new: &MvarCoefficients,
) -> f64 {
    let mut diff = 0.0;
    let mut size = 0.0;
    for (o, n) in x_old.iter().zip(x_new) {
        for (u, v) in o.iter().zip(n.iter()) {
            diff += (u - v) * (u - v);
            size += v * v;
        }
    }
    for (o, n) in a_old.lags().iter().zip(a_new.lags()) {
        for (u, v) in o.iter().zip(n.iter()) {
            diff += (u - v) * (u - v);
            size += v * v;
        }
    }
    if size == 0.0 {
        return if diff == 0.0 { 0.0 } else { f64::INFINITY };
    }
    (diff / size).sqrt()
}

pub(super) fn relative_decrease(previous: f64, current: f64) -> f64 {
    let scale = current.abs().max(previous.abs());
    if scale == 0.0 {
        0.0
    } else {
        (previous - current).abs() / scale
    }
}

pub(super) fn starting_point(problem: &StateSpaceProblem, init: &Init) -> Result<(Vec<Array2<f64>>, MvarCoefficients)> {
    init.check(problem)?;
    let n = problem.n_sources();
    let x = match &init.x {
        Some(x) => x.epochs().to_vec(),
        None => vec![Array2::zeros((n, problem.n_samples())); problem.n_epochs()],
    };
    let a = init
        .a
        .clone()
        .unwrap_or_else(|| MvarCoefficients::zeros(n, problem.order()));
    Ok((x, a))
}

/// Alternate the exact state solve and the least-squares coefficient solve.
///
/// Starts from `X = 0`, `A = 0` unless `init` says otherwise. Stops when both
/// the relative objective decrease and the relative parameter change fall
/// below `cfg.tolerance`.
pub fn ssals_fit(problem: &StateSpaceProblem, hp: &Hyperparameters, cfg: &SolverConfig, init: &Init) -> Result<FitResult> {
    check_als(hp, cfg)?;
    let start = Instant::now();
    let (mut x, mut a) = starting_point(problem, init)?;
    let ys = problem.observations().epochs();
    let b = problem.lead_field().matrix();
    let mask = problem.mask();
    let mut trace = vec![objective_raw(&x, &a, ys, b, hp, mask)];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iterations {
        let x_new = ssals_state_step(problem, &a, hp)?;
        let a_new = coefficient_step(&x_new, problem.order(), hp)?;
        let f = objective_raw(&x_new, &a_new, ys, b, hp, mask);
        let change = relative_change(&x, &a, &x_new, &a_new);
        let decrease = relative_decrease(*trace.last().unwrap(), f);
        x = x_new;
        a = a_new;
        trace.push(f);
        iterations += 1;
        if decrease < cfg.tolerance && change < cfg.tolerance {
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
        gd_schedule: Vec::new(),
    })
}
