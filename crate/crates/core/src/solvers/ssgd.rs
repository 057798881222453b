use super::objective::value_and_gradients;
use super::ssals::starting_point;
use super::{DivergenceGuard, FitResult, Hyperparameters, Init, SolverConfig, StateSpaceProblem};
use crate::error::Result;
use crate::model::{MvarCoefficients, Series};
use crate::rng::rng_from_seed;
use ndarray::Array2;
use rand::Rng as _;
use rand_distr::StandardNormal;
use std::time::Instant;

/// Standard deviation of the random starting point of the GD family.
pub(super) const INIT_SCALE: f64 = 0.1;

pub(super) fn random_matrix(rows: usize, cols: usize, rng: &mut crate::rng::Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || INIT_SCALE * rng.sample::<f64, _>(StandardNormal))
}

/// Random `N(0, 0.1^2)` start for whatever `init` leaves open.
pub(super) fn random_start(
    problem: &StateSpaceProblem,
    init: &Init,
    seed: u64,
) -> Result<(Vec<Array2<f64>>, MvarCoefficients)> {
    let (mut x, mut a) = starting_point(problem, init)?;
    let mut rng = rng_from_seed(seed);
    let n = problem.n_sources();
    if init.x.is_none() {
        for xe in x.iter_mut() {
            *xe = random_matrix(n, problem.n_samples(), &mut rng);
        }
    }
    if init.a.is_none() {
        for lag in a.lags_mut() {
            *lag = random_matrix(n, n, &mut rng);
        }
    }
    Ok((x, a))
}

/// Gradient descent with momentum on `(X, A)` jointly.
///
/// Converges when the norm of the full gradient drops below
/// `cfg.tolerance`. Aborts when the objective exceeds ten times its running
/// minimum.
pub fn ssgd_fit(problem: &StateSpaceProblem, hp: &Hyperparameters, cfg: &SolverConfig, init: &Init) -> Result<FitResult> {
    hp.validate()?;
    cfg.validate()?;
    let start = Instant::now();
    let (mut x, mut a) = random_start(problem, init, cfg.rng_seed)?;
    let ys = problem.observations().epochs();
    let b = problem.lead_field().matrix();
    let mask = problem.mask();
    let n = problem.n_sources();

    let mut vel_x: Vec<Array2<f64>> = x.iter().map(|m| Array2::zeros(m.dim())).collect();
    let mut vel_a: Vec<Array2<f64>> = vec![Array2::zeros((n, n)); problem.order()];
    let (f0, mut grad) = value_and_gradients(&x, &a, ys, b, hp, mask);
    let mut trace = vec![f0];
    let mut guard = DivergenceGuard::new(f0);
    let mut converged = grad.norm() < cfg.tolerance;
    let mut iterations = 0;
    while !converged && iterations < cfg.max_iterations {
        for ((xe, ve), ge) in x.iter_mut().zip(vel_x.iter_mut()).zip(&grad.x) {
            *ve *= cfg.momentum;
            ve.scaled_add(-cfg.step_size, ge);
            *xe += &*ve;
        }
        for ((lag, ve), ge) in a.lags_mut().iter_mut().zip(vel_a.iter_mut()).zip(&grad.a) {
            *ve *= cfg.momentum;
            ve.scaled_add(-cfg.step_size, ge);
            *lag += &*ve;
        }
        iterations += 1;
        let (f, g) = value_and_gradients(&x, &a, ys, b, hp, mask);
        guard.check(iterations, f)?;
        trace.push(f);
        grad = g;
        converged = grad.norm() < cfg.tolerance;
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LeadField;
    use crate::solvers::objective::objective_raw;
    use crate::MpssError;
    use ndarray::array;

    #[test]
    fn recovers_inverse_mixing_without_penalties() {
        let b = array![[2.0, 0.3], [0.1, 1.5]];
        let x_true = array![[1.0, -0.5, 0.3, 0.8, -1.2, 0.4], [0.2, 0.9, -0.7, 0.1, 0.5, -0.3]];
        let y = Series::single(b.dot(&x_true)).unwrap();
        let problem = StateSpaceProblem::new(y, LeadField::new(b).unwrap(), 1).unwrap();
        let cfg = SolverConfig {
            step_size: 1.0,
            momentum: 0.5,
            tolerance: 1e-10,
            max_iterations: 20_000,
            ..SolverConfig::default()
        };
        let fit = ssgd_fit(&problem, &Hyperparameters::default(), &cfg, &Init::default()).unwrap();
        assert!(fit.converged);
        assert!(fit.final_objective() < 1e-12);
        for (u, v) in fit.x_hat.epoch(0).iter().zip(x_true.iter()) {
            assert!((u - v).abs() < 1e-6);
        }
    }

    #[test]
    fn large_steps_diverge_loudly() {
        let b = array![[3.0, 0.0], [0.0, 3.0]];
        let y = Series::single(Array2::ones((2, 5))).unwrap();
        let problem = StateSpaceProblem::new(y, LeadField::new(b).unwrap(), 1).unwrap();
        let cfg = SolverConfig {
            step_size: 50.0,
            momentum: 0.0,
            ..SolverConfig::default()
        };
        let err = ssgd_fit(&problem, &Hyperparameters::with_lambda(0.1), &cfg, &Init::default()).unwrap_err();
        assert!(matches!(err, MpssError::Divergence { .. }));
    }

    #[test]
    fn seeded_start_is_deterministic() {
        let b = array![[1.0, 0.5], [0.2, 1.0], [0.3, 0.3]];
        let y = Series::single(Array2::from_shape_fn((3, 12), |(i, t)| ((i + 2 * t) as f64).sin())).unwrap();
        let problem = StateSpaceProblem::new(y, LeadField::new(b).unwrap(), 2).unwrap();
        let cfg = SolverConfig {
            max_iterations: 50,
            rng_seed: 17,
            ..SolverConfig::default()
        };
        let hp = Hyperparameters::with_lambda(0.2);
        let f1 = ssgd_fit(&problem, &hp, &cfg, &Init::default()).unwrap();
        let f2 = ssgd_fit(&problem, &hp, &cfg, &Init::default()).unwrap();
        assert_eq!(f1.x_hat, f2.x_hat);
        assert_eq!(f1.objective_trace, f2.objective_trace);
        let last = objective_raw(
            f1.x_hat.epochs(),
            &f1.a_hat,
            problem.observations().epochs(),
            problem.lead_field().matrix(),
            &hp,
            problem.mask(),
        );
        assert_eq!(last, f1.final_objective());
    }
}
