use super::objective::{ar_residuals, objective_raw};
use super::ssgd::random_start;
use super::{DivergenceGuard, FitResult, Hyperparameters, Init, SolverConfig, StateSpaceProblem};
use crate::error::Result;
use crate::model::{MvarCoefficients, Series};
use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2};
use std::time::Instant;

/// Run the recursion `x_t = sum_p A_p x_{t-p} + v_t` (`x_t = v_t` for the
/// first `P` samples).
pub(crate) fn forward(v: &Array2<f64>, a: &MvarCoefficients) -> Array2<f64> {
    let p = a.order();
    let mut x = v.clone();
    for t in p..x.ncols() {
        let pred = a.predict(x.view(), t);
        let mut col = x.column_mut(t);
        col += &pred;
    }
    x
}

/// Backward deltas `d_t = B^T dy_t + sum_p A_p^T d_{t+p}` with
/// `dy_t = -L_t (y_t - B x_t) / (T E)`.
pub(crate) fn backward(
    x: &Array2<f64>,
    y: &Array2<f64>,
    b: &Array2<f64>,
    a: &MvarCoefficients,
    mask: &[bool],
    scale: f64,
) -> Array2<f64> {
    let p = a.order();
    let t_len = x.ncols();
    let mut dy = y.clone();
    general_mat_mul(-1.0, b, x, 1.0, &mut dy);
    for (t, &keep) in mask.iter().enumerate() {
        if keep {
            dy.column_mut(t).mapv_inplace(|v| -scale * v);
        } else {
            dy.column_mut(t).fill(0.0);
        }
    }
    let mut delta = b.t().dot(&dy);
    for t in (0..t_len).rev() {
        let mut acc = ndarray::Array1::zeros(delta.nrows());
        for (k, lag) in a.lags().iter().enumerate() {
            let ahead = t + k + 1;
            if ahead < t_len && ahead >= p {
                acc += &lag.t().dot(&delta.column(ahead));
            }
        }
        let mut col = delta.column_mut(t);
        col += &acc;
    }
    delta
}

/// Backpropagation through the MVAR recursion with the innovations `v_t` and
/// the coefficients `A_p` as free parameters.
///
/// Updates follow `v <- v - step (delta + (lambda / T) v)` and
/// `A_p <- A_p - step sum_t delta_t x_{t-p}^T`, both with momentum. Weight
/// decay on `A` uses `l2_a` and is applied only when `cfg.decay_a` is set. L1
/// weights and `l2_x` are ignored. Converges when the update direction has
/// norm below `cfg.tolerance`.
pub fn backprop_fit(problem: &StateSpaceProblem, hp: &Hyperparameters, cfg: &SolverConfig, init: &Init) -> Result<FitResult> {
    hp.validate()?;
    cfg.validate()?;
    let start = Instant::now();
    let (x0, mut a) = random_start(problem, init, cfg.rng_seed)?;
    // With supplied states the innovations are their AR residuals.
    let mut v: Vec<Array2<f64>> = if init.x.is_some() {
        x0.iter().map(|xe| ar_residuals(xe.view(), &a)).collect()
    } else {
        x0
    };
    let ys = problem.observations().epochs();
    let b = problem.lead_field().matrix();
    let mask = problem.mask();
    let n = problem.n_sources();
    let p = problem.order();
    let t_len = problem.n_samples();
    let scale = 1.0 / (t_len * ys.len()) as f64;
    let track = Hyperparameters {
        lambda: hp.lambda,
        l2_a: if cfg.decay_a { hp.l2_a } else { 0.0 },
        ..Hyperparameters::default()
    };

    let mut vel_v: Vec<Array2<f64>> = v.iter().map(|m| Array2::zeros(m.dim())).collect();
    let mut vel_a: Vec<Array2<f64>> = vec![Array2::zeros((n, n)); p];
    let mut x: Vec<Array2<f64>> = v.iter().map(|ve| forward(ve, &a)).collect();
    let f0 = objective_raw(&x, &a, ys, b, &track, mask);
    let mut trace = vec![f0];
    let mut guard = DivergenceGuard::new(f0);
    let mut iterations = 0;
    let mut converged = false;
    loop {
        // Update directions at the current point.
        let mut gv = Vec::with_capacity(v.len());
        let mut ga: Vec<Array2<f64>> = vec![Array2::zeros((n, n)); p];
        for ((ve, xe), ye) in v.iter().zip(&x).zip(ys) {
            let delta = backward(xe, ye, b, &a, mask, scale);
            let d_tail = delta.slice(s![.., p..]);
            for (k, g) in ga.iter_mut().enumerate() {
                let shifted = xe.slice(s![.., p - k - 1..t_len - k - 1]);
                general_mat_mul(1.0, &d_tail, &shifted.t(), 1.0, g);
            }
            let mut g = delta;
            g.scaled_add(hp.lambda * scale, ve);
            gv.push(g);
        }
        if cfg.decay_a {
            for (g, lag) in ga.iter_mut().zip(a.lags()) {
                g.scaled_add(hp.l2_a * scale, lag);
            }
        }
        let norm: f64 = gv
            .iter()
            .chain(ga.iter())
            .flat_map(|m| m.iter())
            .map(|z| z * z)
            .sum::<f64>()
            .sqrt();
        if norm < cfg.tolerance {
            converged = true;
            break;
        }
        if iterations >= cfg.max_iterations {
            break;
        }
        for ((ve, vel), g) in v.iter_mut().zip(vel_v.iter_mut()).zip(&gv) {
            *vel *= cfg.momentum;
            vel.scaled_add(-cfg.step_size, g);
            *ve += &*vel;
        }
        for ((lag, vel), g) in a.lags_mut().iter_mut().zip(vel_a.iter_mut()).zip(&ga) {
            *vel *= cfg.momentum;
            vel.scaled_add(-cfg.step_size, g);
            *lag += &*vel;
        }
        iterations += 1;
        x = v.iter().map(|ve| forward(ve, &a)).collect();
        let f = objective_raw(&x, &a, ys, b, &track, mask);
        guard.check(iterations, f)?;
        trace.push(f);
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
    use crate::model::{observe, preset_bivariate, simulate_latent, NoiseSpec};
    use ndarray::array;

    /// Objective as a function of the innovations and coefficients.
    fn loss(v: &Array2<f64>, a: &MvarCoefficients, y: &Array2<f64>, b: &Array2<f64>, lambda: f64) -> f64 {
        let x = forward(v, a);
        let hp = Hyperparameters::with_lambda(lambda);
        objective_raw(&[x], a, &[y.clone()], b, &hp, &vec![true; y.ncols()])
    }

    #[test]
    fn scalar_delta_matches_finite_differences() {
        // N = M = 1, B = 1, T = 2, P = 1.
        let a = MvarCoefficients::new(vec![array![[0.6]]]).unwrap();
        let b = array![[1.0]];
        let y = array![[0.4, -1.1]];
        let v = array![[0.3, 0.2]];
        let lambda = 0.5;
        let x = forward(&v, &a);
        let delta = backward(&x, &y, &b, &a, &[true, true], 0.5);
        // delta_1 = B^T dy_1 + A^T delta_2
        let dy1 = -(y[[0, 0]] - x[[0, 0]]) / 2.0;
        assert!((delta[[0, 0]] - (dy1 + 0.6 * delta[[0, 1]])).abs() < 1e-15);
        let h = 1e-6;
        for t in 0..2 {
            let mut vp = v.clone();
            vp[[0, t]] += h;
            let mut vm = v.clone();
            vm[[0, t]] -= h;
            let fd = (loss(&vp, &a, &y, &b, lambda) - loss(&vm, &a, &y, &b, lambda)) / (2.0 * h);
            let analytic = delta[[0, t]] + lambda / 2.0 * v[[0, t]];
            assert!((fd - analytic).abs() <= 1e-5 * analytic.abs().max(1e-8), "{fd} {analytic}");
        }
    }

    #[test]
    fn coefficient_gradient_matches_finite_differences() {
        let a = MvarCoefficients::new(vec![array![[0.3, -0.2], [0.1, 0.4]], array![[0.05, 0.0], [-0.1, 0.2]]]).unwrap();
        let b = array![[1.0, 0.2], [0.3, 0.8], [0.5, 0.5]];
        let y = Array2::from_shape_fn((3, 9), |(i, t)| ((i * 5 + t * 3) as f64).cos());
        let v = Array2::from_shape_fn((2, 9), |(i, t)| 0.1 * ((i + t) as f64).sin());
        let x = forward(&v, &a);
        let delta = backward(&x, &y, &b, &a, &[true; 9], 1.0 / 9.0);
        let h = 1e-6;
        for k in 0..2 {
            for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                let mut analytic = 0.0;
                for t in 2..9 {
                    analytic += delta[[i, t]] * x[[j, t - k - 1]];
                }
                let mut ap = a.clone();
                ap.lags_mut()[k][[i, j]] += h;
                let mut am = a.clone();
                am.lags_mut()[k][[i, j]] -= h;
                // Hold v fixed; the lambda term on v does not depend on A.
                let fd = (loss(&v, &ap, &y, &b, 0.0) - loss(&v, &am, &y, &b, 0.0)) / (2.0 * h);
                assert!((fd - analytic).abs() <= 1e-5 * analytic.abs().max(1e-6), "{fd} {analytic}");
            }
        }
    }

    #[test]
    fn converges_on_model_data() {
        let (a, b) = preset_bivariate(1);
        let noise = NoiseSpec::new(1.0, 0.1).unwrap();
        let x = simulate_latent(&a, noise, 60, 1, 2).unwrap().series;
        let y = observe(&b, &x, noise, 3).unwrap();
        let problem = StateSpaceProblem::new(y, b, 1).unwrap();
        let cfg = SolverConfig {
            step_size: 0.1,
            momentum: 0.99,
            tolerance: 1e-6,
            max_iterations: 20_000,
            ..SolverConfig::default()
        };
        let fit = backprop_fit(&problem, &Hyperparameters::with_lambda(0.01), &cfg, &Init::default()).unwrap();
        assert!(fit.converged);
        assert!(fit.final_objective() < fit.objective_trace[0]);
        assert!((fit.a_hat.lag(1)[[1, 0]] - 0.7).abs() < 0.3);
    }
}
