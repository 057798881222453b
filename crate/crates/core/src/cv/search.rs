use super::partition::{make_partition, CviPartition};
use crate::error::{arg_err, dim_err, Result};
use crate::model::{LeadField, ObservedSeries};
use crate::rng::derive_seed;
use crate::solvers::{fit, FitResult, Hyperparameters, Init, Solver, SolverConfig, StateSpaceProblem};
use crate::MpssError;
use ndarray::linalg::general_mat_mul;
use ndarray::{Array2, ArrayD, IxDyn};
use rayon::prelude::*;

const AXIS_NAMES: [&str; 5] = ["lambda", "l2_a", "l1_x", "l1_a", "l2_x"];

/// Cartesian grid over one to three hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchGrid {
    axes: Vec<(String, Vec<f64>)>,
}

impl SearchGrid {
    pub fn new(axes: Vec<(String, Vec<f64>)>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 3 {
            return arg_err(format!("a search grid has 1 to 3 axes, got {}", axes.len()));
        }
        for (i, (name, values)) in axes.iter().enumerate() {
            if !AXIS_NAMES.contains(&name.as_str()) {
                return arg_err(format!("unknown grid axis '{name}'"));
            }
            if axes[..i].iter().any(|(other, _)| other == name) {
                return arg_err(format!("grid axis '{name}' given twice"));
            }
            if values.is_empty() {
                return arg_err(format!("grid axis '{name}' has no values"));
            }
            if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return arg_err(format!("grid axis '{name}' must hold finite nonnegative values"));
            }
            if values.windows(2).any(|w| w[1] <= w[0]) {
                return arg_err(format!("grid axis '{name}' must be strictly increasing"));
            }
        }
        if !axes.iter().any(|(n, _)| n == "lambda") {
            return arg_err("a search grid needs a lambda axis");
        }
        Ok(Self { axes })
    }

    /// A 1-axis grid over `lambda`.
    pub fn line(lambdas: Vec<f64>) -> Result<Self> {
        Self::new(vec![("lambda".into(), lambdas)])
    }

    pub fn axes(&self) -> &[(String, Vec<f64>)] {
        &self.axes
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|(_, v)| v.len()).collect()
    }

    pub fn n_points(&self) -> usize {
        self.shape().iter().product()
    }

    /// Grid coordinates of flat index `flat` (last axis fastest).
    pub fn coords(&self, mut flat: usize) -> Vec<usize> {
        let shape = self.shape();
        let mut out = vec![0; shape.len()];
        for d in (0..shape.len()).rev() {
            out[d] = flat % shape[d];
            flat /= shape[d];
        }
        out
    }

    /// `base` with the axes set to the values at `coords`.
    pub fn hyperparameters(&self, base: &Hyperparameters, coords: &[usize]) -> Hyperparameters {
        let mut hp = *base;
        for ((name, values), &c) in self.axes.iter().zip(coords) {
            hp.set(name, values[c]).expect("axis names are validated");
        }
        hp
    }
}

/// `n` values spaced evenly in log10 between `lo` and `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return arg_err(format!("log spacing needs 0 < lo < hi, got {lo} and {hi}"));
    }
    match n {
        0 => arg_err("log spacing needs at least one value"),
        1 => Ok(vec![lo]),
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            let mut v: Vec<f64> = (0..n).map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)).collect();
            v[0] = lo;
            v[n - 1] = hi;
            Ok(v)
        }
    }
}

/// Cross-validation settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvConfig {
    pub folds: usize,
    /// Seed of the partition; fold fits derive their own seeds from it.
    pub seed: u64,
    /// Values for the hyperparameters that are not grid axes.
    pub base: Hyperparameters,
    /// Start each fold fit from the same fold's fit at the previous point.
    pub warm_start: bool,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            folds: 5,
            seed: 0,
            base: Hyperparameters::default(),
            warm_start: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CvResult {
    pub grid: SearchGrid,
    pub partition: CviPartition,
    /// Prediction error per grid point; `+inf` marks a point whose fold fits
    /// failed numerically.
    pub pe_values: ArrayD<f64>,
    pub best_point: Vec<usize>,
    pub best_hp: Hyperparameters,
    /// Fit on all samples at `best_hp`.
    pub refit: FitResult,
    pub fold_fits: usize,
    pub failed_points: usize,
}

/// Mean squared prediction error of the held-out samples,
/// `1/((T-P) M K E) sum_k sum_e sum_{t in S_k} |y_t - B x_t^(k)|^2`.
pub fn prediction_error(
    y: &ObservedSeries,
    b: &LeadField,
    order: usize,
    fold_fits: &[FitResult],
    partition: &CviPartition,
) -> Result<f64> {
    let k = partition.k();
    if fold_fits.len() != k {
        return arg_err(format!("expected {k} fold fits, got {}", fold_fits.len()));
    }
    let t_len = y.n_samples();
    if partition.n_samples() != t_len {
        return dim_err(format!("partition covers {} samples, series has {t_len}", partition.n_samples()));
    }
    if t_len <= order {
        return dim_err(format!("T={t_len} must exceed the model order P={order}"));
    }
    let m = b.n_sensors();
    let mut total = 0.0;
    for (fold, fit) in fold_fits.iter().enumerate() {
        let x = &fit.x_hat;
        if x.n_epochs() != y.n_epochs() || x.n_samples() != t_len || x.n_rows() != b.n_sources() {
            return dim_err(format!("fold {fold} states do not match the observations"));
        }
        let held = partition.held_out(fold);
        for (xe, ye) in x.epochs().iter().zip(y.epochs()) {
            let mut r: Array2<f64> = ye.clone();
            general_mat_mul(-1.0, b.matrix(), xe, 1.0, &mut r);
            for &t in &held {
                total += r.column(t).iter().map(|v| v * v).sum::<f64>();
            }
        }
    }
    Ok(total / ((t_len - order) * m * k * y.n_epochs()) as f64)
}

fn is_numerical_failure(err: &MpssError) -> bool {
    matches!(err, MpssError::Divergence { .. } | MpssError::Singular(_))
}

fn fold_fit(
    problem: &StateSpaceProblem,
    partition: &CviPartition,
    fold: usize,
    solver: Solver,
    hp: &Hyperparameters,
    cfg: &SolverConfig,
    init: &Init,
) -> Result<FitResult> {
    let masked = problem.clone().with_mask(partition.training_mask(fold))?;
    let cfg = SolverConfig {
        rng_seed: derive_seed(cfg.rng_seed, fold as u64),
        ..*cfg
    };
    fit(solver, &masked, hp, &cfg, init)
}

/// K-fold prediction error of a single hyperparameter point.
pub fn cross_validate(
    problem: &StateSpaceProblem,
    partition: &CviPartition,
    solver: Solver,
    hp: &Hyperparameters,
    cfg: &SolverConfig,
) -> Result<f64> {
    let fits = (0..partition.k())
        .into_par_iter()
        .map(|fold| fold_fit(problem, partition, fold, solver, hp, cfg, &Init::default()))
        .collect::<Result<Vec<_>>>()?;
    prediction_error(problem.observations(), problem.lead_field(), problem.order(), &fits, partition)
}

/// Evaluate the K-fold prediction error at every grid point, pick the
/// smallest (first in lexicographic order on ties) and refit on all samples.
///
/// Fold fits may run in parallel on the current rayon pool; the result does
/// not depend on the scheduling.
pub fn grid_search(
    y: &ObservedSeries,
    b: &LeadField,
    order: usize,
    grid: &SearchGrid,
    cv: &CvConfig,
    solver: Solver,
    cfg: &SolverConfig,
) -> Result<CvResult> {
    cv.base.validate()?;
    let problem = StateSpaceProblem::new(y.clone(), b.clone(), order)?;
    let partition = make_partition(y.n_samples(), cv.folds, cv.seed)?;
    let k = partition.k();
    let n_points = grid.n_points();
    let hps: Vec<Hyperparameters> = (0..n_points).map(|i| grid.hyperparameters(&cv.base, &grid.coords(i))).collect();

    // fits[point][fold]; `None` marks a numerical failure.
    let mut fits: Vec<Vec<Option<FitResult>>> = vec![vec![None; k]; n_points];
    let run = |point: usize, fold: usize, init: &Init| -> Result<Option<FitResult>> {
        match fold_fit(&problem, &partition, fold, solver, &hps[point], cfg, init) {
            Ok(f) => Ok(Some(f)),
            Err(e) if is_numerical_failure(&e) => {
                log::debug!("grid point {point} fold {fold} failed: {e}");
                Ok(None)
            }
            Err(e) => Err(e),
        }
    };
    if cv.warm_start {
        let chains = (0..k)
            .into_par_iter()
            .map(|fold| {
                let mut chain = Vec::with_capacity(n_points);
                let mut init = Init::default();
                for point in 0..n_points {
                    let f = run(point, fold, &init)?;
                    if let Some(f) = &f {
                        init = Init::from_fit(f);
                    }
                    chain.push(f);
                }
                Ok(chain)
            })
            .collect::<Result<Vec<_>>>()?;
        for (fold, chain) in chains.into_iter().enumerate() {
            for (point, f) in chain.into_iter().enumerate() {
                fits[point][fold] = f;
            }
        }
    } else {
        let flat = (0..n_points * k)
            .into_par_iter()
            .map(|task| run(task / k, task % k, &Init::default()))
            .collect::<Result<Vec<_>>>()?;
        for (task, f) in flat.into_iter().enumerate() {
            fits[task / k][task % k] = f;
        }
    }

    let mut pe = Vec::with_capacity(n_points);
    let mut failed = 0;
    for point_fits in fits {
        match point_fits.into_iter().collect::<Option<Vec<_>>>() {
            Some(all) => pe.push(prediction_error(y, b, order, &all, &partition)?),
            None => {
                failed += 1;
                pe.push(f64::INFINITY);
            }
        }
    }
    let best = best_index(&pe).ok_or_else(|| {
        MpssError::Divergence {
            iteration: 0,
            objective: f64::INFINITY,
            minimum: f64::INFINITY,
        }
    })?;
    let best_hp = hps[best];
    let refit = fit(solver, &problem, &best_hp, cfg, &Init::default())?;
    Ok(CvResult {
        grid: grid.clone(),
        partition,
        pe_values: ArrayD::from_shape_vec(IxDyn(&grid.shape()), pe).expect("shape matches point count"),
        best_point: grid.coords(best),
        best_hp,
        refit,
        fold_fits: n_points * k,
        failed_points: failed,
    })
}

/// Index of the smallest finite value, first occurrence on ties.
pub fn best_index(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if v.is_finite() && best.is_none_or(|b| v < values[b]) {
            best = Some(i);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{observe, preset_bivariate, simulate_latent, NoiseSpec, Series};

    fn data(seed: u64) -> (ObservedSeries, LeadField) {
        let (a, b) = preset_bivariate(seed);
        let noise = NoiseSpec::new(1.0, 0.5).unwrap();
        let x = simulate_latent(&a, noise, 60, 1, seed + 1).unwrap().series;
        (observe(&b, &x, noise, seed + 2).unwrap(), b)
    }

    #[test]
    fn grid_validation() {
        assert!(SearchGrid::new(vec![("l2_a".into(), vec![1.0])]).is_err());
        assert!(SearchGrid::new(vec![("lambda".into(), vec![1.0, 1.0])]).is_err());
        assert!(SearchGrid::new(vec![("lambda".into(), vec![-1.0])]).is_err());
        assert!(SearchGrid::new(vec![("mu".into(), vec![1.0]), ("lambda".into(), vec![1.0])]).is_err());
        let g = SearchGrid::new(vec![("lambda".into(), vec![0.1, 1.0]), ("l2_a".into(), vec![0.0, 1.0, 2.0])]).unwrap();
        assert_eq!(g.n_points(), 6);
        assert_eq!(g.coords(4), vec![1, 1]);
        let hp = g.hyperparameters(&Hyperparameters::default(), &[1, 2]);
        assert_eq!((hp.lambda, hp.l2_a), (1.0, 2.0));
    }

    #[test]
    fn log_spacing() {
        let v = log_spaced(1e-3, 1e1, 5).unwrap();
        assert_eq!(v.len(), 5);
        assert!((v[1] - 1e-2).abs() < 1e-15);
        assert_eq!(v[4], 10.0);
    }

    #[test]
    fn ties_pick_first() {
        assert_eq!(best_index(&[2.0, 1.0, 1.0]), Some(1));
        assert_eq!(best_index(&[f64::INFINITY, 3.0]), Some(1));
        assert_eq!(best_index(&[f64::INFINITY]), None);
    }

    #[test]
    fn zero_states_give_held_out_energy() {
        let (y, b) = data(1);
        let part = make_partition(60, 5, 3).unwrap();
        let zero = FitResult {
            x_hat: Series::zeros(2, 60, 1),
            a_hat: crate::model::MvarCoefficients::zeros(2, 1),
            objective_trace: vec![0.0],
            iterations: 0,
            converged: false,
            wall_time_ms: 0.0,
            gd_schedule: Vec::new(),
        };
        let pe = prediction_error(&y, &b, 1, &vec![zero; 5], &part).unwrap();
        let energy = y.frobenius_sq();
        assert!((pe - energy / (59.0 * 5.0 * 5.0)).abs() < 1e-12 * pe);
    }

    #[test]
    fn single_point_grid() {
        let (y, b) = data(2);
        let grid = SearchGrid::line(vec![0.25]).unwrap();
        let cv = CvConfig { folds: 4, seed: 9, ..CvConfig::default() };
        let res = grid_search(&y, &b, 1, &grid, &cv, Solver::Ssals, &SolverConfig::default()).unwrap();
        assert_eq!(res.best_hp.lambda, 0.25);
        assert_eq!(res.fold_fits, 4);
        assert_eq!(res.pe_values.len(), 1);
        assert!(res.pe_values[[0]].is_finite());
        assert!(res.refit.converged);
    }

    #[test]
    fn warm_start_matches_cold_at_the_first_point() {
        let (y, b) = data(3);
        let grid = SearchGrid::line(log_spaced(0.01, 0.3, 4).unwrap()).unwrap();
        let cold = CvConfig { folds: 3, seed: 1, ..CvConfig::default() };
        let warm = CvConfig { warm_start: true, ..cold };
        let cfg = SolverConfig::default();
        let a = grid_search(&y, &b, 1, &grid, &cold, Solver::Ssals, &cfg).unwrap();
        let c = grid_search(&y, &b, 1, &grid, &warm, Solver::Ssals, &cfg).unwrap();
        assert_eq!(a.pe_values[[0]], c.pe_values[[0]]);
        assert!(c.pe_values.iter().all(|v| v.is_finite()));
    }
}
