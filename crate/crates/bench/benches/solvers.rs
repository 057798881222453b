use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mpss_core::cv::{grid_search, log_spaced, CvConfig, SearchGrid};
use mpss_core::linalg::{build_w, StateSystem};
use mpss_core::model::{observe, preset_bivariate, preset_resting_state, simulate_latent, uniform_lead_field};
use mpss_core::solvers::{hgdals_fit, naive_hyperparameters, ssals_fit, ssgd_fit, Init, Solver, SolverConfig, StateSpaceProblem};
use mpss_core::NoiseSpec;
use ndarray::Array2;
use std::hint::black_box;

fn bivariate() -> StateSpaceProblem {
    let (a, b) = preset_bivariate(1);
    let noise = NoiseSpec::new(1.0, 0.1).unwrap();
    let x = simulate_latent(&a, noise, 200, 1, 2).unwrap().series;
    let y = observe(&b, &x, noise, 3).unwrap();
    StateSpaceProblem::new(y, b, 1).unwrap()
}

fn state_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("state_solve");
    let a = preset_resting_state();
    for &t in &[50usize, 200, 800] {
        let b = uniform_lead_field(32, 5, 4);
        let w = build_w(&a, t).unwrap();
        let mask = vec![true; t];
        let rhs = Array2::from_shape_fn((5 * t, 4), |(i, j)| ((i * 7 + j) as f64).sin());
        group.bench_with_input(BenchmarkId::from_parameter(t), &t, |bench, _| {
            bench.iter(|| {
                let sys = StateSystem::assemble(b.matrix().view(), &w, 0.1, 0.0, &mask).unwrap();
                black_box(sys.solve_states(&rhs).unwrap())
            })
        });
    }
    group.finish();
}

fn bivariate_fits(c: &mut Criterion) {
    let problem = bivariate();
    let hp = naive_hyperparameters(0.1, 1.0, None, None, None).unwrap();
    let cfg = SolverConfig::default();
    let mut group = c.benchmark_group("bivariate_fit");
    group.bench_function("ssals", |b| b.iter(|| black_box(ssals_fit(&problem, &hp, &cfg, &Init::default()).unwrap())));
    group.bench_function("hgdals", |b| b.iter(|| black_box(hgdals_fit(&problem, &hp, &cfg, &Init::default()).unwrap())));
    group.sample_size(10);
    group.bench_function("ssgd", |b| b.iter(|| black_box(ssgd_fit(&problem, &hp, &cfg, &Init::default()).unwrap())));
    group.finish();
}

fn line_search(c: &mut Criterion) {
    let problem = bivariate();
    let grid = SearchGrid::line(log_spaced(0.01, 1.0, 8).unwrap()).unwrap();
    let cv = CvConfig::default();
    let cfg = SolverConfig {
        tolerance: 1e-4,
        ..SolverConfig::default()
    };
    let mut group = c.benchmark_group("cv");
    group.sample_size(10);
    group.bench_function("line_8x5", |b| {
        b.iter(|| {
            black_box(
                grid_search(problem.observations(), problem.lead_field(), 1, &grid, &cv, Solver::Ssals, &cfg).unwrap(),
            )
        })
    });
    group.finish();
}

criterion_group!(benches, state_solve, bivariate_fits, line_search);
criterion_main!(benches);
