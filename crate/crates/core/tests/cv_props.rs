use mpss_core::cv::{best_index, make_partition, prediction_error, CviPartition};
use mpss_core::model::{observe, preset_bivariate, simulate_latent};
use mpss_core::solvers::{naive_hyperparameters, ssals_fit, FitResult, Init, SolverConfig, StateSpaceProblem};
use mpss_core::NoiseSpec;
use proptest::prelude::*;

fn problem(seed: u64, t: usize) -> StateSpaceProblem {
    let (a, b) = preset_bivariate(seed);
    let noise = NoiseSpec::new(1.0, 0.3).unwrap();
    let x = simulate_latent(&a, noise, t, 2, seed + 1).unwrap().series;
    let y = observe(&b, &x, noise, seed + 2).unwrap();
    StateSpaceProblem::new(y, b, 1).unwrap()
}

fn fold_fit(p: &StateSpaceProblem, part: &CviPartition, fold: usize) -> FitResult {
    let hp = naive_hyperparameters(0.3, 1.0, None, None, None).unwrap();
    let cfg = SolverConfig {
        tolerance: 1e-6,
        max_iterations: 500,
        ..SolverConfig::default()
    };
    let masked = p.clone().with_mask(part.training_mask(fold)).unwrap();
    ssals_fit(&masked, &hp, &cfg, &Init::default()).unwrap()
}

fn fold_fits(p: &StateSpaceProblem, part: &CviPartition) -> Vec<FitResult> {
    (0..part.k()).map(|fold| fold_fit(p, part, fold)).collect()
}

proptest! {
    #[test]
    fn partitions_are_balanced_without_long_runs(t in 2usize..300, k in 2usize..=10, seed in any::<u64>()) {
        prop_assume!(k <= t);
        let part = make_partition(t, k, seed).unwrap();
        let f = part.fold_of();
        prop_assert_eq!(f.len(), t);
        prop_assert!(f.iter().all(|&l| l < k));
        for w in f.chunks_exact(k) {
            let mut sorted = w.to_vec();
            sorted.sort_unstable();
            prop_assert_eq!(sorted, (0..k).collect::<Vec<_>>());
        }
        let tail = &f[t / k * k..];
        let mut distinct = tail.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        prop_assert_eq!(distinct.len(), tail.len());
        prop_assert!(f.windows(3).all(|w| !(w[0] == w[1] && w[1] == w[2])));
        let again = make_partition(t, k, seed).unwrap();
        prop_assert_eq!(again.fold_of(), f);
    }

    #[test]
    fn argmin_survives_positive_rescaling(
        v in prop::collection::vec(prop_oneof![3 => 0.0f64..10.0, 1 => Just(f64::INFINITY)], 1..30),
        s in 1e-6f64..1e6,
    ) {
        let scaled: Vec<f64> = v.iter().map(|x| x * s).collect();
        prop_assert_eq!(best_index(&v), best_index(&scaled));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn prediction_error_ignores_fold_numbering(seed in 0u64..1000, k in 2usize..6, rot in 1usize..5) {
        let p = problem(seed, 40);
        let part = make_partition(40, k, seed).unwrap();
        let fits = fold_fits(&p, &part);
        let pe = prediction_error(p.observations(), p.lead_field(), 1, &fits, &part).unwrap();
        // Relabel fold j as (j + rot) mod k and reorder the fits to match.
        let labels: Vec<usize> = part.fold_of().iter().map(|&l| (l + rot) % k).collect();
        let relabelled = CviPartition::from_labels(labels, k).unwrap();
        let mut permuted = fits.clone();
        for (j, f) in fits.into_iter().enumerate() {
            permuted[(j + rot) % k] = f;
        }
        let pe2 = prediction_error(p.observations(), p.lead_field(), 1, &permuted, &relabelled).unwrap();
        prop_assert!((pe - pe2).abs() <= 1e-12 * pe, "{} {}", pe, pe2);
    }

    #[test]
    fn held_out_samples_do_not_reach_their_fold_fit(seed in 0u64..1000, k in 2usize..6, shift in -10.0f64..10.0) {
        let p = problem(seed, 40);
        let part = make_partition(40, k, seed).unwrap();
        for fold in 0..k {
            let base = fold_fit(&p, &part, fold);
            let mut y = p.observations().clone();
            for e in y.epochs_mut() {
                for &t in &part.held_out(fold) {
                    e.column_mut(t).mapv_inplace(|v| v + shift);
                }
            }
            let perturbed = StateSpaceProblem::new(y, p.lead_field().clone(), 1).unwrap();
            let refit = fold_fit(&perturbed, &part, fold);
            prop_assert_eq!(&refit.x_hat, &base.x_hat);
            prop_assert_eq!(&refit.a_hat, &base.a_hat);
            prop_assert_eq!(&refit.objective_trace, &base.objective_trace);
        }
    }
}
