use mpss_core::metrics::{roc, rrse, rse, weighted_roc};
use mpss_core::Series;
use ndarray::{Array1, Array2};
use proptest::prelude::*;

/// Scores and an active set with at least one active and one inactive index.
fn scored(max_n: usize, levels: u32) -> impl Strategy<Value = (Vec<f64>, Vec<usize>)> {
    (2..=max_n).prop_flat_map(move |n| {
        (
            prop::collection::vec((0..=levels).prop_map(move |v| v as f64 / levels as f64), n),
            prop::collection::vec(any::<bool>(), n),
        )
            .prop_filter_map("need both classes", |(q, act)| {
                let active: Vec<usize> = (0..act.len()).filter(|&i| act[i]).collect();
                (!active.is_empty() && active.len() < act.len()).then_some((q, active))
            })
    })
}

/// Area from every distinct cut `q >= c`, plus the empty and full cuts.
fn brute_force_area(q: &[f64], active: &[usize], xi: &[f64]) -> f64 {
    let is_active: Vec<bool> = (0..q.len()).map(|i| active.contains(&i)).collect();
    let mut cuts: Vec<f64> = q.to_vec();
    cuts.push(f64::INFINITY);
    cuts.push(f64::NEG_INFINITY);
    cuts.sort_by(|a, b| b.total_cmp(a));
    cuts.dedup();
    let pos = active.len() as f64;
    let neg: f64 = (0..q.len()).filter(|&i| !is_active[i]).map(|i| xi[i]).sum();
    let points: Vec<(f64, f64)> = cuts
        .iter()
        .map(|&c| {
            let tp = (0..q.len()).filter(|&i| is_active[i] && q[i] >= c).count() as f64;
            let fp: f64 = (0..q.len()).filter(|&i| !is_active[i] && q[i] >= c).map(|i| xi[i]).sum();
            (fp / neg, tp / pos)
        })
        .collect();
    points.windows(2).map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0).sum()
}

proptest! {
    #[test]
    fn area_in_unit_interval_and_curve_monotone((q, active) in scored(40, 10)) {
        let c = roc(&q, &active).unwrap();
        prop_assert!((0.0..=1.0).contains(&c.area));
        for w in c.fpr.windows(2) { prop_assert!(w[1] >= w[0]); }
        for w in c.tpr.windows(2) { prop_assert!(w[1] >= w[0]); }
    }

    #[test]
    fn inverted_ranking_gives_complement((q, active) in scored(40, 10)) {
        let inv: Vec<f64> = q.iter().map(|v| 1.0 - v).collect();
        let a = roc(&q, &active).unwrap().area;
        let b = roc(&inv, &active).unwrap().area;
        prop_assert!((a + b - 1.0).abs() < 1e-12, "{} + {}", a, b);
    }

    #[test]
    fn matches_exhaustive_enumeration(
        (q, active) in scored(12, 6),
        w in prop::collection::vec(0.1f64..5.0, 12),
    ) {
        let ones = vec![1.0; q.len()];
        prop_assert!((roc(&q, &active).unwrap().area - brute_force_area(&q, &active, &ones)).abs() < 1e-12);
        let xi = &w[..q.len()];
        prop_assert!((weighted_roc(&q, &active, xi).unwrap().area - brute_force_area(&q, &active, xi)).abs() < 1e-12);
    }

    #[test]
    fn constant_inactive_weight_reduces_to_classical(
        (q, active) in scored(40, 10),
        c in 0.01f64..10.0,
        noise in prop::collection::vec(0.0f64..3.0, 40),
    ) {
        // Weights on active indices do not enter the curve.
        let xi: Vec<f64> = (0..q.len()).map(|i| if active.contains(&i) { noise[i] } else { c }).collect();
        let a = roc(&q, &active).unwrap().area;
        let w = weighted_roc(&q, &active, &xi).unwrap().area;
        prop_assert!((a - w).abs() < 1e-12);
    }

    #[test]
    fn far_false_positive_is_penalised_more(
        (q, active) in scored(30, 20),
        w in prop::collection::vec(0.1f64..5.0, 30),
    ) {
        let xi = &w[..q.len()];
        let mut inactive: Vec<usize> = (0..q.len()).filter(|i| !active.contains(i)).collect();
        prop_assume!(inactive.len() >= 2);
        inactive.sort_by(|&a, &b| xi[a].total_cmp(&xi[b]));
        let (low, high) = (inactive[0], inactive[inactive.len() - 1]);
        prop_assume!(xi[high] > xi[low]);
        // Swapping two inactive scores leaves the threshold set unchanged.
        let (top, bottom) = (q[low].max(q[high]), q[low].min(q[high]));
        let mut near = q.clone();
        near[low] = top;
        near[high] = bottom;
        let mut far = q.clone();
        far[low] = bottom;
        far[high] = top;
        let a_near = weighted_roc(&near, &active, xi).unwrap().area;
        let a_far = weighted_roc(&far, &active, xi).unwrap().area;
        prop_assert!(a_far <= a_near + 1e-12, "{} > {}", a_far, a_near);
    }

    #[test]
    fn rse_ignores_common_offset(
        x in prop::collection::vec(-5.0f64..5.0, 3..40),
        noise in prop::collection::vec(-0.5f64..0.5, 40),
        c in -100.0f64..100.0,
    ) {
        let x = Array1::from(x);
        prop_assume!(x.iter().any(|&v| (v - x[0]).abs() > 1e-3));
        let xh = &x + &Array1::from(noise[..x.len()].to_vec());
        let a = rse(xh.view(), x.view()).unwrap();
        let b = rse((&xh + c).view(), (&x + c).view()).unwrap();
        prop_assert!((a - b).abs() <= 1e-8 * a.max(1.0), "{} {}", a, b);
    }

    #[test]
    fn rrse_ignores_scale_of_estimate(
        vals in prop::collection::vec(-5.0f64..5.0, 6..60),
        s in 0.01f64..100.0,
    ) {
        let n = vals.len() / 3 * 3;
        let x = Series::single(Array2::from_shape_vec((3, n / 3), vals[..n].to_vec()).unwrap()).unwrap();
        let xh = Series::single(x.epoch(0).mapv(|v| v.sin() + 0.2 * v)).unwrap();
        let scaled = Series::single(xh.epoch(0) * s).unwrap();
        prop_assume!(x.epoch(0).iter().any(|v| v.abs() > 1e-3));
        let a = rrse(&xh, &x).unwrap();
        let b = rrse(&scaled, &x).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0), "{} {}", a, b);
    }
}
