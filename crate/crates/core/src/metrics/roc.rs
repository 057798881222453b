use crate::error::{arg_err, dim_err, Result};
use ndarray::ArrayView2;

/// ROC curve over a descending threshold sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    /// Descending; the first entry lies above every score so the curve
    /// starts at `(0, 0)`.
    pub thresholds: Vec<f64>,
    pub tpr: Vec<f64>,
    pub fpr: Vec<f64>,
    pub area: f64,
    /// False positives were distance weighted.
    pub weighted: bool,
}

fn active_mask(n: usize, active: &[usize]) -> Result<Vec<bool>> {
    let mut mask = vec![false; n];
    for &i in active {
        if i >= n {
            return arg_err(format!("active index {i} out of range for {n} sources"));
        }
        mask[i] = true;
    }
    let n_active = mask.iter().filter(|&&m| m).count();
    if n_active == 0 {
        return arg_err("the active set is empty");
    }
    if n_active == n {
        return arg_err("the active set has an empty complement");
    }
    Ok(mask)
}

fn check_scores(q: &[f64]) -> Result<()> {
    if let Some(v) = q.iter().find(|v| !v.is_finite()) {
        return arg_err(format!("scores must be finite, got {v}"));
    }
    Ok(())
}

fn trapezoid(fpr: &[f64], tpr: &[f64]) -> f64 {
    fpr.windows(2)
        .zip(tpr.windows(2))
        .map(|(f, t)| (f[1] - f[0]) * (t[0] + t[1]) / 2.0)
        .sum()
}

/// Sweep every distinct score (plus 0 and 1) from the top. `fp_weight[i]`
/// is the cost of a false positive at `i`.
fn sweep(q: &[f64], mask: &[bool], fp_weight: &[f64], weighted: bool) -> Result<RocCurve> {
    let n_active = mask.iter().filter(|&&m| m).count() as f64;
    let fp_total: f64 = (0..q.len()).filter(|&i| !mask[i]).map(|i| fp_weight[i]).sum();
    if !(fp_total > 0.0) {
        return arg_err("false-positive weights sum to zero over the inactive set");
    }
    let mut order: Vec<usize> = (0..q.len()).collect();
    order.sort_by(|&a, &b| q[b].total_cmp(&q[a]));
    let top = q.iter().cloned().fold(1.0, f64::max);

    let mut thresholds = vec![top.next_up()];
    let mut tpr = vec![0.0];
    let mut fpr = vec![0.0];
    let (mut tp, mut fp) = (0.0, 0.0);
    let mut push = |theta: f64, tp: f64, fp: f64| {
        thresholds.push(theta);
        tpr.push(tp / n_active);
        fpr.push((fp / fp_total).min(1.0));
    };
    if q[order[0]] < 1.0 {
        push(1.0, 0.0, 0.0);
    }
    let mut k = 0;
    let mut last = 1.0;
    while k < order.len() {
        let theta = q[order[k]];
        while k < order.len() && q[order[k]] == theta {
            let i = order[k];
            if mask[i] {
                tp += 1.0;
            } else {
                fp += fp_weight[i];
            }
            k += 1;
        }
        push(theta, tp, fp);
        last = theta;
    }
    if last > 0.0 {
        push(0.0, tp, fp);
    }
    let area = trapezoid(&fpr, &tpr);
    Ok(RocCurve {
        thresholds,
        tpr,
        fpr,
        area,
        weighted,
    })
}

/// Classical ROC of the scores `q` (usually normalized source energies)
/// against the true active set, selecting `{i : q_i >= theta}`.
pub fn roc(q: &[f64], active: &[usize]) -> Result<RocCurve> {
    check_scores(q)?;
    let mask = active_mask(q.len(), active)?;
    sweep(q, &mask, &vec![1.0; q.len()], false)
}

/// ROC with distance-weighted false positives: `FP(theta)` sums `xi_i`
/// over the selected inactive indices and is normalized by
/// `mu = sum_{inactive} xi_i / |inactive|`.
pub fn weighted_roc(q: &[f64], active: &[usize], xi: &[f64]) -> Result<RocCurve> {
    check_scores(q)?;
    if xi.len() != q.len() {
        return dim_err(format!("{} weights for {} scores", xi.len(), q.len()));
    }
    if xi.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return arg_err("false-positive weights must be finite and nonnegative");
    }
    let mask = active_mask(q.len(), active)?;
    sweep(q, &mask, xi, true)
}

/// ROC evaluated on a caller-supplied threshold list. The list is sorted
/// descending and the curve is closed at `(0, 0)` and `(1, 1)`.
pub fn roc_at_thresholds(q: &[f64], active: &[usize], xi: Option<&[f64]>, thresholds: &[f64]) -> Result<RocCurve> {
    check_scores(q)?;
    let mask = active_mask(q.len(), active)?;
    let ones = vec![1.0; q.len()];
    let w = match xi {
        Some(xi) if xi.len() == q.len() => xi,
        Some(xi) => return dim_err(format!("{} weights for {} scores", xi.len(), q.len())),
        None => &ones,
    };
    let n_active = mask.iter().filter(|&&m| m).count() as f64;
    let fp_total: f64 = (0..q.len()).filter(|&i| !mask[i]).map(|i| w[i]).sum();
    if !(fp_total > 0.0) {
        return arg_err("false-positive weights sum to zero over the inactive set");
    }
    let mut th: Vec<f64> = thresholds.to_vec();
    th.sort_by(|a, b| b.total_cmp(a));
    let mut curve = RocCurve {
        thresholds: vec![f64::INFINITY],
        tpr: vec![0.0],
        fpr: vec![0.0],
        area: 0.0,
        weighted: xi.is_some(),
    };
    for theta in th.into_iter().chain([f64::NEG_INFINITY]) {
        let (mut tp, mut fp) = (0.0, 0.0);
        for i in 0..q.len() {
            if q[i] >= theta {
                if mask[i] {
                    tp += 1.0;
                } else {
                    fp += w[i];
                }
            }
        }
        curve.thresholds.push(theta);
        curve.tpr.push(tp / n_active);
        curve.fpr.push((fp / fp_total).min(1.0));
    }
    curve.area = trapezoid(&curve.fpr, &curve.tpr);
    Ok(curve)
}

/// Distance from every point to its nearest ground-truth location.
pub fn med(coords: ArrayView2<f64>, truth: &[[f64; 3]]) -> Result<Vec<f64>> {
    if truth.is_empty() {
        return arg_err("MED needs at least one ground-truth location");
    }
    if coords.ncols() != 3 {
        return dim_err(format!("coordinates must be N x 3, got {} columns", coords.ncols()));
    }
    Ok(coords
        .rows()
        .into_iter()
        .map(|r| {
            truth
                .iter()
                .map(|s| ((r[0] - s[0]).powi(2) + (r[1] - s[1]).powi(2) + (r[2] - s[2]).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min)
        })
        .collect())
}

/// False-positive severity `log10(1 + 9 MED_i / max MED)`.
pub fn xi_weight(med: &[f64]) -> Result<Vec<f64>> {
    let max = med.iter().cloned().fold(0.0, f64::max);
    if !(max > 0.0) || !max.is_finite() {
        return arg_err("xi weights need a positive, finite maximum distance");
    }
    Ok(med.iter().map(|d| (1.0 + 9.0 * d / max).log10()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn perfect_and_inverted() {
        let q = [1.0, 0.0, 1.0, 0.0, 0.0];
        let c = roc(&q, &[0, 2]).unwrap();
        assert_eq!(c.area, 1.0);
        assert_eq!((c.tpr[0], c.fpr[0]), (0.0, 0.0));
        assert_eq!((*c.tpr.last().unwrap(), *c.fpr.last().unwrap()), (1.0, 1.0));
        let inv: Vec<f64> = q.iter().map(|v| 1.0 - v).collect();
        assert_eq!(roc(&inv, &[0, 2]).unwrap().area, 0.0);
    }

    #[test]
    fn all_tied_is_chance() {
        let c = roc(&[0.3; 6], &[1, 4]).unwrap();
        assert!((c.area - 0.5).abs() < 1e-15);
    }

    #[test]
    fn custom_thresholds_agree_on_the_exact_grid() {
        let q = [0.9, 0.2, 0.5, 0.5, 1.0, 0.0, 0.7];
        let xi = [0.1, 0.9, 0.3, 0.0, 0.5, 1.0, 0.2];
        let exact = weighted_roc(&q, &[2, 4], &xi).unwrap();
        let grid = roc_at_thresholds(&q, &[2, 4], Some(&xi), &[1.0, 0.9, 0.7, 0.5, 0.2, 0.0]).unwrap();
        assert!((exact.area - grid.area).abs() < 1e-15);
    }

    #[test]
    fn constant_xi_matches_classical() {
        let q = [0.9, 0.2, 0.5, 0.4, 1.0, 0.0, 0.7];
        let a = roc(&q, &[1, 3]).unwrap().area;
        let w = weighted_roc(&q, &[1, 3], &[0.4; 7]).unwrap().area;
        assert!((a - w).abs() < 1e-15);
    }

    #[test]
    fn distances() {
        let coords = array![[3.0, 4.0, 0.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]];
        let d = med(coords.view(), &[[0.0, 0.0, 0.0]]).unwrap();
        assert_eq!(d, vec![5.0, 0.0, 1.0]);
        let xi = xi_weight(&[0.0, 1.0, 9.0]).unwrap();
        assert_eq!(xi[0], 0.0);
        assert!((xi[1] - 2f64.log10()).abs() < 1e-15);
        assert!((xi[2] - 1.0).abs() < 1e-15);
        assert!(xi_weight(&[0.0, 0.0]).is_err());
        assert!(med(coords.view(), &[]).is_err());
    }

    #[test]
    fn errors() {
        assert!(roc(&[0.1, 0.2], &[]).is_err());
        assert!(roc(&[0.1, 0.2], &[0, 1]).is_err());
        assert!(weighted_roc(&[0.1, 0.2], &[0], &[1.0, 0.0]).is_err());
    }
}
