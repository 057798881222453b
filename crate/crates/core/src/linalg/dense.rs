//! Small dense kernels used inside the block factorisation.

use ndarray::{Array2, ArrayViewMut2};

/// In-place lower Cholesky factor of a symmetric positive definite matrix.
/// Only the lower triangle is read; the strict upper triangle is zeroed.
pub(crate) fn cholesky_in_place(a: &mut Array2<f64>) -> Result<(), usize> {
    let n = a.nrows();
    for j in 0..n {
        let mut d = a[[j, j]];
        for k in 0..j {
            d -= a[[j, k]] * a[[j, k]];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(j);
        }
        let d = d.sqrt();
        a[[j, j]] = d;
        for i in j + 1..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= a[[i, k]] * a[[j, k]];
            }
            a[[i, j]] = s / d;
        }
        for i in 0..j {
            a[[i, j]] = 0.0;
        }
    }
    Ok(())
}

/// Solve `L X = B` in place (`L` lower triangular).
pub(crate) fn solve_lower(l: &Array2<f64>, mut b: ArrayViewMut2<f64>) {
    let n = l.nrows();
    for c in 0..b.ncols() {
        for i in 0..n {
            let mut s = b[[i, c]];
            for k in 0..i {
                s -= l[[i, k]] * b[[k, c]];
            }
            b[[i, c]] = s / l[[i, i]];
        }
    }
}

/// Solve `L^T X = B` in place.
pub(crate) fn solve_lower_t(l: &Array2<f64>, mut b: ArrayViewMut2<f64>) {
    let n = l.nrows();
    for c in 0..b.ncols() {
        for i in (0..n).rev() {
            let mut s = b[[i, c]];
            for k in i + 1..n {
                s -= l[[k, i]] * b[[k, c]];
            }
            b[[i, c]] = s / l[[i, i]];
        }
    }
}

/// Overwrite `s` with `S L^{-T}`.
pub(crate) fn right_solve_lower_t(s: &mut Array2<f64>, l: &Array2<f64>) {
    let n = l.nrows();
    for r in 0..s.nrows() {
        for c in 0..n {
            let mut v = s[[r, c]];
            for k in 0..c {
                v -= s[[r, k]] * l[[c, k]];
            }
            s[[r, c]] = v / l[[c, c]];
        }
    }
}

/// Solve the SPD system `A X = B`; `None` when `A` is not positive definite.
pub(crate) fn spd_solve(a: &Array2<f64>, b: &Array2<f64>) -> Option<Array2<f64>> {
    let mut l = a.clone();
    cholesky_in_place(&mut l).ok()?;
    let mut x = b.clone();
    solve_lower(&l, x.view_mut());
    solve_lower_t(&l, x.view_mut());
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn cholesky_reconstructs() {
        let a = array![[4.0, 2.0, 0.4], [2.0, 5.0, 1.0], [0.4, 1.0, 3.0]];
        let mut l = a.clone();
        cholesky_in_place(&mut l).unwrap();
        let back = l.dot(&l.t());
        for (x, y) in back.iter().zip(a.iter()) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn indefinite_is_rejected() {
        let mut a = array![[1.0, 2.0], [2.0, 1.0]];
        assert_eq!(cholesky_in_place(&mut a), Err(1));
    }

    #[test]
    fn spd_solve_matches() {
        let a = array![[4.0, 1.0], [1.0, 3.0]];
        let b = array![[1.0], [2.0]];
        let x = spd_solve(&a, &b).unwrap();
        let r = a.dot(&x) - &b;
        assert!(r.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn right_solve_inverts() {
        let l = array![[2.0, 0.0], [1.0, 3.0]];
        let s = array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]];
        let mut x = s.clone();
        right_solve_lower_t(&mut x, &l);
        let back = x.dot(&l.t());
        for (p, q) in back.iter().zip(s.iter()) {
            assert!((p - q).abs() < 1e-14);
        }
    }
}
