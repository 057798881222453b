use super::dense::{cholesky_in_place, right_solve_lower_t, solve_lower, solve_lower_t};
use super::WOperator;
use crate::error::{dim_err, Result};
use crate::MpssError;
use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2, ArrayView2};

/// Lower block band of a symmetric block matrix with `T x T` blocks of size
/// `N x N` and block half-bandwidth `P`.
#[derive(Debug, Clone)]
struct LowerBand {
    n: usize,
    t: usize,
    bw: usize,
    /// `blocks[i * (bw + 1) + d]` holds block `(i, i - d)`.
    blocks: Vec<Array2<f64>>,
}

impl LowerBand {
    fn zeros(n: usize, t: usize, bw: usize) -> Self {
        Self {
            n,
            t,
            bw,
            blocks: (0..t * (bw + 1)).map(|_| Array2::zeros((n, n))).collect(),
        }
    }

    fn idx(&self, i: usize, d: usize) -> usize {
        i * (self.bw + 1) + d
    }

    fn block(&self, i: usize, d: usize) -> &Array2<f64> {
        &self.blocks[self.idx(i, d)]
    }

    fn block_mut(&mut self, i: usize, d: usize) -> &mut Array2<f64> {
        let k = self.idx(i, d);
        &mut self.blocks[k]
    }

    fn storage_len(&self) -> usize {
        self.blocks.len() * self.n * self.n
    }
}

/// The state system `D_L^T D_L (x) B^T B + lambda (I - W)^T (I - W) + ridge I`
/// together with its block-banded Cholesky factor.
///
/// Immutable once built; solves only read the factor.
#[derive(Debug, Clone)]
pub struct StateSystem {
    gram_observation: Array2<f64>,
    mask: Vec<bool>,
    lambda: f64,
    ridge: f64,
    w: WOperator,
    system: LowerBand,
    factor: LowerBand,
}

/// Assemble and factorise the state system for lead field `b` (`M x N`).
pub fn assemble_state_system(
    b: ArrayView2<f64>,
    w: &WOperator,
    lambda: f64,
    mask: &[bool],
) -> Result<StateSystem> {
    StateSystem::assemble(b, w, lambda, 0.0, mask)
}

impl StateSystem {
    /// Like [`assemble_state_system`] with an extra `ridge * I` term, which is
    /// the state penalty `lambda_2^(x) ||X||_F^2` of the multi-epoch objective.
    pub fn assemble(
        b: ArrayView2<f64>,
        w: &WOperator,
        lambda: f64,
        ridge: f64,
        mask: &[bool],
    ) -> Result<Self> {
        let n = w.n_sources();
        let t = w.n_samples();
        let p = w.lag_order();
        if b.ncols() != n {
            return dim_err(format!("lead field has {} columns, W has {n} sources", b.ncols()));
        }
        if mask.len() != t {
            return dim_err(format!("mask has length {}, series has {t} samples", mask.len()));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) || !(ridge >= 0.0 && ridge.is_finite()) {
            return Err(MpssError::InvalidArgument(format!(
                "lambda and ridge must be finite and nonnegative (lambda={lambda}, ridge={ridge})"
            )));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(MpssError::InvalidArgument("lead field has non-finite entries".into()));
        }
        let gram = b.t().dot(&b);

        // G_0 = I, G_a = -A_a: the blocks of row t >= P of (I - W).
        let mut g: Vec<Array2<f64>> = Vec::with_capacity(p + 1);
        g.push(Array2::eye(n));
        for a in w.coefficients().lags() {
            g.push(-a);
        }
        // H[a][b - a] = G_a^T G_b for a <= b.
        let mut h: Vec<Vec<Array2<f64>>> = Vec::with_capacity(p + 1);
        for a in 0..=p {
            let row = (a..=p).map(|bb| g[a].t().dot(&g[bb])).collect();
            h.push(row);
        }

        let mut system = LowerBand::zeros(n, t, p);
        for k in 0..t {
            if k < p {
                let blk = system.block_mut(k, 0);
                for i in 0..n {
                    blk[[i, i]] += 1.0;
                }
                continue;
            }
            for a in 0..=p {
                for bb in a..=p {
                    *system.block_mut(k - a, bb - a) += &h[a][bb - a];
                }
            }
        }
        for blk in system.blocks.iter_mut() {
            *blk *= lambda;
        }
        for (k, &keep) in mask.iter().enumerate() {
            let blk = system.block_mut(k, 0);
            if keep {
                *blk += &gram;
            }
            if ridge > 0.0 {
                for i in 0..n {
                    blk[[i, i]] += ridge;
                }
            }
        }

        let factor = factorize(&system).map_err(|(k, j)| {
            let held_out = mask.iter().filter(|m| !**m).count();
            MpssError::Singular(format!(
                "state system is not positive definite at time block {k}, component {j} \
                 (lambda={lambda}, ridge={ridge}, {held_out} masked samples, N={n}); \
                 use lambda > 0 or a full-rank lead field"
            ))
        })?;

        Ok(Self {
            gram_observation: gram,
            mask: mask.to_vec(),
            lambda,
            ridge,
            w: w.clone(),
            system,
            factor,
        })
    }

    pub fn n_sources(&self) -> usize {
        self.system.n
    }

    pub fn n_samples(&self) -> usize {
        self.system.t
    }

    pub fn dim(&self) -> usize {
        self.system.n * self.system.t
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn gram_observation(&self) -> &Array2<f64> {
        &self.gram_observation
    }

    pub fn w_operator(&self) -> &WOperator {
        &self.w
    }

    /// Number of `f64` values held by the band and its factor.
    pub fn storage_len(&self) -> usize {
        self.system.storage_len() + self.factor.storage_len() + self.gram_observation.len()
    }

    /// Solve the system for each column of `rhs` (`NT x E`).
    ///
    /// Columns are typically `(D_L^T D_L (x) I_N) vec(B^T Y^(e))`, one per epoch.
    pub fn solve_states(&self, rhs: &Array2<f64>) -> Result<Array2<f64>> {
        if rhs.nrows() != self.dim() {
            return dim_err(format!(
                "right-hand side has {} rows, system dimension is {}",
                rhs.nrows(),
                self.dim()
            ));
        }
        let LowerBand { n, t, bw, .. } = self.factor;
        let mut x = rhs.clone();
        // Forward: L z = b.
        for i in 0..t {
            let lo = i.saturating_sub(bw);
            for k in lo..i {
                let (done, mut cur) = x.view_mut().split_at(ndarray::Axis(0), i * n);
                let zk = done.slice(s![k * n..(k + 1) * n, ..]);
                let mut bi = cur.slice_mut(s![0..n, ..]);
                general_mat_mul(-1.0, self.factor.block(i, i - k), &zk, 1.0, &mut bi);
            }
            solve_lower(self.factor.block(i, 0), x.slice_mut(s![i * n..(i + 1) * n, ..]));
        }
        // Backward: L^T x = z.
        for i in (0..t).rev() {
            let hi = (i + bw).min(t - 1);
            for k in i + 1..=hi {
                let (mut head, tail) = x.view_mut().split_at(ndarray::Axis(0), (i + 1) * n);
                let xk = tail.slice(s![(k - i - 1) * n..(k - i) * n, ..]);
                let mut bi = head.slice_mut(s![i * n..(i + 1) * n, ..]);
                general_mat_mul(-1.0, &self.factor.block(k, k - i).t(), &xk, 1.0, &mut bi);
            }
            solve_lower_t(self.factor.block(i, 0), x.slice_mut(s![i * n..(i + 1) * n, ..]));
        }
        Ok(x)
    }

    /// Build the masked right-hand side `vec(B^T Y) * mask` for one epoch of
    /// observations `y` (`M x T`).
    pub fn observation_rhs(&self, b: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<ndarray::Array1<f64>> {
        if y.ncols() != self.n_samples() || b.ncols() != self.n_sources() || b.nrows() != y.nrows() {
            return dim_err(format!(
                "observations {}x{} and lead field {}x{} do not match a system with N={}, T={}",
                y.nrows(),
                y.ncols(),
                b.nrows(),
                b.ncols(),
                self.n_sources(),
                self.n_samples()
            ));
        }
        let mut bty = b.t().dot(&y);
        for (k, &keep) in self.mask.iter().enumerate() {
            if !keep {
                bty.column_mut(k).fill(0.0);
            }
        }
        Ok(super::vec_series(bty.view()))
    }

    /// The represented `NT x NT` matrix, for verification on small problems.
    pub fn to_dense(&self) -> Array2<f64> {
        let LowerBand { n, t, bw, .. } = self.system;
        let mut out = Array2::zeros((n * t, n * t));
        for i in 0..t {
            for d in 0..=bw.min(i) {
                let j = i - d;
                let blk = self.system.block(i, d);
                out.slice_mut(s![i * n..(i + 1) * n, j * n..(j + 1) * n]).assign(blk);
                if d > 0 {
                    out.slice_mut(s![j * n..(j + 1) * n, i * n..(i + 1) * n]).assign(&blk.t());
                }
            }
        }
        out
    }
}

/// Block-banded Cholesky `S = L L^T`. On failure returns `(time block, component)`.
fn factorize(system: &LowerBand) -> std::result::Result<LowerBand, (usize, usize)> {
    let LowerBand { n, t, bw, .. } = *system;
    let mut l = LowerBand::zeros(n, t, bw);
    for i in 0..t {
        let lo = i.saturating_sub(bw);
        for j in lo..i {
            let mut blk = system.block(i, i - j).clone();
            // Subtract sum_k L_{i,k} L_{j,k}^T over k with both blocks in band.
            for k in lo..j {
                general_mat_mul(-1.0, l.block(i, i - k), &l.block(j, j - k).t(), 1.0, &mut blk);
            }
            right_solve_lower_t(&mut blk, l.block(j, 0));
            *l.block_mut(i, i - j) = blk;
        }
        let mut diag = system.block(i, 0).clone();
        for k in lo..i {
            let lik = l.block(i, i - k);
            general_mat_mul(-1.0, lik, &lik.t(), 1.0, &mut diag);
        }
        cholesky_in_place(&mut diag).map_err(|j| (i, j))?;
        *l.block_mut(i, 0) = diag;
    }
    Ok(l)
}
