use crate::error::{arg_err, Result};
use crate::rng::rng_from_seed;
use rand::seq::SliceRandom;

/// Assignment of every time index to one of `k` folds.
///
/// The series is cut into adjacent windows of length `k`; each complete
/// window holds a random permutation of the fold labels, so no fold gets
/// more than two consecutive samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CviPartition {
    fold_of: Vec<usize>,
    k: usize,
    seed: u64,
}

impl CviPartition {
    /// Build from explicit labels. Labels must lie in `0..k`.
    pub fn from_labels(fold_of: Vec<usize>, k: usize) -> Result<Self> {
        if k < 2 {
            return arg_err(format!("need at least 2 folds, got {k}"));
        }
        if let Some(&bad) = fold_of.iter().find(|&&f| f >= k) {
            return arg_err(format!("fold label {bad} out of range for k={k}"));
        }
        Ok(Self { fold_of, k, seed: 0 })
    }

    pub fn fold_of(&self) -> &[usize] {
        &self.fold_of
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_samples(&self) -> usize {
        self.fold_of.len()
    }

    /// Time indices held out in fold `fold`.
    pub fn held_out(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&t| self.fold_of[t] == fold).collect()
    }

    /// Time mask for fitting fold `fold`: `false` at its held-out samples.
    pub fn training_mask(&self, fold: usize) -> Vec<bool> {
        self.fold_of.iter().map(|&f| f != fold).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.fold_of {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Seeded blocked partition of `0..t` into `k` folds. A trailing partial
/// window gets distinct labels drawn without replacement.
pub fn make_partition(t: usize, k: usize, seed: u64) -> Result<CviPartition> {
    if k < 2 {
        return arg_err(format!("need at least 2 folds, got {k}"));
    }
    if k > t {
        return arg_err(format!("{k} folds requested for only {t} samples"));
    }
    let mut rng = rng_from_seed(seed);
    let mut fold_of = Vec::with_capacity(t);
    let mut labels: Vec<usize> = (0..k).collect();
    while fold_of.len() < t {
        labels.shuffle(&mut rng);
        let take = k.min(t - fold_of.len());
        fold_of.extend_from_slice(&labels[..take]);
    }
    Ok(CviPartition { fold_of, k, seed })
}
