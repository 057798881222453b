//! Monte Carlo check that AROC and AWROC score random solutions at chance.
//!
//! Ground truth and candidate solutions are random images on a square grid:
//! uniform noise, optionally Gaussian smoothed, thresholded and reduced to
//! its largest connected components.

use super::roc::{roc, weighted_roc, xi_weight};
use crate::error::{arg_err, Result};
use crate::rng::{derive_seed, rng_from_seed, Rng};
use rand::Rng as _;
use rayon::prelude::*;

/// Harness settings.
#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    /// Side length of the square image.
    pub grid: usize,
    /// Gaussian blur width in grid cells.
    pub sigma: f64,
    /// Number of largest connected components kept in sparse images.
    pub components: usize,
    /// One scenario per threshold (less and more sparse).
    pub thresholds: Vec<f64>,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            grid: 32,
            sigma: 2.0,
            components: 10,
            thresholds: vec![0.5, 0.8],
        }
    }
}

/// Boxplot statistics of one family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let mut s = values.to_vec();
        s.sort_by(f64::total_cmp);
        let quantile = |p: f64| {
            let h = p * (n - 1) as f64;
            let lo = h.floor() as usize;
            let hi = h.ceil() as usize;
            s[lo] + (h - lo as f64) * (s[hi] - s[lo])
        };
        Self {
            mean,
            std: var.sqrt(),
            min: s[0],
            q1: quantile(0.25),
            median: quantile(0.5),
            q3: quantile(0.75),
            max: s[n - 1],
        }
    }
}

/// Results for one sparsity threshold. Index `j` of each array is solution
/// family `j + 1`: raw, thresholded, components, smoothed, smoothed
/// thresholded, smoothed components.
#[derive(Debug, Clone, PartialEq)]
pub struct McScenario {
    pub threshold: f64,
    pub aroc: [Summary; 6],
    pub awroc: [Summary; 6],
}

#[derive(Debug, Clone, PartialEq)]
pub struct McReport {
    pub n_draws: usize,
    pub scenarios: Vec<McScenario>,
}

type Image = Vec<f64>;

fn uniform(n: usize, rng: &mut Rng) -> Image {
    (0..n * n).map(|_| rng.random::<f64>()).collect()
}

/// Separable Gaussian blur with replicated borders.
pub(crate) fn gaussian_blur(img: &[f64], n: usize, sigma: f64) -> Image {
    let r = (2.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-r..=r).map(|d| (-(d * d) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let total: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= total);
    let clamp = |i: isize| i.clamp(0, n as isize - 1) as usize;
    let mut tmp = vec![0.0; n * n];
    for row in 0..n {
        for col in 0..n {
            tmp[row * n + col] = (-r..=r).map(|d| k[(d + r) as usize] * img[row * n + clamp(col as isize + d)]).sum();
        }
    }
    let mut out = vec![0.0; n * n];
    for row in 0..n {
        for col in 0..n {
            out[row * n + col] = (-r..=r).map(|d| k[(d + r) as usize] * tmp[clamp(row as isize + d) * n + col]).sum();
        }
    }
    out
}

fn rescale(img: &mut [f64]) {
    let lo = img.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = img.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    for v in img.iter_mut() {
        *v = if span > 0.0 { (*v - lo) / span } else { 0.0 };
    }
}

/// Keep the `keep` largest 4-connected components of `mask` (ties go to the
/// component met first in row-major order).
pub(crate) fn largest_components(mask: &[bool], n: usize, keep: usize) -> Vec<bool> {
    let mut label = vec![usize::MAX; n * n];
    let mut comps: Vec<Vec<usize>> = Vec::new();
    for start in 0..n * n {
        if !mask[start] || label[start] != usize::MAX {
            continue;
        }
        let id = comps.len();
        let mut members = vec![start];
        label[start] = id;
        let mut head = 0;
        while head < members.len() {
            let p = members[head];
            head += 1;
            let (r, c) = (p / n, p % n);
            let mut visit = |q: usize| {
                if mask[q] && label[q] == usize::MAX {
                    label[q] = id;
                    members.push(q);
                }
            };
            if r > 0 {
                visit(p - n);
            }
            if r + 1 < n {
                visit(p + n);
            }
            if c > 0 {
                visit(p - 1);
            }
            if c + 1 < n {
                visit(p + 1);
            }
        }
        comps.push(members);
    }
    let mut order: Vec<usize> = (0..comps.len()).collect();
    order.sort_by(|&a, &b| comps[b].len().cmp(&comps[a].len()).then(a.cmp(&b)));
    let mut out = vec![false; n * n];
    for &c in order.iter().take(keep) {
        for &p in &comps[c] {
            out[p] = true;
        }
    }
    out
}

/// Exact 1-D squared distance transform (lower envelope of parabolas).
fn edt_1d(f: &[f64], out: &mut [f64]) {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0usize;
    let mut first = None;
    for q in 0..n {
        if f[q].is_infinite() {
            continue;
        }
        match first {
            None => {
                first = Some(q);
                v[0] = q;
                z[0] = f64::NEG_INFINITY;
                z[1] = f64::INFINITY;
            }
            Some(_) => loop {
                let p = v[k];
                let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
                if s <= z[k] && k > 0 {
                    k -= 1;
                    continue;
                }
                if s <= z[k] {
                    v[0] = q;
                    z[0] = f64::NEG_INFINITY;
                    z[1] = f64::INFINITY;
                    break;
                }
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
                break;
            },
        }
    }
    if first.is_none() {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    }
    let mut j = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[j + 1] < q as f64 {
            j += 1;
        }
        let d = q as f64 - v[j] as f64;
        *o = d * d + f[v[j]];
    }
}

/// Euclidean distance (grid units) from each cell to the nearest set cell.
pub(crate) fn distance_transform(mask: &[bool], n: usize) -> Vec<f64> {
    let mut g: Vec<f64> = mask.iter().map(|&m| if m { 0.0 } else { f64::INFINITY }).collect();
    let mut line = vec![0.0; n];
    let mut res = vec![0.0; n];
    for c in 0..n {
        for r in 0..n {
            line[r] = g[r * n + c];
        }
        edt_1d(&line, &mut res);
        for r in 0..n {
            g[r * n + c] = res[r];
        }
    }
    for r in 0..n {
        line.copy_from_slice(&g[r * n..(r + 1) * n]);
        edt_1d(&line, &mut res);
        g[r * n..(r + 1) * n].copy_from_slice(&res);
    }
    g.into_iter().map(f64::sqrt).collect()
}

fn threshold(img: &[f64], c: f64) -> (Image, Vec<bool>) {
    let mask: Vec<bool> = img.iter().map(|&v| v >= c).collect();
    (img.iter().zip(&mask).map(|(&v, &m)| if m { v } else { 0.0 }).collect(), mask)
}

fn normalized(img: &[f64]) -> Image {
    let max = img.iter().cloned().fold(0.0, f64::max);
    if max > 0.0 {
        img.iter().map(|v| v / max).collect()
    } else {
        img.to_vec()
    }
}

/// The six candidate solutions for one draw.
fn families(cfg: &McConfig, c: f64, rng: &mut Rng) -> [Image; 6] {
    let n = cfg.grid;
    let x1 = uniform(n, rng);
    let mut x4 = gaussian_blur(&uniform(n, rng), n, cfg.sigma);
    rescale(&mut x4);
    let derive = |x: &Image| {
        let (t, mask) = threshold(x, c);
        let keep = largest_components(&mask, n, cfg.components);
        let comp: Image = t.iter().zip(&keep).map(|(&v, &k)| if k { v } else { 0.0 }).collect();
        (t, comp)
    };
    let (x2, x3) = derive(&x1);
    let (x5, x6) = derive(&x4);
    [x1, x2, x3, x4, x5, x6].map(|x| normalized(&x))
}

/// Random sparse ground truth: smoothed noise, thresholded, largest
/// components. Redrawn until both the active set and its complement are
/// nonempty.
fn ground_truth(cfg: &McConfig, c: f64, rng: &mut Rng) -> Vec<bool> {
    let n = cfg.grid;
    loop {
        let mut s = gaussian_blur(&uniform(n, rng), n, cfg.sigma);
        rescale(&mut s);
        let mask: Vec<bool> = s.iter().map(|&v| v >= c).collect();
        let truth = largest_components(&mask, n, cfg.components);
        let count = truth.iter().filter(|&&t| t).count();
        if count > 0 && count < n * n {
            return truth;
        }
    }
}

/// One draw: AROC and AWROC of each family.
fn draw(cfg: &McConfig, c: f64, seed: u64) -> Result<([f64; 6], [f64; 6])> {
    let mut rng = rng_from_seed(seed);
    let n = cfg.grid;
    let truth = ground_truth(cfg, c, &mut rng);
    let active: Vec<usize> = (0..n * n).filter(|&i| truth[i]).collect();
    let xi = xi_weight(&distance_transform(&truth, n))?;
    let sols = families(cfg, c, &mut rng);
    let mut r = [0.0; 6];
    let mut w = [0.0; 6];
    for (j, q) in sols.iter().enumerate() {
        r[j] = roc(q, &active)?.area;
        w[j] = weighted_roc(q, &active, &xi)?.area;
    }
    Ok((r, w))
}

/// Run `n_draws` independent draws per threshold. Draws run in parallel on
/// the current rayon pool with per-draw seeds, so the report depends only
/// on `seed`.
pub fn awroc_mc_harness(n_draws: usize, cfg: &McConfig, seed: u64) -> Result<McReport> {
    if n_draws == 0 {
        return arg_err("the Monte Carlo harness needs at least one draw");
    }
    if cfg.grid < 2 || !(cfg.sigma > 0.0) || cfg.components == 0 {
        return arg_err("grid >= 2, sigma > 0 and at least one component are required");
    }
    if cfg.thresholds.iter().any(|c| !(0.0..1.0).contains(c) || *c == 0.0) {
        return arg_err("thresholds must lie in (0, 1)");
    }
    let mut scenarios = Vec::with_capacity(cfg.thresholds.len());
    for (s, &c) in cfg.thresholds.iter().enumerate() {
        let base = derive_seed(seed, s as u64);
        let draws = (0..n_draws)
            .into_par_iter()
            .map(|d| draw(cfg, c, derive_seed(base, d as u64)))
            .collect::<Result<Vec<_>>>()?;
        let family = |pick: &dyn Fn(&([f64; 6], [f64; 6])) -> [f64; 6]| -> [Summary; 6] {
            std::array::from_fn(|j| Summary::of(&draws.iter().map(|d| pick(d)[j]).collect::<Vec<_>>()))
        };
        scenarios.push(McScenario {
            threshold: c,
            aroc: family(&|d| d.0),
            awroc: family(&|d| d.1),
        });
    }
    Ok(McReport { n_draws, scenarios })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blur_preserves_constants() {
        let img = vec![2.5; 36];
        assert!(gaussian_blur(&img, 6, 2.0).iter().all(|v| (v - 2.5).abs() < 1e-12));
    }

    #[test]
    fn components_by_size() {
        #[rustfmt::skip]
        let mask = [
            true, false, true, true,
            false, false, false, true,
            true, true, false, false,
            false, false, false, true,
        ].to_vec();
        let keep = largest_components(&mask, 4, 2);
        let count = keep.iter().filter(|&&k| k).count();
        assert_eq!(count, 5);
        assert!(keep[2] && keep[8] && !keep[0] && !keep[15]);
    }

    #[test]
    fn distance_transform_matches_brute_force() {
        let n = 9;
        let mut rng = rng_from_seed(4);
        let mask: Vec<bool> = (0..n * n).map(|_| rng.random::<f64>() < 0.08).collect();
        let mut mask = mask;
        mask[40] = true;
        let fast = distance_transform(&mask, n);
        for p in 0..n * n {
            let brute = (0..n * n)
                .filter(|&q| mask[q])
                .map(|q| {
                    let dr = (p / n) as f64 - (q / n) as f64;
                    let dc = (p % n) as f64 - (q % n) as f64;
                    (dr * dr + dc * dc).sqrt()
                })
                .fold(f64::INFINITY, f64::min);
            assert!((fast[p] - brute).abs() < 1e-12, "{p}: {} {brute}", fast[p]);
        }
    }

    #[test]
    fn single_draw_is_finite_and_reproducible() {
        let cfg = McConfig::default();
        let a = awroc_mc_harness(1, &cfg, 5).unwrap();
        assert_eq!(a.scenarios.len(), 2);
        for s in &a.scenarios {
            assert!(s.aroc.iter().chain(s.awroc.iter()).all(|v| v.mean.is_finite()));
        }
        assert_eq!(a, awroc_mc_harness(1, &cfg, 5).unwrap());
    }
}
