use super::{read_indices, read_series, Context};
use crate::error::{CliError, Result};
use crate::format::MatrixFile;
use crate::record::{write_records, ResultRecord};
use mpss_core::metrics::{med, roc, rrse, rse, rse_per_source, source_energy_series, spectral_scores, weighted_roc, xi_weight};
use mpss_core::solvers::Hyperparameters;
use mpss_core::{MpssError, Series};
use ndarray::{Array1, Array2};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// Accuracy figures of one estimate. Missing inputs give NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct Scores {
    pub rse: Vec<f64>,
    pub rrse: f64,
    pub aroc: f64,
    pub awroc: f64,
    pub warnings: Vec<String>,
}

/// Rows of `x` with nonzero energy.
fn support(x: &Series) -> Vec<usize> {
    (0..x.n_rows())
        .filter(|&i| x.epochs().iter().any(|e| e.row(i).iter().any(|&v| v != 0.0)))
        .collect()
}

/// Per-source RSE, NaN for sources whose truth is constant.
fn rse_rows(x_hat: &Series, x: &Series) -> Result<Vec<f64>> {
    if x_hat.n_rows() != x.n_rows() {
        return Err(CliError::Parse(format!("estimate has {} sources, truth has {}", x_hat.n_rows(), x.n_rows())));
    }
    match rse_per_source(x_hat, x) {
        Ok(v) => Ok(v),
        Err(MpssError::InvalidArgument(_)) => (0..x.n_rows())
            .map(|i| {
                let cat = |s: &Series| Array1::from_iter(s.epochs().iter().flat_map(|e| e.row(i).to_vec()));
                Ok(rse(cat(x_hat).view(), cat(x).view()).unwrap_or(f64::NAN))
            })
            .collect(),
        Err(e) => Err(e.into()),
    }
}

/// Score `x_hat` against whatever ground truth is available. The active set
/// defaults to the support of `truth`; AWROC falls back to AROC without
/// coordinates.
pub fn score(x_hat: &Series, truth: Option<&Series>, active: Option<&[usize]>, coords: Option<&Array2<f64>>) -> Result<Scores> {
    let mut s = Scores {
        rse: Vec::new(),
        rrse: f64::NAN,
        aroc: f64::NAN,
        awroc: f64::NAN,
        warnings: Vec::new(),
    };
    if let Some(x) = truth {
        s.rse = rse_rows(x_hat, x)?;
        s.rrse = rrse(x_hat, x)?;
    }
    let derived;
    let active = match (active, truth) {
        (Some(a), _) => Some(a),
        (None, Some(x)) => {
            derived = support(x);
            Some(derived.as_slice())
        }
        (None, None) => None,
    };
    let n = x_hat.n_rows();
    if let Some(act) = active {
        if act.is_empty() || act.len() == n {
            s.warnings.push("every source is active or none is; ROC areas are undefined".into());
            return Ok(s);
        }
        let q = source_energy_series(x_hat)?;
        s.aroc = roc(&q, act)?.area;
        match coords {
            Some(c) => {
                if c.nrows() != n || c.ncols() != 3 {
                    return Err(CliError::Parse(format!(
                        "coordinates must be {n} x 3, found {} x {}",
                        c.nrows(),
                        c.ncols()
                    )));
                }
                let locs: Vec<[f64; 3]> = act.iter().map(|&i| [c[[i, 0]], c[[i, 1]], c[[i, 2]]]).collect();
                let xi = xi_weight(&med(c.view(), &locs)?)?;
                s.awroc = weighted_roc(&q, act, &xi)?.area;
            }
            None => {
                s.awroc = s.aroc;
                s.warnings.push("no source coordinates; AWROC reported as AROC".into());
            }
        }
    }
    Ok(s)
}

pub fn cmd_eval(ctx: &Context, x_hat: Option<&Path>, truth: Option<&Path>, top_k: Option<usize>) -> Result<Vec<PathBuf>> {
    let x_hat_path = ctx.input(x_hat, "x_hat")?;
    let est = read_series(&x_hat_path)?;
    let truth_path = truth.map(Path::to_path_buf).or_else(|| ctx.optional("x"));
    let x = truth_path.as_deref().map(read_series).transpose()?;
    let active = ctx.optional("active").as_deref().map(read_indices).transpose()?;
    let coords = ctx
        .optional("coords")
        .as_deref()
        .map(|p| MatrixFile::read(p).and_then(|m| m.to_matrix()))
        .transpose()?;
    let scores = score(&est, x.as_ref(), active.as_deref(), coords.as_ref())?;
    let mut comments = scores.warnings.iter().map(|w| format!("warning: {w}")).collect::<Vec<_>>();
    for w in &scores.warnings {
        log::warn!("{w}");
    }
    if let (Some(pa), Some(pb)) = (ctx.optional("a_hat"), ctx.optional("a")) {
        let ah = MatrixFile::read(&pa)?.to_coefficients()?;
        let a = MatrixFile::read(&pb)?.to_coefficients()?;
        if ah.n_sources() != a.n_sources() || ah.order() != a.order() {
            return Err(CliError::Parse("estimated and true coefficients differ in shape".into()));
        }
        let diff: f64 = ah.lags().iter().zip(a.lags()).map(|(u, v)| (u - v).mapv(|d| d * d).sum()).sum();
        comments.push(format!("coefficient_error = {}", (diff / a.frobenius_sq().max(f64::MIN_POSITIVE)).sqrt()));
    }
    let record = ResultRecord {
        run_id: 0,
        scenario: "eval".into(),
        solver: "-".into(),
        hp: Hyperparameters::default(),
        rse: scores.rse.clone(),
        rrse: scores.rrse,
        aroc: scores.aroc,
        awroc: scores.awroc,
        iterations: 0,
        wall_time_ms: 0.0,
        converged: true,
    };
    let rec_path = ctx.output("eval.tsv");
    write_records(&rec_path, &[record], &comments)?;

    // Saliency ranking by source energy.
    let k = top_k.unwrap_or(ctx.config.top_k).min(est.n_rows());
    let q = source_energy_series(&est)?;
    let spectral = if est.n_samples() >= 7 { Some(spectral_scores(&est)?) } else { None };
    let mut order: Vec<usize> = (0..q.len()).collect();
    order.sort_by(|&i, &j| q[j].total_cmp(&q[i]).then(i.cmp(&j)));
    let mut text = String::from("#rank\tsource\tenergy\tspectral\n");
    for (rank, &i) in order.iter().take(k).enumerate() {
        let sp = spectral.as_ref().map_or(f64::NAN, |s| s[i]);
        writeln!(text, "{}\t{i}\t{}\t{sp}", rank + 1, q[i]).unwrap();
    }
    let sal_path = ctx.output("saliency.tsv");
    fs::write(&sal_path, text).map_err(|e| CliError::io(&sal_path, e))?;
    Ok(vec![rec_path, sal_path])
}
