use super::{check_guardrail, record_for, score, synthesize, Context};
use crate::error::{config_err, CliError, Result};
use crate::record::{write_records, ResultRecord};
use mpss_core::rng::derive_seed;
use mpss_core::solvers::{fit, FitResult, Init, SolverConfig, StateSpaceProblem};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

/// Mean and standard error `std / sqrt(R)` with the sample standard deviation.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt() / n.sqrt())
}

struct Outcome {
    record: ResultRecord,
    fit: Option<FitResult>,
}

pub fn cmd_mc(ctx: &Context) -> Result<Vec<PathBuf>> {
    let cfg = &ctx.config;
    let reps = cfg.mc.reps;
    if reps < 2 {
        return config_err(format!("[mc] reps must be at least 2, got {reps}"));
    }
    let hp = cfg.hyperparameters()?;
    let scfg = cfg.solver_config()?;
    let solvers = &cfg.mc.solvers;
    let scenario = cfg.mc.scenario.clone().unwrap_or_else(|| cfg.model.preset.to_string());
    let order = cfg.model.order();

    // One dataset per replication, shared by every solver.
    let per_rep: Vec<Result<Vec<Outcome>>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let seed = if cfg.mc.pin_seeds { cfg.seed } else { derive_seed(cfg.seed, r as u64) };
            let data = synthesize(&cfg.model, seed)?;
            for &solver in solvers {
                check_guardrail(ctx, solver, data.b.n_sources(), data.y.n_samples())?;
            }
            let problem = StateSpaceProblem::new(data.y.clone(), data.b.clone(), order)?;
            solvers
                .iter()
                .enumerate()
                .map(|(j, &solver)| {
                    let run_id = r * solvers.len() + j;
                    let solver_cfg = SolverConfig {
                        rng_seed: derive_seed(seed, 100 + j as u64),
                        ..scfg
                    };
                    match fit(solver, &problem, &hp, &solver_cfg, &Init::default()) {
                        Ok(f) => {
                            let s = score(&f.x_hat, Some(&data.x), Some(&data.active), Some(&data.coords))?;
                            Ok(Outcome {
                                record: record_for(run_id, &scenario, solver, &hp, &f, &s),
                                fit: Some(f),
                            })
                        }
                        Err(e) => {
                            log::warn!("replication {r}, {solver}: {e}");
                            Ok(Outcome {
                                record: ResultRecord {
                                    run_id,
                                    scenario: format!("{scenario}!failed"),
                                    solver: solver.name().to_string(),
                                    hp,
                                    rse: Vec::new(),
                                    rrse: f64::NAN,
                                    aroc: f64::NAN,
                                    awroc: f64::NAN,
                                    iterations: 0,
                                    wall_time_ms: 0.0,
                                    converged: false,
                                },
                                fit: None,
                            })
                        }
                    }
                })
                .collect()
        })
        .collect();
    let outcomes: Vec<Vec<Outcome>> = per_rep.into_iter().collect::<Result<_>>()?;

    let records: Vec<ResultRecord> = outcomes.iter().flatten().map(|o| o.record.clone()).collect();
    let rec_path = ctx.output("mc_records.tsv");
    write_records(&rec_path, &records, &[format!("replications = {reps}"), format!("seed = {}", cfg.seed)])?;

    let mut summary = String::from("#solver\tquantity\tmean\tstderr\tn\tfailed\n");
    for (j, solver) in solvers.iter().enumerate() {
        let done: Vec<&Outcome> = outcomes.iter().map(|rep| &rep[j]).filter(|o| o.fit.is_some()).collect();
        let failed = reps - done.len();
        if done.is_empty() {
            writeln!(summary, "{solver}\t-\tNaN\tNaN\t0\t{failed}").unwrap();
            continue;
        }
        let mut rows: Vec<(String, Vec<f64>)> = Vec::new();
        let first = done[0].fit.as_ref().unwrap();
        let n = first.a_hat.n_sources();
        for p in 1..=first.a_hat.order() {
            for i in 0..n {
                for k in 0..n {
                    let v = done.iter().map(|o| o.fit.as_ref().unwrap().a_hat.lag(p)[[i, k]]).collect();
                    rows.push((format!("a{p}[{i}][{k}]"), v));
                }
            }
        }
        for i in 0..done[0].record.rse.len() {
            rows.push((format!("rse[{i}]"), done.iter().map(|o| o.record.rse[i]).collect()));
        }
        rows.push(("rrse".into(), done.iter().map(|o| o.record.rrse).collect()));
        rows.push(("iterations".into(), done.iter().map(|o| o.record.iterations as f64).collect()));
        rows.push(("wall_time_ms".into(), done.iter().map(|o| o.record.wall_time_ms).collect()));
        for (name, values) in rows {
            let (m, se) = mean_stderr(&values);
            writeln!(summary, "{solver}\t{name}\t{m}\t{se}\t{}\t{failed}", values.len()).unwrap();
        }
    }
    let sum_path = ctx.output("mc_summary.tsv");
    fs::write(&sum_path, summary).map_err(|e| CliError::io(&sum_path, e))?;
    Ok(vec![rec_path, sum_path])
}
