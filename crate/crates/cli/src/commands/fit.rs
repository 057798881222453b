use super::{check_guardrail, read_indices, read_lead_field, read_series, record_for, score, write_fit, Context};
use crate::error::Result;
use crate::format::MatrixFile;
use crate::record::write_records;
use mpss_core::solvers::{fit, Init, StateSpaceProblem};
use std::path::{Path, PathBuf};

pub fn cmd_fit(ctx: &Context, y: Option<&Path>, b: Option<&Path>) -> Result<Vec<PathBuf>> {
    let cfg = &ctx.config;
    let y = read_series(&ctx.input(y, "y")?)?;
    let b = read_lead_field(&ctx.input(b, "b")?)?;
    let solver = cfg.solver.name;
    check_guardrail(ctx, solver, b.n_sources(), y.n_samples())?;
    let hp = cfg.hyperparameters()?;
    let scfg = cfg.solver_config()?;
    let problem = StateSpaceProblem::new(y, b, cfg.model.order())?;
    log::info!(
        "fitting {solver} with N = {}, M = {}, T = {}, E = {}, P = {}",
        problem.n_sources(),
        problem.n_sensors(),
        problem.n_samples(),
        problem.n_epochs(),
        problem.order()
    );
    let result = fit(solver, &problem, &hp, &scfg, &Init::default())?;
    if !result.converged {
        log::warn!("{solver} stopped after {} iterations without converging", result.iterations);
    }
    let mut written = Vec::new();
    write_fit(ctx, &result, &mut written)?;

    let truth = ctx.optional("x").as_deref().map(read_series).transpose()?;
    let active = ctx.optional("active").as_deref().map(read_indices).transpose()?;
    let coords = ctx
        .optional("coords")
        .as_deref()
        .map(|p| MatrixFile::read(p).and_then(|m| m.to_matrix()))
        .transpose()?;
    let scores = score(&result.x_hat, truth.as_ref(), active.as_deref(), coords.as_ref())?;
    let scenario = cfg.mc.scenario.clone().unwrap_or_else(|| cfg.model.preset.to_string());
    let record = record_for(0, &scenario, solver, &hp, &result, &scores);
    let comments: Vec<String> = scores.warnings.iter().map(|w| format!("warning: {w}")).collect();
    let path = ctx.output("fit.tsv");
    write_records(&path, &[record], &comments)?;
    written.push(path);
    Ok(written)
}
