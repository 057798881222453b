use super::{check_guardrail, read_lead_field, read_series, record_for, score, write_fit, Context};
use crate::error::{config_err, CliError, Result};
use crate::format::MatrixFile;
use crate::record::write_records;
use mpss_core::cv::{grid_search, CvConfig, SearchGrid};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

pub fn cmd_cv(ctx: &Context, y: Option<&Path>, b: Option<&Path>) -> Result<Vec<PathBuf>> {
    let cfg = &ctx.config;
    if cfg.cv.axes.is_empty() {
        return config_err("[cv] needs at least a lambda axis");
    }
    let y = read_series(&ctx.input(y, "y")?)?;
    let b = read_lead_field(&ctx.input(b, "b")?)?;
    let solver = cfg.solver.name;
    check_guardrail(ctx, solver, b.n_sources(), y.n_samples())?;
    let grid = SearchGrid::new(cfg.cv.axes.clone())?;
    let cv = CvConfig {
        folds: cfg.cv.k,
        seed: cfg.seed,
        base: cfg.hyperparameters()?,
        warm_start: cfg.cv.warm_start,
    };
    let res = grid_search(&y, &b, cfg.model.order(), &grid, &cv, solver, &cfg.solver_config()?)?;
    log::info!("{} fold fits performed, {} grid points failed", res.fold_fits, res.failed_points);

    let mut written = Vec::new();
    let pe = MatrixFile::new(res.pe_values.shape().to_vec(), res.pe_values.t().iter().cloned().collect())?;
    let pe_path = ctx.output("pe.mpss");
    pe.write(&pe_path)?;
    written.push(pe_path);

    let mut axes = String::new();
    for (i, (name, values)) in grid.axes().iter().enumerate() {
        let vals: Vec<String> = values.iter().map(f64::to_string).collect();
        writeln!(axes, "axis.{i}.{name} = {}", vals.join(", ")).unwrap();
    }
    let best: Vec<String> = res.best_point.iter().map(usize::to_string).collect();
    writeln!(axes, "best_point = {}", best.join(", ")).unwrap();
    writeln!(axes, "folds = {}", cfg.cv.k).unwrap();
    writeln!(axes, "fold_fits = {}", res.fold_fits).unwrap();
    writeln!(axes, "failed_points = {}", res.failed_points).unwrap();
    let axes_path = ctx.output("pe_axes.txt");
    fs::write(&axes_path, axes).map_err(|e| CliError::io(&axes_path, e))?;
    written.push(axes_path);

    let mut table = String::from("#point");
    for (name, _) in grid.axes() {
        write!(table, "\t{name}").unwrap();
    }
    table.push_str("\tpe\n");
    for flat in 0..grid.n_points() {
        let coords = grid.coords(flat);
        write!(table, "{flat}").unwrap();
        for (axis, &c) in coords.iter().enumerate() {
            write!(table, "\t{}", grid.axes()[axis].1[c]).unwrap();
        }
        writeln!(table, "\t{}", res.pe_values[coords.as_slice()]).unwrap();
    }
    let table_path = ctx.output("cv_grid.tsv");
    fs::write(&table_path, table).map_err(|e| CliError::io(&table_path, e))?;
    written.push(table_path);

    write_fit(ctx, &res.refit, &mut written)?;
    let scores = score(&res.refit.x_hat, None, None, None)?;
    let record = record_for(0, "cv", solver, &res.best_hp, &res.refit, &scores);
    let rec_path = ctx.output("fit.tsv");
    write_records(&rec_path, &[record], &[format!("fold_fits = {}", res.fold_fits)])?;
    written.push(rec_path);
    Ok(written)
}
