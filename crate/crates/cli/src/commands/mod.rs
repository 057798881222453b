//! Subcommand implementations. Each returns the list of files it wrote.

mod convert;
mod cv;
mod eval;
mod fit;
mod mc;
mod simulate;

pub use convert::cmd_convert;
pub use cv::cmd_cv;
pub use eval::{cmd_eval, score, Scores};
pub use fit::cmd_fit;
pub use mc::cmd_mc;
pub use simulate::{cmd_simulate, synthesize, Dataset};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::format::MatrixFile;
use crate::record::ResultRecord;
use mpss_core::solvers::{FitResult, Hyperparameters, Solver};
use mpss_core::{LeadField, Series};
use std::fs;
use std::path::{Path, PathBuf};

/// Largest `N * T` the alternating solvers accept without `--force`.
pub const MAX_STATE_SIZE: usize = 200_000;

/// Settings shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: RunConfig,
    pub out_dir: PathBuf,
    pub force: bool,
}

impl Context {
    pub fn new(config: RunConfig, out_dir: Option<PathBuf>, force: bool) -> Result<Self> {
        let out_dir = out_dir
            .or_else(|| config.path("out").map(Path::to_path_buf))
            .unwrap_or_else(|| PathBuf::from("."));
        fs::create_dir_all(&out_dir).map_err(|e| CliError::io(&out_dir, e))?;
        Ok(Self {
            config,
            out_dir,
            force,
        })
    }

    pub fn output(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    /// Positional argument, else the `[io]` entry.
    fn input(&self, given: Option<&Path>, key: &str) -> Result<PathBuf> {
        given
            .map(Path::to_path_buf)
            .or_else(|| self.config.path(key).map(Path::to_path_buf))
            .ok_or_else(|| CliError::Config(format!("no '{key}' file given on the command line or under [io]")))
    }

    fn optional(&self, key: &str) -> Option<PathBuf> {
        self.config.path(key).map(Path::to_path_buf)
    }
}

fn read_series(path: &Path) -> Result<Series> {
    MatrixFile::read(path)?.to_series()
}

fn read_lead_field(path: &Path) -> Result<LeadField> {
    Ok(LeadField::new(MatrixFile::read(path)?.to_matrix()?)?)
}

/// Active source indices stored as a vector of whole numbers.
fn read_indices(path: &Path) -> Result<Vec<usize>> {
    MatrixFile::read(path)?
        .to_vector()?
        .into_iter()
        .map(|v| {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(CliError::Parse(format!("{}: {v} is not an index", path.display())))
            }
        })
        .collect()
}

fn check_guardrail(ctx: &Context, solver: Solver, n: usize, t: usize) -> Result<()> {
    let banded = matches!(solver, Solver::Ssals | Solver::Hgdals);
    if banded && n * t > MAX_STATE_SIZE && !ctx.force {
        return Err(CliError::Guardrail(format!(
            "N*T = {} exceeds {MAX_STATE_SIZE} for {solver}; the banded factorisation may not fit in memory \
             (pass --force to run anyway)",
            n * t
        )));
    }
    Ok(())
}

/// Write the estimates and objective trace of a fit.
fn write_fit(ctx: &Context, fit: &FitResult, written: &mut Vec<PathBuf>) -> Result<()> {
    let files = [
        ("x_hat.mpss", MatrixFile::from_series(&fit.x_hat)),
        ("a_hat.mpss", MatrixFile::from_coefficients(&fit.a_hat)),
        ("trace.mpss", MatrixFile::from_vector(&fit.objective_trace)),
    ];
    for (name, m) in files {
        let path = ctx.output(name);
        m.write(&path)?;
        written.push(path);
    }
    if !fit.gd_schedule.is_empty() {
        let mut text = String::from("#iteration\tgd_steps\tt_als\tt_gd\tdelta_als\tdelta_gd\n");
        for g in &fit.gd_schedule {
            text.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\n",
                g.iteration, g.gd_steps, g.t_als, g.t_gd, g.delta_als, g.delta_gd
            ));
        }
        let path = ctx.output("gd_schedule.tsv");
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        written.push(path);
    }
    Ok(())
}

fn record_for(run_id: usize, scenario: &str, solver: Solver, hp: &Hyperparameters, fit: &FitResult, scores: &Scores) -> ResultRecord {
    ResultRecord {
        run_id,
        scenario: scenario.to_string(),
        solver: solver.name().to_string(),
        hp: *hp,
        rse: scores.rse.clone(),
        rrse: scores.rrse,
        aroc: scores.aroc,
        awroc: scores.awroc,
        iterations: fit.iterations,
        wall_time_ms: fit.wall_time_ms,
        converged: fit.converged,
    }
}
