//! Tab-separated result records, one line per fit.

use crate::error::{parse_err, CliError, Result};
use mpss_core::solvers::Hyperparameters;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

pub const HEADER: &str =
    "#run_id\tscenario\tsolver\tlambda\tl2_a\tl1_x\tl1_a\tl2_x\trse\trrse\taroc\tawroc\titerations\twall_time_ms\tconverged";

const FIELDS: usize = 15;

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub run_id: usize,
    pub scenario: String,
    pub solver: String,
    pub hp: Hyperparameters,
    /// Per-source RSE in percent; empty when no truth was available.
    pub rse: Vec<f64>,
    pub rrse: f64,
    pub aroc: f64,
    pub awroc: f64,
    pub iterations: usize,
    pub wall_time_ms: f64,
    pub converged: bool,
}

impl ResultRecord {
    /// Floats use the shortest decimal that reads back to the same value.
    pub fn to_line(&self) -> String {
        let rse = if self.rse.is_empty() {
            "-".to_string()
        } else {
            self.rse.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
        };
        let mut s = String::new();
        write!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.run_id,
            self.scenario,
            self.solver,
            self.hp.lambda,
            self.hp.l2_a,
            self.hp.l1_x,
            self.hp.l1_a,
            self.hp.l2_x,
            rse,
            self.rrse,
            self.aroc,
            self.awroc,
            self.iterations,
            self.wall_time_ms,
            self.converged
        )
        .unwrap();
        s
    }

    /// The line without the wall time, for reproducibility comparisons.
    pub fn deterministic_part(&self) -> String {
        let line = self.to_line();
        let mut cells: Vec<&str> = line.split('\t').collect();
        cells.remove(13);
        cells.join("\t")
    }

    pub fn parse(line: &str) -> Result<Self> {
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() != FIELDS {
            return parse_err(format!("record has {} fields, expected {FIELDS}", cells.len()));
        }
        let num = |i: usize| -> Result<f64> {
            cells[i]
                .parse()
                .map_err(|_| CliError::Parse(format!("field {} is not a number: '{}'", i + 1, cells[i])))
        };
        let int = |i: usize| -> Result<usize> {
            cells[i]
                .parse()
                .map_err(|_| CliError::Parse(format!("field {} is not an integer: '{}'", i + 1, cells[i])))
        };
        let rse = if cells[8] == "-" {
            Vec::new()
        } else {
            cells[8]
                .split(',')
                .map(|v| v.parse().map_err(|_| CliError::Parse(format!("bad RSE value '{v}'"))))
                .collect::<Result<_>>()?
        };
        Ok(Self {
            run_id: int(0)?,
            scenario: cells[1].to_string(),
            solver: cells[2].to_string(),
            hp: Hyperparameters {
                lambda: num(3)?,
                l2_a: num(4)?,
                l1_x: num(5)?,
                l1_a: num(6)?,
                l2_x: num(7)?,
            },
            rse,
            rrse: num(9)?,
            aroc: num(10)?,
            awroc: num(11)?,
            iterations: int(12)?,
            wall_time_ms: num(13)?,
            converged: match cells[14] {
                "true" => true,
                "false" => false,
                other => return parse_err(format!("bad converged flag '{other}'")),
            },
        })
    }
}

/// Write the header, comment lines, then the records sorted by run id.
pub fn write_records(path: &Path, records: &[ResultRecord], comments: &[String]) -> Result<()> {
    let mut sorted: Vec<&ResultRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.run_id);
    let mut out = String::from(HEADER);
    out.push('\n');
    for c in comments {
        writeln!(out, "# {c}").unwrap();
    }
    for r in sorted {
        out.push_str(&r.to_line());
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| CliError::io(path, e))
}

/// Records of a file, skipping the header and comment lines.
pub fn read_records(path: &Path) -> Result<Vec<ResultRecord>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(ResultRecord::parse)
        .collect()
}
