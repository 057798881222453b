//! `key = value` run configuration with `[section]` headers.
//!
//! ```text
//! seed = 7
//! [model]
//! preset = bivariate
//! sigma_o = 0.1
//! [solver]
//! name = ssals
//! [cv]
//! k = 5
//! lambda = logspace(0.01, 10, 21)
//! [io]
//! y = data/Y.mpss
//! ```
//!
//! Unknown sections and keys are errors. Paths under `[io]` are resolved
//! against the directory holding the config file.

use crate::error::{config_err, CliError, Result};
use mpss_core::cv::log_spaced;
use mpss_core::model::Preset;
use mpss_core::solvers::{naive_hyperparameters, Hyperparameters, Solver, SolverConfig};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

const HP_KEYS: [&str; 5] = ["lambda", "l2_a", "l1_x", "l1_a", "l2_x"];
const IO_KEYS: [&str; 9] = ["y", "b", "x", "a", "x_hat", "a_hat", "coords", "active", "out"];

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub preset: Preset,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub t: Option<usize>,
    pub e: usize,
    /// Model order used for fitting; the preset order when absent.
    pub p: Option<usize>,
    pub sigma_s: f64,
    pub sigma_o: f64,
    /// Sets the sensor noise from a target SNR instead of `sigma_o`.
    pub snr_db: Option<f64>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            preset: Preset::Bivariate,
            n: None,
            m: None,
            t: None,
            e: 1,
            p: None,
            sigma_s: 1.0,
            sigma_o: 0.1,
            snr_db: None,
        }
    }
}

impl ModelConfig {
    pub fn order(&self) -> usize {
        self.p.unwrap_or_else(|| self.preset.coefficients().order())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSection {
    pub name: Solver,
    pub alpha: f64,
    pub momentum: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub decay_a: bool,
    /// Explicit hyperparameters; the rest come from the noise levels.
    pub hp: BTreeMap<String, f64>,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            name: Solver::Ssals,
            alpha: d.step_size,
            momentum: d.momentum,
            tol: d.tolerance,
            max_iter: d.max_iterations,
            decay_a: d.decay_a,
            hp: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvSection {
    pub k: usize,
    pub warm_start: bool,
    /// Grid axes in file order.
    pub axes: Vec<(String, Vec<f64>)>,
}

impl Default for CvSection {
    fn default() -> Self {
        Self {
            k: 5,
            warm_start: false,
            axes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McSection {
    pub reps: usize,
    pub solvers: Vec<Solver>,
    /// Reuse the base seed for every replication.
    pub pin_seeds: bool,
    pub scenario: Option<String>,
}

impl Default for McSection {
    fn default() -> Self {
        Self {
            reps: 100,
            solvers: vec![Solver::Ssals],
            pin_seeds: false,
            scenario: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub model: ModelConfig,
    pub solver: SolverSection,
    pub cv: CvSection,
    pub mc: McSection,
    pub top_k: usize,
    pub io: BTreeMap<String, PathBuf>,
    /// Directory the relative paths were resolved against.
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            model: ModelConfig::default(),
            solver: SolverSection::default(),
            cv: CvSection::default(),
            mc: McSection::default(),
            top_k: 100,
            io: BTreeMap::new(),
            base_dir: PathBuf::from("."),
        }
    }
}

fn value<T: FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| CliError::Config(format!("bad value '{raw}' for '{key}'")))
}

fn flag(key: &str, raw: &str) -> Result<bool> {
    match raw.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => config_err(format!("bad boolean '{raw}' for '{key}'")),
    }
}

/// Plain list `a, b, c` or `logspace(lo, hi, n)`.
fn grid_values(key: &str, raw: &str) -> Result<Vec<f64>> {
    if let Some(inner) = raw.strip_prefix("logspace(").and_then(|r| r.strip_suffix(')')) {
        let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return config_err(format!("'{key}': logspace takes (lo, hi, n)"));
        }
        let lo: f64 = value(key, parts[0])?;
        let hi: f64 = value(key, parts[1])?;
        let n: usize = value(key, parts[2])?;
        return log_spaced(lo, hi, n).map_err(|e| CliError::Config(format!("'{key}': {e}")));
    }
    raw.split(',').map(|v| value(key, v.trim())).collect()
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg = RunConfig {
            base_dir: base_dir.to_path_buf(),
            ..RunConfig::default()
        };
        let mut section = String::new();
        let mut seen = std::collections::BTreeSet::new();
        for (lineno, raw_line) in text.lines().enumerate() {
            let line = raw_line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let at = |msg: String| CliError::Config(format!("line {}: {msg}", lineno + 1));
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                if !["model", "solver", "cv", "io", "mc", "eval"].contains(&name) {
                    return Err(at(format!("unknown section [{name}]")));
                }
                section = name.to_string();
                continue;
            }
            let (key, val) = line
                .split_once('=')
                .ok_or_else(|| at(format!("expected 'key = value', found '{line}'")))?;
            let (key, val) = (key.trim(), val.trim());
            if !seen.insert(format!("{section}.{key}")) {
                return Err(at(format!("duplicate key '{key}'")));
            }
            cfg.set(&section, key, val).map_err(|e| match e {
                CliError::Config(m) => at(m),
                other => other,
            })?;
        }
        Ok(cfg)
    }

    fn set(&mut self, section: &str, key: &str, val: &str) -> Result<()> {
        let unknown = || config_err(format!("unknown key '{key}' in {}", if section.is_empty() { "top level" } else { section }));
        match section {
            "" => match key {
                "seed" => self.seed = value(key, val)?,
                _ => return unknown(),
            },
            "model" => {
                let m = &mut self.model;
                match key {
                    "preset" => m.preset = val.parse().map_err(|e: mpss_core::MpssError| CliError::Config(e.to_string()))?,
                    "n" => m.n = Some(value(key, val)?),
                    "m" => m.m = Some(value(key, val)?),
                    "t" => m.t = Some(value(key, val)?),
                    "e" => m.e = value(key, val)?,
                    "p" => m.p = Some(value(key, val)?),
                    "sigma_s" => m.sigma_s = value(key, val)?,
                    "sigma_o" => m.sigma_o = value(key, val)?,
                    "snr_db" => m.snr_db = Some(value(key, val)?),
                    _ => return unknown(),
                }
            }
            "solver" => {
                let s = &mut self.solver;
                match key {
                    "name" => s.name = val.parse().map_err(|e: mpss_core::MpssError| CliError::Config(e.to_string()))?,
                    "alpha" => s.alpha = value(key, val)?,
                    "momentum" => s.momentum = value(key, val)?,
                    "tol" => s.tol = value(key, val)?,
                    "max_iter" => s.max_iter = value(key, val)?,
                    "decay_a" => s.decay_a = flag(key, val)?,
                    k if HP_KEYS.contains(&k) => {
                        s.hp.insert(k.to_string(), value(key, val)?);
                    }
                    _ => return unknown(),
                }
            }
            "cv" => match key {
                "k" => self.cv.k = value(key, val)?,
                "warm_start" => self.cv.warm_start = flag(key, val)?,
                k if HP_KEYS.contains(&k) => self.cv.axes.push((k.to_string(), grid_values(key, val)?)),
                _ => return unknown(),
            },
            "mc" => match key {
                "reps" => self.mc.reps = value(key, val)?,
                "solvers" => {
                    self.mc.solvers = val
                        .split(',')
                        .map(|s| s.trim().parse().map_err(|e: mpss_core::MpssError| CliError::Config(e.to_string())))
                        .collect::<Result<_>>()?
                }
                "pin_seeds" => self.mc.pin_seeds = flag(key, val)?,
                "scenario" => self.mc.scenario = Some(val.to_string()),
                _ => return unknown(),
            },
            "eval" => match key {
                "top_k" => self.top_k = value(key, val)?,
                _ => return unknown(),
            },
            "io" => {
                if !IO_KEYS.contains(&key) {
                    return unknown();
                }
                self.io.insert(key.to_string(), self.base_dir.join(val));
            }
            _ => unreachable!("sections are checked by the caller"),
        }
        Ok(())
    }

    pub fn path(&self, key: &str) -> Option<&Path> {
        self.io.get(key).map(PathBuf::as_path)
    }

    /// Weights from `sigma_o` and `sigma_s`, overridden by explicit keys.
    pub fn hyperparameters(&self) -> Result<Hyperparameters> {
        let mut hp = naive_hyperparameters(self.model.sigma_o, self.model.sigma_s, None, None, None)?;
        for (k, v) in &self.solver.hp {
            hp.set(k, *v)?;
        }
        hp.validate()?;
        Ok(hp)
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let cfg = SolverConfig {
            step_size: self.solver.alpha,
            momentum: self.solver.momentum,
            tolerance: self.solver.tol,
            max_iterations: self.solver.max_iter,
            rng_seed: self.seed,
            decay_a: self.solver.decay_a,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
