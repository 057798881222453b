use super::Context;
use crate::config::ModelConfig;
use crate::error::{config_err, CliError, Result};
use crate::format::MatrixFile;
use mpss_core::model::{
    companion_spectral_radius, generate_event_related, observe, observe_at_snr, simulate_latent, uniform_lead_field,
    EventProtocol, Preset,
};
use mpss_core::rng::{derive_seed, stream_rng, Rng};
use mpss_core::{LeadField, MvarCoefficients, NoiseSpec, Series};
use ndarray::Array2;
use rand::seq::index::sample;
use rand_distr::{Distribution, StandardNormal};
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

/// Seeds of the four independent draws behind one dataset.
const LEAD_FIELD: u64 = 0;
const LATENT: u64 = 1;
const SENSOR: u64 = 2;
const PLACEMENT: u64 = 3;

/// A simulated scenario with its ground truth.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub preset: Preset,
    pub a: MvarCoefficients,
    pub b: LeadField,
    pub x: Series,
    pub y: Series,
    /// Sources carrying activity.
    pub active: Vec<usize>,
    /// Planar grid positions in mm, `N x 3`.
    pub coords: Array2<f64>,
    pub onsets: Option<Vec<usize>>,
    pub noise_sigma: f64,
    pub spectral_radius: f64,
}

fn standard_normal_matrix(rows: usize, cols: usize, rng: &mut Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || StandardNormal.sample(rng))
}

pub(crate) fn grid_coords(n: usize) -> Array2<f64> {
    let side = (n as f64).sqrt().ceil().max(1.0) as usize;
    Array2::from_shape_fn((n, 3), |(i, c)| match c {
        0 => (i % side) as f64 * 10.0,
        1 => (i / side) as f64 * 10.0,
        _ => 0.0,
    })
}

/// Place `regions` sources at seeded distinct dipoles among `n`.
fn placement(n: usize, regions: usize, seed: u64) -> Vec<usize> {
    if n == regions {
        return (0..n).collect();
    }
    let mut rng = stream_rng(seed, PLACEMENT);
    let mut picked = sample(&mut rng, n, regions).into_vec();
    picked.sort_unstable();
    picked
}

fn embed(small: &Series, at: &[usize], n: usize) -> Result<Series> {
    Ok(Series::new(
        small
            .epochs()
            .iter()
            .map(|se| {
                let mut full = Array2::zeros((n, se.ncols()));
                for (k, &d) in at.iter().enumerate() {
                    full.row_mut(d).assign(&se.row(k));
                }
                full
            })
            .collect(),
    )?)
}

/// Simulate the configured scenario from a single seed.
pub fn synthesize(model: &ModelConfig, seed: u64) -> Result<Dataset> {
    let preset = model.preset;
    let a = preset.coefficients();
    let regions = a.n_sources();
    let n = model.n.unwrap_or(regions);
    if n < regions {
        return config_err(format!("preset {preset} needs at least {regions} sources, got n = {n}"));
    }
    if matches!(preset, Preset::Bivariate | Preset::ThreeVariate) && n != regions {
        return config_err(format!("preset {preset} has exactly {regions} sources, got n = {n}"));
    }
    let m = model.m.unwrap_or_else(|| preset.default_sensors());
    let t = model.t.unwrap_or_else(|| preset.default_samples());
    let e = model.e;
    if m == 0 || t == 0 || e == 0 {
        return config_err("m, t and e must be positive");
    }
    let noise = NoiseSpec::new(model.sigma_s, model.sigma_o)?;
    let b = match preset {
        Preset::Bivariate | Preset::ThreeVariate => uniform_lead_field(m, n, derive_seed(seed, LEAD_FIELD)),
        _ => LeadField::new(standard_normal_matrix(m, n, &mut stream_rng(seed, LEAD_FIELD)))?,
    };
    let active = placement(n, regions, seed);
    let coords = grid_coords(n);
    let spectral_radius = companion_spectral_radius(&a);

    if preset == Preset::EventRelated {
        let patches: Vec<Vec<usize>> = active.iter().map(|&d| vec![d]).collect();
        let proto = EventProtocol {
            sigma_state: model.sigma_s,
            ..EventProtocol::five_region()
        };
        let snr = model.snr_db.unwrap_or(20.0);
        let data = generate_event_related(&a, &b, &patches, &proto, snr, e, derive_seed(seed, LATENT))?;
        return Ok(Dataset {
            preset,
            a,
            b,
            x: data.epoched_latent,
            y: data.epoched,
            active,
            coords,
            onsets: Some(data.onsets),
            noise_sigma: data.noise_sigma,
            spectral_radius,
        });
    }

    let small = simulate_latent(&a, noise, t, e, derive_seed(seed, LATENT))?.series;
    let x = embed(&small, &active, n)?;
    let (y, noise_sigma) = match model.snr_db {
        Some(snr) => observe_at_snr(&b, &x, snr, derive_seed(seed, SENSOR))?,
        None => (observe(&b, &x, noise, derive_seed(seed, SENSOR))?, model.sigma_o),
    };
    Ok(Dataset {
        preset,
        a,
        b,
        x,
        y,
        active,
        coords,
        onsets: None,
        noise_sigma,
        spectral_radius,
    })
}

fn dims(d: &[usize]) -> String {
    d.iter().map(usize::to_string).collect::<Vec<_>>().join("x")
}

pub fn cmd_simulate(ctx: &Context) -> Result<Vec<PathBuf>> {
    let cfg = &ctx.config;
    let data = synthesize(&cfg.model, cfg.seed)?;
    let mut files = vec![
        ("X.mpss", MatrixFile::from_series(&data.x)),
        ("Y.mpss", MatrixFile::from_series(&data.y)),
        ("A.mpss", MatrixFile::from_coefficients(&data.a)),
        ("B.mpss", MatrixFile::from_matrix(data.b.matrix())),
        (
            "active.mpss",
            MatrixFile::from_vector(&data.active.iter().map(|&i| i as f64).collect::<Vec<_>>()),
        ),
        ("coords.mpss", MatrixFile::from_matrix(&data.coords)),
    ];
    if let Some(on) = &data.onsets {
        files.push(("onsets.mpss", MatrixFile::from_vector(&on.iter().map(|&i| i as f64).collect::<Vec<_>>())));
    }
    let mut manifest = String::new();
    writeln!(manifest, "preset = {}", data.preset).unwrap();
    writeln!(manifest, "seed = {}", cfg.seed).unwrap();
    for (label, stream) in [("lead_field", LEAD_FIELD), ("latent", LATENT), ("sensor", SENSOR)] {
        writeln!(manifest, "seed.{label} = {}", derive_seed(cfg.seed, stream)).unwrap();
    }
    writeln!(manifest, "noise_sigma = {}", data.noise_sigma).unwrap();
    writeln!(manifest, "spectral_radius = {}", data.spectral_radius).unwrap();
    let mut written = Vec::new();
    for (name, m) in &files {
        let path = ctx.output(name);
        m.write(&path)?;
        writeln!(manifest, "file.{name} = {}", dims(m.dims())).unwrap();
        written.push(path);
    }
    let path = ctx.output("manifest.txt");
    fs::write(&path, manifest).map_err(|e| CliError::io(&path, e))?;
    written.push(path);
    log::info!("simulated {} with Y of dims {}", data.preset, dims(files[1].1.dims()));
    Ok(written)
}
