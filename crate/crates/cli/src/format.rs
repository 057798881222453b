//! `MPSS1` binary matrices and CSV interchange.
//!
//! Layout: the 5 magic bytes, one rank byte (1 to 3), `rank` little-endian
//! `u64` dimensions, then the values as little-endian `f64`, first dimension
//! fastest.

use crate::error::{parse_err, CliError, Result};
use mpss_core::{MvarCoefficients, Series};
use ndarray::{Array2, ShapeBuilder};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

pub const MAGIC: &[u8; 5] = b"MPSS1";

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFile {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl MatrixFile {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if !(1..=3).contains(&dims.len()) {
            return parse_err(format!("rank must be 1, 2 or 3, got {}", dims.len()));
        }
        let len = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| CliError::Parse(format!("dimensions {dims:?} overflow")))?;
        if len != data.len() {
            return parse_err(format!("dimensions {dims:?} need {len} values, got {}", data.len()));
        }
        Ok(Self { dims, data })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    /// Values in column-major order.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(6 + 8 * (self.dims.len() + self.data.len()));
        out.extend_from_slice(MAGIC);
        out.push(self.dims.len() as u8);
        for &d in &self.dims {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 6 || &bytes[..5] != MAGIC {
            return parse_err("missing MPSS1 header");
        }
        let rank = bytes[5] as usize;
        if !(1..=3).contains(&rank) {
            return parse_err(format!("rank byte must be 1, 2 or 3, got {rank}"));
        }
        let body = &bytes[6..];
        if body.len() < 8 * rank {
            return parse_err("truncated dimension block");
        }
        let dims: Vec<usize> = body[..8 * rank]
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .map(|d| usize::try_from(d).map_err(|_| CliError::Parse(format!("dimension {d} too large"))))
            .collect::<Result<_>>()?;
        let payload = &body[8 * rank..];
        let expected = dims
            .iter()
            .try_fold(8usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| CliError::Parse(format!("dimensions {dims:?} overflow")))?;
        if payload.len() != expected {
            return parse_err(format!(
                "payload of {} bytes does not match dimensions {dims:?} ({expected} bytes)",
                payload.len()
            ));
        }
        let data = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::new(dims, data)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|e| match e {
            CliError::Parse(m) => CliError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| CliError::io(path, e))
    }

    pub fn from_vector(values: &[f64]) -> Self {
        Self {
            dims: vec![values.len()],
            data: values.to_vec(),
        }
    }

    pub fn from_matrix(m: &Array2<f64>) -> Self {
        Self {
            dims: vec![m.nrows(), m.ncols()],
            data: m.t().iter().cloned().collect(),
        }
    }

    /// `rows x samples x epochs`.
    pub fn from_series(s: &Series) -> Self {
        let mut data = Vec::with_capacity(s.n_rows() * s.n_samples() * s.n_epochs());
        for e in s.epochs() {
            data.extend(e.t().iter().cloned());
        }
        Self {
            dims: vec![s.n_rows(), s.n_samples(), s.n_epochs()],
            data,
        }
    }

    /// `N x N x P`.
    pub fn from_coefficients(a: &MvarCoefficients) -> Self {
        let n = a.n_sources();
        let mut data = Vec::with_capacity(n * n * a.order());
        for lag in a.lags() {
            data.extend(lag.t().iter().cloned());
        }
        Self {
            dims: vec![n, n, a.order()],
            data,
        }
    }

    fn slab(&self, rows: usize, cols: usize, k: usize) -> Array2<f64> {
        let chunk = rows * cols;
        Array2::from_shape_vec((rows, cols).f(), self.data[k * chunk..(k + 1) * chunk].to_vec())
            .expect("slab length matches its shape")
    }

    pub fn to_vector(&self) -> Result<Vec<f64>> {
        if self.dims.iter().filter(|&&d| d != 1).count() > 1 {
            return parse_err(format!("expected a vector, found dimensions {:?}", self.dims));
        }
        Ok(self.data.clone())
    }

    /// Rank 1 reads as a column; rank 3 needs a trailing dimension of 1.
    pub fn to_matrix(&self) -> Result<Array2<f64>> {
        match self.dims[..] {
            [r] => Ok(self.slab(r, 1, 0)),
            [r, c] => Ok(self.slab(r, c, 0)),
            [r, c, 1] => Ok(self.slab(r, c, 0)),
            _ => parse_err(format!("expected a matrix, found dimensions {:?}", self.dims)),
        }
    }

    pub fn to_series(&self) -> Result<Series> {
        let (r, c, e) = match self.dims[..] {
            [r, c] => (r, c, 1),
            [r, c, e] => (r, c, e),
            _ => return parse_err(format!("expected a series, found dimensions {:?}", self.dims)),
        };
        Ok(Series::new((0..e).map(|k| self.slab(r, c, k)).collect())?)
    }

    pub fn to_coefficients(&self) -> Result<MvarCoefficients> {
        let (n, m, p) = match self.dims[..] {
            [n, m] => (n, m, 1),
            [n, m, p] => (n, m, p),
            _ => return parse_err(format!("expected N x N x P coefficients, found {:?}", self.dims)),
        };
        if n != m {
            return parse_err(format!("coefficient slices must be square, found {n} x {m}"));
        }
        Ok(MvarCoefficients::new((0..p).map(|k| self.slab(n, n, k)).collect())?)
    }

    /// Comma-separated text, one matrix row per line. Rank 3 is rejected.
    pub fn to_csv(&self) -> Result<String> {
        let m = match self.dims[..] {
            [_] | [_, _] => self.to_matrix()?,
            _ => return parse_err("CSV export supports rank 1 and 2 only"),
        };
        let mut out = String::new();
        for row in m.rows() {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", cells.join(",")).unwrap();
        }
        Ok(out)
    }

    /// Inverse of [`MatrixFile::to_csv`]. Blank lines and lines starting with
    /// `#` are skipped. Always yields rank 2.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split(',')
                .map(|c| {
                    c.trim()
                        .parse::<f64>()
                        .map_err(|_| CliError::Parse(format!("line {}: bad number '{}'", lineno + 1, c.trim())))
                })
                .collect::<Result<Vec<f64>>>()?;
            if let Some(first) = rows.first() {
                if first.len() != row.len() {
                    return parse_err(format!(
                        "line {}: {} columns, expected {}",
                        lineno + 1,
                        row.len(),
                        first.len()
                    ));
                }
            }
            rows.push(row);
        }
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for j in 0..c {
            data.extend(rows.iter().map(|row| row[j]));
        }
        Self::new(vec![r, c], data)
    }
}
