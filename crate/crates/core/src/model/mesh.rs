use crate::error::{arg_err, Result};
use crate::MpssError;
use std::collections::BTreeSet;
use std::path::Path;

/// Triangulated surface with vertex coordinates in millimetres.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMesh {
    vertices: Vec<[f64; 3]>,
    triangles: Vec<[usize; 3]>,
}

impl SurfaceMesh {
    pub fn new(vertices: Vec<[f64; 3]>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if vertices.is_empty() {
            return arg_err("mesh has no vertices");
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return arg_err("mesh has non-finite coordinates");
        }
        for (f, tri) in triangles.iter().enumerate() {
            if let Some(&v) = tri.iter().find(|&&v| v >= vertices.len()) {
                return arg_err(format!("triangle {f} references vertex {v}, mesh has {}", vertices.len()));
            }
        }
        Ok(Self { vertices, triangles })
    }

    /// Parse the plain-text layout: vertex count, one `x y z` line per
    /// vertex, triangle count, one `i j k` line (zero-based) per triangle.
    pub fn parse(text: &str) -> Result<Self> {
        let mut tokens = text.split_whitespace();
        let mut next = |what: &str| {
            tokens
                .next()
                .ok_or_else(|| MpssError::Parse(format!("mesh file ended while reading {what}")))
        };
        let count = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| MpssError::Parse(format!("expected a count, found '{s}'")))
        };
        let real = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| MpssError::Parse(format!("expected a coordinate, found '{s}'")))
        };
        let nv = count(next("vertex count")?)?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            vertices.push([real(next("vertex")?)?, real(next("vertex")?)?, real(next("vertex")?)?]);
        }
        let nf = count(next("triangle count")?)?;
        let mut triangles = Vec::with_capacity(nf);
        for _ in 0..nf {
            triangles.push([count(next("triangle")?)?, count(next("triangle")?)?, count(next("triangle")?)?]);
        }
        if let Some(extra) = tokens.next() {
            return Err(MpssError::Parse(format!("unexpected trailing token '{extra}' in mesh file")));
        }
        Self::new(vertices, triangles)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.vertices.len());
        for v in &self.vertices {
            out.push_str(&format!("{} {} {}\n", v[0], v[1], v[2]));
        }
        out.push_str(&format!("{}\n", self.triangles.len()));
        for t in &self.triangles {
            out.push_str(&format!("{} {} {}\n", t[0], t[1], t[2]));
        }
        out
    }

    /// Flat `nx x ny` grid in the `z = 0` plane, two triangles per cell.
    /// Vertex `(i, j)` has index `j * nx + i`.
    pub fn grid(nx: usize, ny: usize, spacing_mm: f64) -> Self {
        let mut vertices = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                vertices.push([i as f64 * spacing_mm, j as f64 * spacing_mm, 0.0]);
            }
        }
        let mut triangles = Vec::new();
        for j in 0..ny.saturating_sub(1) {
            for i in 0..nx.saturating_sub(1) {
                let v = j * nx + i;
                triangles.push([v, v + 1, v + nx]);
                triangles.push([v + 1, v + nx + 1, v + nx]);
            }
        }
        Self { vertices, triangles }
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Triangle areas in cm^2.
    pub fn triangle_areas_cm2(&self) -> Vec<f64> {
        self.triangles
            .iter()
            .map(|&[a, b, c]| {
                let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
                let u = [pb[0] - pa[0], pb[1] - pa[1], pb[2] - pa[2]];
                let v = [pc[0] - pa[0], pc[1] - pa[1], pc[2] - pa[2]];
                let cross = [
                    u[1] * v[2] - u[2] * v[1],
                    u[2] * v[0] - u[0] * v[2],
                    u[0] * v[1] - u[1] * v[0],
                ];
                0.5 * (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt() / 100.0
            })
            .collect()
    }

    /// Per-vertex area in cm^2: one third of every incident triangle.
    pub fn vertex_areas_cm2(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.vertices.len()];
        for (tri, area) in self.triangles.iter().zip(self.triangle_areas_cm2()) {
            for &v in tri {
                out[v] += area / 3.0;
            }
        }
        out
    }

    pub fn total_area_cm2(&self) -> f64 {
        self.triangle_areas_cm2().iter().sum()
    }

    /// Vertex adjacency through triangle edges.
    pub fn neighbors(&self) -> Vec<BTreeSet<usize>> {
        let mut adj = vec![BTreeSet::new(); self.vertices.len()];
        for &[a, b, c] in &self.triangles {
            for (u, v) in [(a, b), (b, c), (c, a)] {
                adj[u].insert(v);
                adj[v].insert(u);
            }
        }
        adj
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        let (p, q) = (self.vertices[a], self.vertices[b]);
        ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
    }
}

/// Grow a connected patch around each center until its area reaches
/// `extent_cm2`. Each step adds the frontier vertex closest to the center.
pub fn expand_patches(centers: &[usize], extent_cm2: f64, mesh: &SurfaceMesh) -> Result<Vec<Vec<usize>>> {
    if !(extent_cm2 >= 0.0 && extent_cm2.is_finite()) {
        return arg_err(format!("patch extent must be finite and nonnegative, got {extent_cm2}"));
    }
    let total = mesh.total_area_cm2();
    if extent_cm2 > total {
        return arg_err(format!("patch extent {extent_cm2} cm^2 exceeds the mesh area {total} cm^2"));
    }
    if let Some(&bad) = centers.iter().find(|&&c| c >= mesh.n_vertices()) {
        return arg_err(format!("patch center {bad} out of range for {} vertices", mesh.n_vertices()));
    }
    let areas = mesh.vertex_areas_cm2();
    let adj = mesh.neighbors();
    centers
        .iter()
        .map(|&c| {
            let mut members = vec![c];
            let mut inside = BTreeSet::from([c]);
            let mut area = areas[c];
            while area < extent_cm2 {
                let next = inside
                    .iter()
                    .flat_map(|&v| adj[v].iter().copied())
                    .filter(|v| !inside.contains(v))
                    .map(|v| (mesh.distance(c, v), v))
                    .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let Some((_, v)) = next else {
                    return arg_err(format!(
                        "patch around vertex {c} reached {area} cm^2, its connected component is too small for {extent_cm2} cm^2"
                    ));
                };
                inside.insert(v);
                members.push(v);
                area += areas[v];
            }
            Ok(members)
        })
        .collect()
}
