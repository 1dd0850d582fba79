//! Triangle meshes, their discrete differential operators, and mesh I/O.

use nalgebra::Point3;

use crate::error::{Error, Result};
use crate::rng::Rng;

pub mod geodesic;
pub mod io;
pub mod laplacian;
pub mod primitives;

pub use geodesic::{geodesic_diameter_estimate, graph_geodesics};
pub use laplacian::{cotangent_laplacian, vertex_areas, SparseSymmetricMatrix};

/// Indexed triangle mesh. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Point3<f64>>,
    faces: Vec<[usize; 3]>,
}

/// Faces smaller than this (model units squared) are rejected as degenerate.
pub const MIN_FACE_AREA: f64 = 1e-12;

impl TriangleMesh {
    /// Build a mesh, checking the structural invariants: at least 4 vertices
    /// and 1 face, in-range indices, no repeated vertex within a face, and no
    /// degenerate (near-zero-area) face.
    pub fn new(vertices: Vec<Point3<f64>>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if vertices.len() < 4 {
            return Err(Error::InvalidMesh(format!(
                "mesh needs at least 4 vertices, got {}",
                vertices.len()
            )));
        }
        if faces.is_empty() {
            return Err(Error::InvalidMesh("mesh has no faces".into()));
        }
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                if v >= vertices.len() {
                    return Err(Error::InvalidMesh(format!(
                        "face {fi} references vertex {v} but the mesh has {} vertices",
                        vertices.len()
                    )));
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::InvalidMesh(format!(
                    "face {fi} repeats a vertex: {f:?}"
                )));
            }
            let area = triangle_area(&vertices[f[0]], &vertices[f[1]], &vertices[f[2]]);
            if !(area > MIN_FACE_AREA) {
                return Err(Error::InvalidMesh(format!(
                    "face {fi} is degenerate (area {area:.3e})"
                )));
            }
        }
        for (vi, v) in vertices.iter().enumerate() {
            if !(v.x.is_finite() && v.y.is_finite() && v.z.is_finite()) {
                return Err(Error::InvalidMesh(format!(
                    "vertex {vi} has a non-finite coordinate"
                )));
            }
        }
        Ok(TriangleMesh { vertices, faces })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn vertex(&self, i: usize) -> Point3<f64> {
        self.vertices[i]
    }

    pub fn face_area(&self, fi: usize) -> f64 {
        let [a, b, c] = self.faces[fi];
        triangle_area(&self.vertices[a], &self.vertices[b], &self.vertices[c])
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Unique undirected edges (i < j).
    pub fn edges(&self) -> Vec<[usize; 2]> {
        let mut edges: Vec<[usize; 2]> = self
            .faces
            .iter()
            .flat_map(|&[a, b, c]| [[a, b], [b, c], [c, a]])
            .map(|[i, j]| if i < j { [i, j] } else { [j, i] })
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    pub fn mean_edge_length(&self) -> f64 {
        let edges = self.edges();
        if edges.is_empty() {
            return 0.0;
        }
        let total: f64 = edges
            .iter()
            .map(|&[i, j]| (self.vertices[i] - self.vertices[j]).norm())
            .sum();
        total / edges.len() as f64
    }

    pub fn bounding_box(&self) -> (Point3<f64>, Point3<f64>) {
        let mut min = self.vertices[0];
        let mut max = self.vertices[0];
        for v in &self.vertices {
            for d in 0..3 {
                min[d] = min[d].min(v[d]);
                max[d] = max[d].max(v[d]);
            }
        }
        (min, max)
    }

    pub fn bounding_box_diagonal(&self) -> f64 {
        let (min, max) = self.bounding_box();
        (max - min).norm()
    }

    /// Area-weighted uniform surface samples. Each sample records the face it
    /// came from so callers can attach per-face metadata.
    pub fn sample_surface(&self, count: usize, rng: &mut Rng) -> Vec<SurfaceSample> {
        let areas: Vec<f64> = (0..self.faces.len()).map(|f| self.face_area(f)).collect();
        let mut cumulative = Vec::with_capacity(areas.len());
        let mut acc = 0.0;
        for a in &areas {
            acc += a;
            cumulative.push(acc);
        }
        let total = acc;
        (0..count)
            .map(|_| {
                let target = rng.uniform() * total;
                let fi = match cumulative.binary_search_by(|c| c.partial_cmp(&target).unwrap()) {
                    Ok(i) => i,
                    Err(i) => i.min(self.faces.len() - 1),
                };
                let [a, b, c] = self.faces[fi];
                // Uniform barycentric point.
                let (r1, r2) = (rng.uniform(), rng.uniform());
                let s = r1.sqrt();
                let (u, v, w) = (1.0 - s, s * (1.0 - r2), s * r2);
                let p = self.vertices[a].coords * u
                    + self.vertices[b].coords * v
                    + self.vertices[c].coords * w;
                SurfaceSample {
                    position: Point3::from(p),
                    face: fi,
                    barycentric: [u, v, w],
                }
            })
            .collect()
    }
}

/// A point drawn on the surface of a mesh.
#[derive(Debug, Clone, Copy)]
pub struct SurfaceSample {
    pub position: Point3<f64>,
    pub face: usize,
    pub barycentric: [f64; 3],
}

impl SurfaceSample {
    /// Index of the face vertex nearest to the sample (ties to the lowest).
    pub fn nearest_face_vertex(&self, mesh: &TriangleMesh) -> usize {
        let face = mesh.faces()[self.face];
        let mut best = face[0];
        let mut best_d = (mesh.vertex(face[0]) - self.position).norm_squared();
        for &v in &face[1..] {
            let d = (mesh.vertex(v) - self.position).norm_squared();
            if d < best_d {
                best_d = d;
                best = v;
            }
        }
        best
    }
}

pub(crate) fn triangle_area(a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}
