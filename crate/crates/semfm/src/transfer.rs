//! Region transfer through a correspondence and the evaluation metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmap::{FunctionalMap, PointwiseMap};
use crate::mesh::geodesic::EdgeGraph;
use crate::mesh::TriangleMesh;
use crate::spectral::SpectralBasis;

/// Vertex set marking an interaction region on a named mesh. Stored sorted
/// and duplicate-free.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffordanceRegion {
    mesh_id: String,
    vertices: Vec<usize>,
}

impl AffordanceRegion {
    pub fn new(mesh_id: impl Into<String>, mut vertices: Vec<usize>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::InvalidArgument("affordance region is empty".into()));
        }
        vertices.sort_unstable();
        vertices.dedup();
        Ok(AffordanceRegion {
            mesh_id: mesh_id.into(),
            vertices,
        })
    }

    pub fn checked(self, mesh: &TriangleMesh) -> Result<Self> {
        if let Some(&bad) = self.vertices.iter().find(|&&v| v >= mesh.vertex_count()) {
            return Err(Error::InvalidArgument(format!(
                "region vertex {bad} out of range (|V| = {})",
                mesh.vertex_count()
            )));
        }
        Ok(self)
    }

    pub fn mesh_id(&self) -> &str {
        &self.mesh_id
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn contains(&self, vertex: usize) -> bool {
        self.vertices.binary_search(&vertex).is_ok()
    }

    /// Dense 0/1 indicator of length `n`.
    pub fn indicator(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for &v in &self.vertices {
            out[v] = 1.0;
        }
        out
    }
}

/// How a region crosses the correspondence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransferMode {
    /// Image of the vertex set under the pointwise map.
    Pointwise,
    /// Spectral indicator transport with thresholding.
    Indicator,
}

/// Direct image of the region under the pointwise map, deduplicated.
pub fn transfer_region_pointwise(
    map: &PointwiseMap,
    region: &AffordanceRegion,
    target_mesh_id: impl Into<String>,
) -> Result<AffordanceRegion> {
    if let Some(&bad) = region.vertices().iter().find(|&&v| v >= map.len()) {
        return Err(Error::InvalidArgument(format!(
            "region vertex {bad} outside the map domain (|V1| = {})",
            map.len()
        )));
    }
    let image: Vec<usize> = region.vertices().iter().map(|&v| map.target_of(v)).collect();
    AffordanceRegion::new(target_mesh_id, image)
}

/// Spectral route: project the indicator on the source, transport the
/// coefficients through C^T, reconstruct on the target, and keep vertices at
/// or above `threshold_fraction` of the field maximum.
pub fn transfer_region_indicator(
    basis1: &SpectralBasis,
    basis2: &SpectralBasis,
    fmap: &FunctionalMap,
    region: &AffordanceRegion,
    threshold_fraction: f64,
    target_mesh_id: impl Into<String>,
) -> Result<AffordanceRegion> {
    if !(threshold_fraction > 0.0 && threshold_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "threshold fraction must lie in (0, 1), got {threshold_fraction}"
        )));
    }
    let k = fmap.k();
    if k > basis1.k() || k > basis2.k() {
        return Err(Error::InvalidArgument(
            "functional map dimension exceeds the bases".into(),
        ));
    }
    let indicator = region.indicator(basis1.vertex_count());
    let coeffs1 = basis1.project_column(&indicator)?;
    // C maps target coefficients to source coefficients; its transpose
    // pushes a source function onto the target.
    let mut coeffs2 = vec![0.0; k];
    for j in 0..k {
        let mut acc = 0.0;
        for i in 0..k {
            acc += fmap.matrix()[(i, j)] * coeffs1[i];
        }
        coeffs2[j] = acc;
    }
    let mut padded = vec![0.0; basis2.k()];
    padded[..k].copy_from_slice(&coeffs2);
    let field = basis2.reconstruct_column(&padded)?;
    let max = field.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return Err(Error::EmptyTransfer(
            "transported indicator has no positive response; lower the threshold".into(),
        ));
    }
    let cut = threshold_fraction * max;
    let kept: Vec<usize> = field
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= cut)
        .map(|(i, _)| i)
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyTransfer(
            "threshold removed every vertex; lower the threshold".into(),
        ));
    }
    AffordanceRegion::new(target_mesh_id, kept)
}

/// Intersection over union of two vertex sets on the same mesh.
pub fn iou(a: &AffordanceRegion, b: &AffordanceRegion) -> Result<f64> {
    if a.mesh_id() != b.mesh_id() {
        return Err(Error::MeshIdMismatch {
            a: a.mesh_id().to_string(),
            b: b.mesh_id().to_string(),
        });
    }
    let mut intersection = 0usize;
    let (mut i, mut j) = (0usize, 0usize);
    let (va, vb) = (a.vertices(), b.vertices());
    while i < va.len() && j < vb.len() {
        match va[i].cmp(&vb[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                intersection += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = va.len() + vb.len() - intersection;
    Ok(intersection as f64 / union as f64)
}

/// One transfer evaluation record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransferReport {
    pub source: String,
    pub target: String,
    pub iou: f64,
    pub runtime_seconds: f64,
    pub alpha: usize,
    pub anchor_similarities: Vec<f64>,
    pub mode: TransferMode,
}

impl TransferReport {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.iou) {
            return Err(Error::InvalidArgument(format!(
                "IoU {} outside [0, 1]",
                self.iou
            )));
        }
        if self.runtime_seconds < 0.0 {
            return Err(Error::InvalidArgument("negative runtime".into()));
        }
        Ok(())
    }
}

/// Mean IoU over a full ordered-pair sweep of `n_objects` objects; the
/// report count must be exactly N(N-1).
pub fn category_average_iou(reports: &[TransferReport], n_objects: usize) -> Result<f64> {
    let expected = n_objects * n_objects.saturating_sub(1);
    if reports.len() != expected {
        return Err(Error::InvalidArgument(format!(
            "expected {expected} ordered-pair reports for N = {n_objects}, got {}",
            reports.len()
        )));
    }
    Ok(reports.iter().map(|r| r.iou).sum::<f64>() / reports.len() as f64)
}

/// Per-vertex geodesic deviation between two maps into `mesh2`, normalized by
/// the target's geodesic diameter estimate. Unreachable targets yield +inf.
pub fn geodesic_error(
    map: &PointwiseMap,
    ground_truth: &PointwiseMap,
    mesh2: &TriangleMesh,
) -> Result<Vec<f64>> {
    if map.len() != ground_truth.len() {
        return Err(Error::InvalidArgument(
            "maps cover different source vertex counts".into(),
        ));
    }
    let diameter = crate::mesh::geodesic_diameter_estimate(mesh2, 0);
    if !(diameter > 0.0) {
        return Err(Error::InvalidArgument(
            "degenerate geodesic diameter on the target mesh".into(),
        ));
    }
    let graph = EdgeGraph::build(mesh2);
    let errors = map
        .targets()
        .iter()
        .zip(ground_truth.targets())
        .map(|(&got, &truth)| {
            if got == truth {
                0.0
            } else {
                let dist = graph.dijkstra(&[truth], Some(got));
                dist[got] / diameter
            }
        })
        .collect();
    Ok(errors)
}

/// Median of a list, ignoring non-finite entries; +inf when everything is
/// unreachable.
pub fn median(values: &[f64]) -> f64 {
    let mut finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return f64::INFINITY;
    }
    finite.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = finite.len() / 2;
    if finite.len() % 2 == 1 {
        finite[mid]
    } else {
        0.5 * (finite[mid - 1] + finite[mid])
    }
}
