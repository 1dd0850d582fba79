//! Per-vertex descriptor functions: smoothed anchor-region indicators for the
//! semantic pipeline, and wave kernel signatures for the geometry-only
//! baseline.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;
use crate::semantics::{AnchorSet, SemanticPointCloud};
use crate::spectral::SpectralBasis;

/// Which shape of a pair an anchor column refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairSide {
    Source,
    Target,
}

/// Columns are unit-norm diffused anchor indicators; column i on the source
/// and column i on the target refer to the same anchor pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorMatrix {
    values: DMatrix<f64>,
}

impl DescriptorMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn alpha(&self) -> usize {
        self.values.ncols()
    }

    pub fn vertex_count(&self) -> usize {
        self.values.nrows()
    }

    /// Wrap a raw descriptor matrix (used by the baseline path, whose columns
    /// are not indicator-derived).
    pub fn from_raw(values: DMatrix<f64>) -> Self {
        DescriptorMatrix { values }
    }
}

/// Label each mesh vertex with the cluster of its nearest cloud point.
/// Ties break to the lowest point index.
pub fn vertex_cluster_assignment(
    mesh: &TriangleMesh,
    pc: &SemanticPointCloud,
    labels: &[usize],
) -> Result<Vec<usize>> {
    if pc.is_empty() {
        return Err(Error::InvalidArgument("point cloud is empty".into()));
    }
    if labels.len() != pc.len() {
        return Err(Error::InvalidArgument(
            "label count does not match the point cloud".into(),
        ));
    }
    Ok(mesh
        .vertices()
        .iter()
        .map(|v| {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (j, p) in pc.points().iter().enumerate() {
                let d = (v - p).norm_squared();
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            labels[best]
        })
        .collect())
}

/// Binary indicator per anchor pair: column i is 1 exactly where the vertex
/// assignment equals anchor i's cluster on the requested side.
pub fn indicator_functions(
    assignment: &[usize],
    anchors: &AnchorSet,
    side: PairSide,
    num_clusters: usize,
) -> Result<DMatrix<f64>> {
    let n = assignment.len();
    let alpha = anchors.len();
    let mut out = DMatrix::zeros(n, alpha);
    for (col, pair) in anchors.pairs().iter().enumerate() {
        let cluster = match side {
            PairSide::Source => pair.source_cluster,
            PairSide::Target => pair.target_cluster,
        };
        if cluster >= num_clusters {
            return Err(Error::InvalidArgument(format!(
                "anchor {col} references cluster {cluster}, but only {num_clusters} exist"
            )));
        }
        for (row, &label) in assignment.iter().enumerate() {
            if label == cluster {
                out[(row, col)] = 1.0;
            }
        }
    }
    Ok(out)
}

/// Heat-diffuse each indicator column, clamp the tiny truncation negatives at
/// zero, and normalize to unit l2 norm.
pub fn diffuse_descriptors(
    basis: &SpectralBasis,
    indicators: &DMatrix<f64>,
    t: f64,
) -> Result<DescriptorMatrix> {
    if indicators.nrows() != basis.vertex_count() {
        return Err(Error::InvalidArgument(
            "indicator rows do not match the basis".into(),
        ));
    }
    for col in 0..indicators.ncols() {
        if indicators.column(col).iter().all(|&v| v == 0.0) {
            return Err(Error::EmptyAnchorRegion { column: col });
        }
    }
    let mut diffused = basis.heat_diffuse_matrix(indicators, t)?;
    for col in 0..diffused.ncols() {
        let mut norm2 = 0.0;
        for row in 0..diffused.nrows() {
            let v = diffused[(row, col)].max(0.0);
            diffused[(row, col)] = v;
            norm2 += v * v;
        }
        if norm2 <= 0.0 {
            return Err(Error::EmptyAnchorRegion { column: col });
        }
        let inv = 1.0 / norm2.sqrt();
        for row in 0..diffused.nrows() {
            diffused[(row, col)] *= inv;
        }
    }
    Ok(DescriptorMatrix { values: diffused })
}

/// Wave kernel signature over `n_energies` log-spaced energy bands.
///
/// WKS(v, e) = sum_i phi_i(v)^2 g_e(lambda_i) / sum_i g_e(lambda_i) with
/// Gaussian bands g_e of width sigma_scale * energy step; zero eigenvalues
/// are excluded. With `normalize`, each column is scaled to unit surface
/// integral.
pub fn wks_descriptors(
    basis: &SpectralBasis,
    n_energies: usize,
    sigma_scale: f64,
    normalize: bool,
) -> Result<DMatrix<f64>> {
    if n_energies < 2 {
        return Err(Error::InvalidArgument("need at least 2 energies".into()));
    }
    let lambda_max = basis.eigenvalues().last().copied().unwrap_or(0.0);
    let zero_cut = 1e-9 * lambda_max.max(0.0) + 1e-300;
    let log_lambdas: Vec<(usize, f64)> = basis
        .eigenvalues()
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > zero_cut)
        .map(|(i, &l)| (i, l.ln()))
        .collect();
    if log_lambdas.len() < 2 {
        return Err(Error::InvalidArgument(
            "wave kernel signature needs at least 2 positive eigenvalues".into(),
        ));
    }

    let e_min = log_lambdas.first().unwrap().1;
    let e_max = log_lambdas.last().unwrap().1;
    let step = (e_max - e_min) / (n_energies - 1) as f64;
    let sigma = (sigma_scale * step).max(1e-12);
    let inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);

    let n = basis.vertex_count();
    let phi = basis.eigenfunctions();
    let mut out = DMatrix::zeros(n, n_energies);
    for m in 0..n_energies {
        let e = e_min + step * m as f64;
        let mut weight_sum = 0.0;
        let mut col = vec![0.0; n];
        for &(idx, log_l) in &log_lambdas {
            let w = (-(e - log_l).powi(2) * inv_two_sigma2).exp();
            weight_sum += w;
            for (row, acc) in col.iter_mut().enumerate() {
                let p = phi[(row, idx)];
                *acc += w * p * p;
            }
        }
        for (row, acc) in col.iter().enumerate() {
            out[(row, m)] = acc / weight_sum;
        }
    }

    if normalize {
        for m in 0..n_energies {
            let col: Vec<f64> = out.column(m).iter().copied().collect();
            let integral = basis.integral(&col);
            if integral > 0.0 {
                for row in 0..n {
                    out[(row, m)] /= integral;
                }
            }
        }
    }
    Ok(out)
}
