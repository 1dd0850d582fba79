//! Spectral clustering on the semantic graph.
//!
//! Symmetric-normalized Laplacian, K smallest eigenvectors, row-normalized
//! spectral embedding, seeded k-means++ (iteration cap 100, tolerance 1e-6).
//! Output labels are renumbered by first occurrence so downstream artifacts
//! never see k-means' arbitrary label order.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::rng::Rng;

use super::{ClusterSet, SemanticGraph, SemanticPointCloud};

const KMEANS_MAX_ITER: usize = 100;
const KMEANS_TOL: f64 = 1e-6;
const KMEANS_RESTARTS: u64 = 10;

/// Cluster the point cloud into K semantic regions using its graph.
pub fn spectral_cluster(
    pc: &SemanticPointCloud,
    graph: &SemanticGraph,
    k: usize,
    seed: u64,
) -> Result<ClusterSet> {
    let m = graph.node_count();
    if pc.len() != m {
        return Err(Error::InvalidArgument(
            "point cloud and graph sizes differ".into(),
        ));
    }
    if k < 2 {
        return Err(Error::InvalidArgument(format!("K = {k} must be >= 2")));
    }
    if k > m {
        return Err(Error::InvalidArgument(format!(
            "K = {k} exceeds the point count {m}"
        )));
    }

    let w = graph.dense_weights();
    let degrees: Vec<f64> = (0..m).map(|i| w.row(i).sum()).collect();
    let inv_sqrt_d: Vec<f64> = degrees
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect();
    let mut lap = DMatrix::identity(m, m);
    for i in 0..m {
        for j in 0..m {
            lap[(i, j)] -= inv_sqrt_d[i] * w[(i, j)] * inv_sqrt_d[j];
        }
    }
    let lap = (&lap + lap.transpose()) * 0.5;
    let eig = lap.symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());

    // Row-normalized K-dimensional spectral embedding.
    let mut embedding = vec![vec![0.0; k]; m];
    for (col, &idx) in order.iter().take(k).enumerate() {
        for row in 0..m {
            embedding[row][col] = eig.eigenvectors[(row, idx)];
        }
    }
    for row in &mut embedding {
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-12 {
            for v in row {
                *v /= norm;
            }
        }
    }

    // Restarted k-means keeps the partition a stable functional of the data
    // rather than of one lucky init; the lowest-inertia run wins, ties to
    // the earliest restart.
    let mut best: Option<(f64, Vec<usize>)> = None;
    for restart in 0..KMEANS_RESTARTS {
        let labels = match kmeans(&embedding, k, seed.wrapping_add(restart)) {
            Ok(labels) => labels,
            // One re-seed on an empty cluster, then give up.
            Err(Error::EmptyCluster) => {
                match kmeans(&embedding, k, seed.wrapping_add(KMEANS_RESTARTS + restart)) {
                    Ok(labels) => labels,
                    Err(Error::EmptyCluster) => continue,
                    Err(other) => return Err(other),
                }
            }
            Err(other) => return Err(other),
        };
        let score = inertia(&embedding, &labels, k);
        if best.as_ref().is_none_or(|(s, _)| score < *s) {
            best = Some((score, labels));
        }
    }
    let raw_labels = best.ok_or(Error::EmptyCluster)?.1;

    let labels = relabel_by_first_occurrence(&raw_labels, k);
    ClusterSet::from_labels(labels, k, pc.embeddings())
}

/// Seeded k-means++ on row vectors. Ties in assignment go to the lowest
/// center index.
fn kmeans(rows: &[Vec<f64>], k: usize, seed: u64) -> Result<Vec<usize>> {
    let m = rows.len();
    let dim = rows[0].len();
    let mut rng = Rng::new(seed ^ 0x6d3a);

    // k-means++ initialization.
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    chosen.push(rng.index(m));
    centers.push(rows[chosen[0]].clone());
    let mut d2 = vec![0.0f64; m];
    while centers.len() < k {
        let mut total = 0.0;
        for (i, row) in rows.iter().enumerate() {
            let d = squared_distance(row, centers.last().unwrap());
            if centers.len() == 1 || d < d2[i] {
                d2[i] = d;
            }
            total += d2[i];
        }
        let next = if total > 1e-300 {
            rng.weighted_index(&d2)
        } else {
            // All remaining mass at zero distance: take the first index not
            // already chosen, keeping K = M well-defined.
            (0..m)
                .find(|i| !chosen.contains(i))
                .ok_or(Error::EmptyCluster)?
        };
        chosen.push(next);
        centers.push(rows[next].clone());
    }

    let mut labels = vec![0usize; m];
    for _ in 0..KMEANS_MAX_ITER {
        // Assignment.
        for (i, row) in rows.iter().enumerate() {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (c, center) in centers.iter().enumerate() {
                let d = squared_distance(row, center);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            labels[i] = best;
        }
        // Update.
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (row, &label) in rows.iter().zip(&labels) {
            counts[label] += 1;
            for (s, v) in sums[label].iter_mut().zip(row) {
                *s += v;
            }
        }
        if counts.contains(&0) {
            return Err(Error::EmptyCluster);
        }
        let mut shift: f64 = 0.0;
        for (c, sum) in sums.iter().enumerate() {
            let mut moved = 0.0;
            for (d, s) in sum.iter().enumerate() {
                let new = s / counts[c] as f64;
                moved += (new - centers[c][d]).powi(2);
                centers[c][d] = new;
            }
            shift = shift.max(moved.sqrt());
        }
        if shift < KMEANS_TOL {
            break;
        }
    }
    Ok(labels)
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Total within-cluster squared distance to centroids.
fn inertia(rows: &[Vec<f64>], labels: &[usize], k: usize) -> f64 {
    let dim = rows[0].len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (row, &l) in rows.iter().zip(labels) {
        counts[l] += 1;
        for (s, v) in sums[l].iter_mut().zip(row) {
            *s += v;
        }
    }
    let mut total = 0.0;
    for (row, &l) in rows.iter().zip(labels) {
        if counts[l] == 0 {
            continue;
        }
        for (d, v) in row.iter().enumerate() {
            let c = sums[l][d] / counts[l] as f64;
            total += (v - c) * (v - c);
        }
    }
    total
}

fn relabel_by_first_occurrence(labels: &[usize], k: usize) -> Vec<usize> {
    let mut mapping = vec![usize::MAX; k];
    let mut next = 0usize;
    let mut out = Vec::with_capacity(labels.len());
    for &l in labels {
        if mapping[l] == usize::MAX {
            mapping[l] = next;
            next += 1;
        }
        out.push(mapping[l]);
    }
    out
}
