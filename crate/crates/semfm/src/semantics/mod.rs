//! Sparse semantic point clouds, their similarity graphs, clustering into
//! semantic regions, and cross-object anchor selection.

use std::collections::HashMap;

use nalgebra::{DMatrix, Point3};

use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;
use crate::rng::Rng;

mod cluster;
pub mod io;

pub use cluster::spectral_cluster;

/// Surface samples carrying semantic embeddings, as produced by an upstream
/// feature-lifting pipeline. This type is the file-interface boundary.
#[derive(Debug, Clone)]
pub struct LiftedSampleSet {
    dim: usize,
    positions: Vec<Point3<f64>>,
    embeddings: Vec<Vec<f64>>,
}

impl LiftedSampleSet {
    pub fn new(positions: Vec<Point3<f64>>, embeddings: Vec<Vec<f64>>) -> Result<Self> {
        if positions.is_empty() || positions.len() != embeddings.len() {
            return Err(Error::InvalidArgument(
                "lifted sample set needs matching, non-empty positions and embeddings".into(),
            ));
        }
        let dim = embeddings[0].len();
        if dim == 0 {
            return Err(Error::InvalidArgument("embedding dimension must be >= 1".into()));
        }
        for (i, e) in embeddings.iter().enumerate() {
            if e.len() != dim {
                return Err(Error::InvalidArgument(format!(
                    "sample {i} has embedding dimension {} != {dim}",
                    e.len()
                )));
            }
            if e.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "sample {i} has a non-finite embedding entry"
                )));
            }
        }
        Ok(LiftedSampleSet {
            dim,
            positions,
            embeddings,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn positions(&self) -> &[Point3<f64>] {
        &self.positions
    }

    pub fn embeddings(&self) -> &[Vec<f64>] {
        &self.embeddings
    }
}

/// Sparse point cloud with aggregated embeddings.
#[derive(Debug, Clone)]
pub struct SemanticPointCloud {
    points: Vec<Point3<f64>>,
    embeddings: Vec<Vec<f64>>,
    dim: usize,
}

impl SemanticPointCloud {
    pub fn new(points: Vec<Point3<f64>>, embeddings: Vec<Vec<f64>>) -> Result<Self> {
        if points.is_empty() || points.len() != embeddings.len() {
            return Err(Error::InvalidArgument(
                "point cloud needs matching, non-empty points and embeddings".into(),
            ));
        }
        let dim = embeddings[0].len();
        if embeddings.iter().any(|e| e.len() != dim) {
            return Err(Error::InvalidArgument(
                "point cloud embeddings have mixed dimensions".into(),
            ));
        }
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                if (points[i] - points[j]).norm() <= 1e-9 {
                    return Err(Error::InvalidArgument(format!(
                        "points {i} and {j} coincide"
                    )));
                }
            }
        }
        Ok(SemanticPointCloud {
            points,
            embeddings,
            dim,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Point3<f64>] {
        &self.points
    }

    pub fn embeddings(&self) -> &[Vec<f64>] {
        &self.embeddings
    }
}

/// Aggregate lifted samples onto `m_points` area-weighted surface samples:
/// each point averages the sample embeddings within `epsilon`; points with an
/// empty neighborhood inherit the nearest sample's embedding.
pub fn aggregate_samples(
    mesh: &TriangleMesh,
    samples: &LiftedSampleSet,
    m_points: usize,
    epsilon: f64,
    seed: u64,
) -> Result<SemanticPointCloud> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("sample set is empty".into()));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "aggregation radius must be positive, got {epsilon}"
        )));
    }
    if m_points == 0 {
        return Err(Error::InvalidArgument("target point count must be >= 1".into()));
    }

    let mut rng = Rng::new(seed ^ 0xa66);
    let mut points: Vec<Point3<f64>> = Vec::with_capacity(m_points);
    // Rejection keeps the pairwise-distinct invariant; collisions are
    // vanishingly rare on any non-degenerate surface.
    let mut guard = 0;
    while points.len() < m_points {
        let sample = mesh.sample_surface(1, &mut rng)[0];
        let p = sample.position;
        if points
            .iter()
            .all(|q| (p - q).norm_squared() > 1e-18)
        {
            points.push(p);
        } else {
            guard += 1;
            if guard > 100 * m_points {
                return Err(Error::InvalidArgument(
                    "could not draw pairwise-distinct surface points".into(),
                ));
            }
        }
    }

    let grid = SpatialGrid::build(samples.positions(), epsilon);
    let dim = samples.dim();
    let embeddings: Vec<Vec<f64>> = points
        .iter()
        .map(|p| {
            let mut acc = vec![0.0; dim];
            let mut count = 0usize;
            grid.for_each_within(p, epsilon, |idx| {
                for (a, b) in acc.iter_mut().zip(&samples.embeddings()[idx]) {
                    *a += b;
                }
                count += 1;
            });
            if count > 0 {
                for a in &mut acc {
                    *a /= count as f64;
                }
                acc
            } else {
                // Sparse coverage: fall back to the nearest sample.
                let nearest = nearest_index(samples.positions(), p);
                samples.embeddings()[nearest].clone()
            }
        })
        .collect();

    Ok(SemanticPointCloud {
        points,
        embeddings,
        dim,
    })
}

fn nearest_index(candidates: &[Point3<f64>], p: &Point3<f64>) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in candidates.iter().enumerate() {
        let d = (p - c).norm_squared();
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// Uniform hash grid for fixed-radius neighbor queries.
struct SpatialGrid {
    cell: f64,
    map: HashMap<(i64, i64, i64), Vec<usize>>,
    positions: Vec<Point3<f64>>,
}

impl SpatialGrid {
    fn build(positions: &[Point3<f64>], cell: f64) -> Self {
        let mut map: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in positions.iter().enumerate() {
            map.entry(Self::key(p, cell)).or_default().push(i);
        }
        SpatialGrid {
            cell,
            map,
            positions: positions.to_vec(),
        }
    }

    fn key(p: &Point3<f64>, cell: f64) -> (i64, i64, i64) {
        (
            (p.x / cell).floor() as i64,
            (p.y / cell).floor() as i64,
            (p.z / cell).floor() as i64,
        )
    }

    fn for_each_within(&self, p: &Point3<f64>, radius: f64, mut visit: impl FnMut(usize)) {
        let r2 = radius * radius;
        let (cx, cy, cz) = Self::key(p, self.cell);
        let reach = (radius / self.cell).ceil() as i64;
        for dx in -reach..=reach {
            for dy in -reach..=reach {
                for dz in -reach..=reach {
                    if let Some(bucket) = self.map.get(&(cx + dx, cy + dy, cz + dz)) {
                        for &i in bucket {
                            if (self.positions[i] - p).norm_squared() <= r2 {
                                visit(i);
                            }
                        }
                    }
                }
            }
        }
    }
}

/// How the Gaussian bandwidth of the semantic graph is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaMode {
    /// Use the given positive value.
    Explicit(f64),
    /// Median embedding distance over the kNN edges.
    Median,
}

/// Spatial kNN graph whose edge weights encode semantic similarity:
/// w = exp(-||s_j - s_l||^2 / sigma^2).
#[derive(Debug, Clone)]
pub struct SemanticGraph {
    adjacency: Vec<Vec<(usize, f64)>>,
    k_nn: usize,
    sigma: f64,
}

impl SemanticGraph {
    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn k_nn(&self) -> usize {
        self.k_nn
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    /// Unique undirected edges (i < j) with weights.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for (i, adj) in self.adjacency.iter().enumerate() {
            for &(j, w) in adj {
                if i < j {
                    out.push((i, j, w));
                }
            }
        }
        out
    }

    pub fn dense_weights(&self) -> DMatrix<f64> {
        let n = self.node_count();
        let mut w = DMatrix::zeros(n, n);
        for (i, j, v) in self.edges() {
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
        w
    }
}

/// Build the semantic graph: neighbors by Euclidean distance between point
/// positions (union-symmetrized), weights from embedding distances.
pub fn build_semantic_graph(
    pc: &SemanticPointCloud,
    k_nn: usize,
    sigma: SigmaMode,
) -> Result<SemanticGraph> {
    let m = pc.len();
    if k_nn == 0 {
        return Err(Error::InvalidArgument("k_nn must be >= 1".into()));
    }
    if k_nn >= m {
        return Err(Error::InvalidArgument(format!(
            "k_nn = {k_nn} must be smaller than the point count {m}"
        )));
    }

    // Directed kNN by position, then union-symmetrize.
    let mut edge_set: Vec<(usize, usize)> = Vec::with_capacity(m * k_nn);
    for j in 0..m {
        let mut order: Vec<usize> = (0..m).filter(|&l| l != j).collect();
        order.sort_by(|&a, &b| {
            let da = (pc.points[a] - pc.points[j]).norm_squared();
            let db = (pc.points[b] - pc.points[j]).norm_squared();
            da.partial_cmp(&db).unwrap().then(a.cmp(&b))
        });
        for &l in order.iter().take(k_nn) {
            let (a, b) = if j < l { (j, l) } else { (l, j) };
            edge_set.push((a, b));
        }
    }
    edge_set.sort_unstable();
    edge_set.dedup();

    let embedding_distance = |a: usize, b: usize| -> f64 {
        pc.embeddings[a]
            .iter()
            .zip(&pc.embeddings[b])
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    };

    let sigma = match sigma {
        SigmaMode::Explicit(v) => {
            if !(v > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "sigma must be positive, got {v}"
                )));
            }
            v
        }
        SigmaMode::Median => {
            let mut dists: Vec<f64> = edge_set
                .iter()
                .map(|&(a, b)| embedding_distance(a, b))
                .collect();
            dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let median = if dists.is_empty() {
                0.0
            } else if dists.len() % 2 == 1 {
                dists[dists.len() / 2]
            } else {
                0.5 * (dists[dists.len() / 2 - 1] + dists[dists.len() / 2])
            };
            // Uniform embeddings collapse the median; any positive value
            // then yields the correct all-ones weights.
            if median > 1e-12 {
                median
            } else {
                1.0
            }
        }
    };

    let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
    for &(a, b) in &edge_set {
        let d = embedding_distance(a, b);
        let w = (-(d * d) / (sigma * sigma)).exp();
        adjacency[a].push((b, w));
        adjacency[b].push((a, w));
    }
    for adj in &mut adjacency {
        adj.sort_unstable_by_key(|x| x.0);
    }

    Ok(SemanticGraph {
        adjacency,
        k_nn,
        sigma,
    })
}

/// Partition of a point cloud into K semantic clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSet {
    labels: Vec<usize>,
    k: usize,
    /// Arithmetic means of member embeddings, one per cluster.
    means: Vec<Vec<f64>>,
    sizes: Vec<usize>,
}

impl ClusterSet {
    /// Assemble from labels and the source embeddings, computing cluster
    /// means and sizes; rejects empty clusters.
    pub fn from_labels(labels: Vec<usize>, k: usize, embeddings: &[Vec<f64>]) -> Result<Self> {
        if labels.len() != embeddings.len() {
            return Err(Error::InvalidArgument(
                "label count != embedding count".into(),
            ));
        }
        let dim = embeddings.first().map(|e| e.len()).unwrap_or(0);
        let mut means = vec![vec![0.0; dim]; k];
        let mut sizes = vec![0usize; k];
        for (&label, emb) in labels.iter().zip(embeddings) {
            if label >= k {
                return Err(Error::InvalidArgument(format!(
                    "label {label} out of range for K = {k}"
                )));
            }
            sizes[label] += 1;
            for (m, v) in means[label].iter_mut().zip(emb) {
                *m += v;
            }
        }
        if let Some(empty) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidArgument(format!("cluster {empty} is empty")));
        }
        for (mean, &size) in means.iter_mut().zip(&sizes) {
            for v in mean {
                *v /= size as f64;
            }
        }
        Ok(ClusterSet {
            labels,
            k,
            means,
            sizes,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn dim(&self) -> usize {
        self.means.first().map(|m| m.len()).unwrap_or(0)
    }
}

/// Pairwise cosine similarity between the cluster means of two shapes.
/// Zero-norm means contribute zero similarity; the second return value
/// counts how many such clusters were hit.
pub fn cluster_similarity_with_stats(cs1: &ClusterSet, cs2: &ClusterSet) -> Result<(DMatrix<f64>, usize)> {
    if cs1.dim() != cs2.dim() {
        return Err(Error::InvalidArgument(format!(
            "cluster sets have different embedding dimensions: {} vs {}",
            cs1.dim(),
            cs2.dim()
        )));
    }
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let norms1: Vec<f64> = cs1.means().iter().map(|m| norm(m)).collect();
    let norms2: Vec<f64> = cs2.means().iter().map(|m| norm(m)).collect();
    let zero_norms = norms1.iter().chain(&norms2).filter(|&&n| n <= 1e-300).count();

    let mut s = DMatrix::zeros(cs1.k(), cs2.k());
    for (c, m1) in cs1.means().iter().enumerate() {
        for (cp, m2) in cs2.means().iter().enumerate() {
            let denom = norms1[c] * norms2[cp];
            if denom > 0.0 {
                let dot: f64 = m1.iter().zip(m2).map(|(a, b)| a * b).sum();
                s[(c, cp)] = (dot / denom).clamp(-1.0, 1.0);
            }
        }
    }
    Ok((s, zero_norms))
}

pub fn cluster_similarity(cs1: &ClusterSet, cs2: &ClusterSet) -> Result<DMatrix<f64>> {
    cluster_similarity_with_stats(cs1, cs2).map(|(s, _)| s)
}

/// One selected cluster correspondence.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AnchorPair {
    pub source_cluster: usize,
    pub target_cluster: usize,
    pub similarity: f64,
}

/// Mutually exclusive cluster correspondences, sorted by descending
/// similarity.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AnchorSet {
    pairs: Vec<AnchorPair>,
}

impl AnchorSet {
    fn new(mut pairs: Vec<AnchorPair>) -> Self {
        pairs.sort_by(|a, b| {
            b.similarity
                .partial_cmp(&a.similarity)
                .unwrap()
                .then(a.source_cluster.cmp(&b.source_cluster))
                .then(a.target_cluster.cmp(&b.target_cluster))
        });
        let set = AnchorSet { pairs };
        debug_assert!(set.is_one_to_one());
        set
    }

    pub fn pairs(&self) -> &[AnchorPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn total_similarity(&self) -> f64 {
        self.pairs.iter().map(|p| p.similarity).sum()
    }

    pub fn is_one_to_one(&self) -> bool {
        let mut src: Vec<usize> = self.pairs.iter().map(|p| p.source_cluster).collect();
        let mut dst: Vec<usize> = self.pairs.iter().map(|p| p.target_cluster).collect();
        src.sort_unstable();
        dst.sort_unstable();
        src.windows(2).all(|w| w[0] != w[1]) && dst.windows(2).all(|w| w[0] != w[1])
    }
}

/// Largest problem side accepted by the exhaustive anchor search.
pub const MAX_ANCHOR_CLUSTERS: usize = 10;

/// The exact maximum-total-similarity injective assignment of cardinality
/// `alpha`, found by exhaustive search (the supported cluster counts are
/// small by construction). Ties resolve to the lexicographically smallest
/// (row, column) pair sequence.
pub fn select_anchors(similarity: &DMatrix<f64>, alpha: usize) -> Result<AnchorSet> {
    let (k1, k2) = similarity.shape();
    let limit = k1.min(k2);
    if limit > MAX_ANCHOR_CLUSTERS {
        return Err(Error::UnsupportedSize(format!(
            "anchor selection supports at most {MAX_ANCHOR_CLUSTERS} clusters per side, got {k1}x{k2}"
        )));
    }
    if alpha == 0 || alpha > limit {
        return Err(Error::InvalidArgument(format!(
            "alpha = {alpha} must be in 1..=min(K1, K2) = {limit}"
        )));
    }

    let mut best_total = f64::NEG_INFINITY;
    let mut best: Vec<(usize, usize)> = Vec::new();

    let mut rows: Vec<usize> = Vec::with_capacity(alpha);
    let mut cols: Vec<usize> = Vec::with_capacity(alpha);
    let mut used_cols = vec![false; k2];

    // Enumerate row combinations (ascending), then injective column
    // assignments for each.
    fn row_combos(
        start: usize,
        k1: usize,
        alpha: usize,
        rows: &mut Vec<usize>,
        cols: &mut Vec<usize>,
        used_cols: &mut Vec<bool>,
        similarity: &DMatrix<f64>,
        best_total: &mut f64,
        best: &mut Vec<(usize, usize)>,
    ) {
        if rows.len() == alpha {
            assign_cols(0.0, rows, cols, used_cols, similarity, best_total, best);
            return;
        }
        for r in start..k1 {
            rows.push(r);
            row_combos(r + 1, k1, alpha, rows, cols, used_cols, similarity, best_total, best);
            rows.pop();
        }
    }

    fn assign_cols(
        total: f64,
        rows: &[usize],
        cols: &mut Vec<usize>,
        used_cols: &mut Vec<bool>,
        similarity: &DMatrix<f64>,
        best_total: &mut f64,
        best: &mut Vec<(usize, usize)>,
    ) {
        let depth = cols.len();
        if depth == rows.len() {
            let candidate: Vec<(usize, usize)> =
                rows.iter().copied().zip(cols.iter().copied()).collect();
            let better = total > *best_total + 1e-15
                || ((total - *best_total).abs() <= 1e-15 && candidate < *best);
            if better {
                *best_total = total;
                *best = candidate;
            }
            return;
        }
        for c in 0..used_cols.len() {
            if used_cols[c] {
                continue;
            }
            used_cols[c] = true;
            cols.push(c);
            assign_cols(
                total + similarity[(rows[depth], c)],
                rows,
                cols,
                used_cols,
                similarity,
                best_total,
                best,
            );
            cols.pop();
            used_cols[c] = false;
        }
    }

    row_combos(
        0,
        k1,
        alpha,
        &mut rows,
        &mut cols,
        &mut used_cols,
        similarity,
        &mut best_total,
        &mut best,
    );

    let pairs = best
        .into_iter()
        .map(|(r, c)| AnchorPair {
            source_cluster: r,
            target_cluster: c,
            similarity: similarity[(r, c)],
        })
        .collect();
    Ok(AnchorSet::new(pairs))
}

#[cfg(test)]
mod tests;
