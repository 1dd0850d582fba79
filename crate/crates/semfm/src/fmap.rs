//! Functional maps: spectral estimation from descriptors, pointwise map
//! recovery, and iterative refinement at growing basis dimension.
//!
//! Convention: C maps target-shape spectral coefficients to source-shape
//! spectral coefficients (pullback along the vertex map), so the recovered
//! pointwise map runs source -> target, which is the direction region
//! transfer needs.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::descriptors::DescriptorMatrix;
use crate::error::{Error, Result};
use crate::spectral::SpectralBasis;

/// Spectral correspondence matrix with its estimation provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalMap {
    c: DMatrix<f64>,
    provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Provenance {
    /// Descriptor column count used at estimation.
    pub alpha: usize,
    /// Regularizer weight actually applied.
    pub reg_weight: f64,
    /// Basis dimensions visited by refinement (starts at the estimation
    /// dimension).
    pub refinement_trace: Vec<usize>,
}

impl FunctionalMap {
    pub fn new(c: DMatrix<f64>, provenance: Provenance) -> Result<Self> {
        if c.nrows() != c.ncols() {
            return Err(Error::InvalidArgument("functional map must be square".into()));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "functional map has non-finite entries".into(),
            ));
        }
        Ok(FunctionalMap { c, provenance })
    }

    pub fn k(&self) -> usize {
        self.c.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Constant-mode consistency: |C00| should be near sqrt(A1/A2). Returns
    /// the relative deviation for the caller to warn on.
    pub fn constant_mode_deviation(&self, basis1: &SpectralBasis, basis2: &SpectralBasis) -> f64 {
        let expected = (basis1.surface_area() / basis2.surface_area()).sqrt();
        (self.c[(0, 0)].abs() - expected).abs() / expected
    }

    pub fn to_json(&self) -> String {
        let doc = FunctionalMapJson {
            k: self.k(),
            c: (0..self.k())
                .map(|r| (0..self.k()).map(|c| self.c[(r, c)]).collect())
                .collect(),
        };
        serde_json::to_string(&doc).expect("functional map serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: FunctionalMapJson = serde_json::from_str(text)
            .map_err(|e| Error::InvalidArgument(format!("malformed functional map JSON: {e}")))?;
        if doc.c.len() != doc.k || doc.c.iter().any(|row| row.len() != doc.k) {
            return Err(Error::InvalidArgument(
                "functional map JSON has inconsistent dimensions".into(),
            ));
        }
        let mut m = DMatrix::zeros(doc.k, doc.k);
        for (r, row) in doc.c.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                m[(r, c)] = v;
            }
        }
        FunctionalMap::new(m, Provenance::default())
    }
}

#[derive(Serialize, Deserialize)]
struct FunctionalMapJson {
    k: usize,
    #[serde(rename = "C")]
    c: Vec<Vec<f64>>,
}

/// Dense vertex-level map: `target_index[i]` is the target vertex matched to
/// source vertex i. Total by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PointwiseMap {
    target_index: Vec<usize>,
}

impl PointwiseMap {
    pub fn new(target_index: Vec<usize>, target_vertex_count: usize) -> Result<Self> {
        if let Some(&bad) = target_index.iter().find(|&&t| t >= target_vertex_count) {
            return Err(Error::InvalidArgument(format!(
                "pointwise map hits vertex {bad}, target has {target_vertex_count}"
            )));
        }
        Ok(PointwiseMap { target_index })
    }

    pub fn len(&self) -> usize {
        self.target_index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.target_index.is_empty()
    }

    pub fn target_of(&self, source_vertex: usize) -> usize {
        self.target_index[source_vertex]
    }

    pub fn targets(&self) -> &[usize] {
        &self.target_index
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&PointwiseMapJson {
            map: self.target_index.clone(),
        })
        .expect("pointwise map serializes")
    }

    pub fn from_json(text: &str, target_vertex_count: usize) -> Result<Self> {
        let doc: PointwiseMapJson = serde_json::from_str(text)
            .map_err(|e| Error::InvalidArgument(format!("malformed pointwise map JSON: {e}")))?;
        PointwiseMap::new(doc.map, target_vertex_count)
    }
}

#[derive(Serialize, Deserialize)]
struct PointwiseMapJson {
    map: Vec<usize>,
}

/// Estimate C by minimizing ||C A2 - A1||_F^2 plus the Laplacian
/// commutativity penalty reg * ||C L2 - L1 C||_F^2, where A_i are the
/// spectral descriptor coefficients. Solved row-by-row as independent ridge
/// systems.
///
/// `reg_weight = None` applies the default 1e-3 * ||A1||_F^2 / k; an explicit
/// 0 is accepted for full-rank descriptor sets.
pub fn estimate_fmap(
    basis1: &SpectralBasis,
    basis2: &SpectralBasis,
    f1: &DescriptorMatrix,
    f2: &DescriptorMatrix,
    k: usize,
    reg_weight: Option<f64>,
) -> Result<FunctionalMap> {
    if f1.alpha() != f2.alpha() {
        return Err(Error::InvalidArgument(format!(
            "descriptor counts differ: {} vs {}",
            f1.alpha(),
            f2.alpha()
        )));
    }
    let alpha = f1.alpha();
    if alpha == 0 {
        return Err(Error::InvalidArgument("no descriptors to match".into()));
    }
    if k == 0 || k > basis1.k() || k > basis2.k() {
        return Err(Error::InvalidArgument(format!(
            "estimation dimension k = {k} exceeds the bases ({}, {})",
            basis1.k(),
            basis2.k()
        )));
    }

    let a1_full = basis1.project(f1.matrix())?;
    let a2_full = basis2.project(f2.matrix())?;
    let a1 = a1_full.rows(0, k).into_owned();
    let a2 = a2_full.rows(0, k).into_owned();

    let reg = match reg_weight {
        Some(w) if w >= 0.0 => w,
        Some(w) => {
            return Err(Error::InvalidArgument(format!(
                "regularizer weight must be nonnegative, got {w}"
            )))
        }
        None => 1e-3 * a1.norm_squared() / k as f64,
    };

    let gram = &a2 * a2.transpose(); // k x k
    let rhs_all = &a2 * a1.transpose(); // k x k, column i = A2 a1_i

    let lambda1 = &basis1.eigenvalues()[..k];
    let lambda2 = &basis2.eigenvalues()[..k];

    let mut c = DMatrix::zeros(k, k);
    for i in 0..k {
        let mut system = gram.clone();
        if reg > 0.0 {
            for j in 0..k {
                let d = lambda2[j] - lambda1[i];
                system[(j, j)] += reg * d * d;
            }
        }
        let rhs = rhs_all.column(i).into_owned();
        let row = match nalgebra::Cholesky::new(system.clone()) {
            Some(chol) => chol.solve(&rhs),
            None => {
                if reg == 0.0 {
                    return Err(Error::SingularSystem(
                        "descriptor system is singular; pass a nonzero regularizer weight".into(),
                    ));
                }
                // Degenerate spectra can leave the ridge system singular on a
                // subspace; fall back to the deterministic minimum-norm
                // least-squares solution.
                system
                    .svd(true, true)
                    .solve(&rhs, 1e-12)
                    .map_err(|e| Error::SingularSystem(e.to_string()))?
            }
        };
        for j in 0..k {
            c[(i, j)] = row[j];
        }
    }

    FunctionalMap::new(
        c,
        Provenance {
            alpha,
            reg_weight: reg,
            refinement_trace: vec![k],
        },
    )
}

/// Objective value of the estimation problem at a given C (solver sanity
/// checks compare this against the zero map).
pub fn estimation_objective(
    basis1: &SpectralBasis,
    basis2: &SpectralBasis,
    f1: &DescriptorMatrix,
    f2: &DescriptorMatrix,
    fmap: &FunctionalMap,
    reg_weight: f64,
) -> Result<f64> {
    let k = fmap.k();
    let a1 = basis1.project(f1.matrix())?.rows(0, k).into_owned();
    let a2 = basis2.project(f2.matrix())?.rows(0, k).into_owned();
    let data = (fmap.matrix() * &a2 - &a1).norm_squared();
    let mut commutator = 0.0;
    for i in 0..k {
        for j in 0..k {
            let d = basis2.eigenvalues()[j] - basis1.eigenvalues()[i];
            commutator += (fmap.matrix()[(i, j)] * d).powi(2);
        }
    }
    Ok(data + reg_weight * commutator)
}

/// Recover the vertex-level map: source vertex i goes to the target vertex
/// whose row of Phi2 C^T is nearest to row i of Phi1. Exact blocked scan;
/// ties break to the lowest target index.
pub fn fmap_to_pointwise(
    basis1: &SpectralBasis,
    basis2: &SpectralBasis,
    fmap: &FunctionalMap,
) -> Result<PointwiseMap> {
    let k = fmap.k();
    if k > basis1.k() || k > basis2.k() {
        return Err(Error::InvalidArgument(format!(
            "map dimension {k} exceeds the bases ({}, {})",
            basis1.k(),
            basis2.k()
        )));
    }
    let e1 = basis1.eigenfunctions().columns(0, k).into_owned();
    let e2 = basis2.eigenfunctions().columns(0, k) * fmap.matrix().transpose();

    let n1 = e1.nrows();
    let n2 = e2.nrows();
    let target_norms: Vec<f64> = (0..n2).map(|j| e2.row(j).norm_squared()).collect();

    let block = 256usize;
    let mut targets = vec![0usize; n1];

    // Per block of source vertices, one GEMM produces scores with each
    // source's column contiguous, so the argmin sweep stays in cache.
    let scan_block = |start: usize, out: &mut [usize], cross: &mut DMatrix<f64>| {
        let cols = out.len();
        let chunk_t = e1.rows(start, cols).transpose();
        e2.mul_to(&chunk_t, &mut cross.columns_mut(0, cols));
        for (local, target) in out.iter_mut().enumerate() {
            let scores = cross.column(local);
            let column = scores.as_slice();
            let mut best = 0usize;
            let mut best_score = f64::INFINITY;
            for (j, (&dot, &norm)) in column.iter().zip(&target_norms).enumerate() {
                let score = norm - 2.0 * dot;
                if score < best_score {
                    best_score = score;
                    best = j;
                }
            }
            *target = best;
        }
    };

    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let mut chunks: Vec<(usize, &mut [usize])> = Vec::new();
        let mut rest = targets.as_mut_slice();
        let mut start = 0;
        while !rest.is_empty() {
            let take = rest.len().min(block);
            let (head, tail) = rest.split_at_mut(take);
            chunks.push((start, head));
            start += take;
            rest = tail;
        }
        chunks
            .into_par_iter()
            .for_each_init(
                || DMatrix::zeros(n2, block),
                |cross, (start, out)| scan_block(start, out, cross),
            );
    }
    #[cfg(not(feature = "parallel"))]
    {
        let mut cross = DMatrix::zeros(n2, block);
        let mut start = 0;
        while start < n1 {
            let take = (n1 - start).min(block);
            let (head, _) = targets[start..].split_at_mut(take);
            scan_block(start, head, &mut cross);
            start += take;
        }
    }

    PointwiseMap::new(targets, n2)
}

/// Spectral map consistent with a pointwise map at dimension k':
/// C = Phi1[:, ..k']^T M1 Phi2[T(.), ..k'].
pub fn pointwise_to_fmap(
    basis1: &SpectralBasis,
    basis2: &SpectralBasis,
    map: &PointwiseMap,
    k_prime: usize,
) -> Result<FunctionalMap> {
    if k_prime == 0 || k_prime > basis1.k() || k_prime > basis2.k() {
        return Err(Error::InvalidArgument(format!(
            "k' = {k_prime} exceeds the available eigenpairs ({}, {})",
            basis1.k(),
            basis2.k()
        )));
    }
    if map.len() != basis1.vertex_count() {
        return Err(Error::InvalidArgument(
            "pointwise map length does not match the source basis".into(),
        ));
    }
    let n1 = basis1.vertex_count();
    let phi2 = basis2.eigenfunctions();
    let mut pulled = DMatrix::zeros(n1, k_prime);
    for i in 0..n1 {
        let t = map.target_of(i);
        for c in 0..k_prime {
            pulled[(i, c)] = phi2[(t, c)];
        }
    }
    let mut weighted = basis1.eigenfunctions().columns(0, k_prime).into_owned();
    for r in 0..n1 {
        let m = basis1.mass()[r];
        for c in 0..k_prime {
            weighted[(r, c)] *= m;
        }
    }
    let c = weighted.transpose() * pulled;
    FunctionalMap::new(
        c,
        Provenance {
            alpha: 0,
            reg_weight: 0.0,
            refinement_trace: vec![k_prime],
        },
    )
}

/// Refinement loop: alternate pointwise recovery and spectral re-estimation
/// while growing the dimension by `step` until it reaches `k_final`.
pub fn zoomout_refine(
    basis1: &SpectralBasis,
    basis2: &SpectralBasis,
    initial: &FunctionalMap,
    step: usize,
    k_final: usize,
) -> Result<FunctionalMap> {
    if step == 0 {
        return Err(Error::InvalidArgument("refinement step must be >= 1".into()));
    }
    if initial.k() > k_final {
        return Err(Error::InvalidArgument(format!(
            "initial dimension {} exceeds k_final = {k_final}",
            initial.k()
        )));
    }
    if k_final > basis1.k() || k_final > basis2.k() {
        return Err(Error::InvalidArgument(format!(
            "k_final = {k_final} exceeds the available eigenpairs ({}, {})",
            basis1.k(),
            basis2.k()
        )));
    }

    let mut current = initial.clone();
    let mut trace = vec![current.k()];
    while current.k() < k_final {
        let pointwise = fmap_to_pointwise(basis1, basis2, &current)?;
        let next_k = (current.k() + step).min(k_final);
        current = pointwise_to_fmap(basis1, basis2, &pointwise, next_k)?;
        trace.push(next_k);
    }
    let provenance = Provenance {
        alpha: initial.provenance().alpha,
        reg_weight: initial.provenance().reg_weight,
        refinement_trace: trace,
    };
    FunctionalMap::new(current.matrix().clone(), provenance)
}
