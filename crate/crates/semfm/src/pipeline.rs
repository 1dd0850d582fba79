//! End-to-end orchestration: semantic anchoring, map estimation, refinement,
//! and region transfer between two shapes, with basis caching and the timing
//! discipline the evaluation metrics expect (cached basis loads are excluded
//! from per-transfer runtime; fresh computes are included).

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::descriptors::{
    diffuse_descriptors, indicator_functions, vertex_cluster_assignment, wks_descriptors,
    DescriptorMatrix, PairSide,
};
use crate::error::{Error, Result};
use crate::fmap::{estimate_fmap, fmap_to_pointwise, zoomout_refine, FunctionalMap, PointwiseMap};
use crate::mesh::TriangleMesh;
use crate::semantics::{
    aggregate_samples, build_semantic_graph, cluster_similarity, select_anchors, spectral_cluster,
    AnchorSet, ClusterSet, LiftedSampleSet, SemanticPointCloud, SigmaMode,
};
use crate::spectral::{cache, SpectralBasis};
use crate::transfer::{
    transfer_region_indicator, transfer_region_pointwise, AffordanceRegion, TransferMode,
    TransferReport,
};

/// Correspondence method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    /// Semantic anchors drive the functional map.
    #[serde(rename = "semfm")]
    SemFm,
    /// Geometry-only baseline: wave kernel signature descriptors.
    #[serde(rename = "fm-wks")]
    FmWks,
}

impl Method {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "semfm" => Ok(Method::SemFm),
            "fm-wks" => Ok(Method::FmWks),
            other => Err(Error::InvalidArgument(format!(
                "unknown method `{other}` (expected semfm or fm-wks)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::SemFm => "semfm",
            Method::FmWks => "fm-wks",
        }
    }
}

/// All tunables of the transfer pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineParams {
    /// Basis size computed per shape (the refinement ceiling).
    pub k_basis: usize,
    /// Dimension of the initial descriptor-estimated map.
    pub k0: usize,
    /// Refinement dimension increment.
    pub step: usize,
    /// Final refinement dimension.
    pub k_final: usize,
    /// Semantic cluster count per shape.
    pub n_clusters: usize,
    /// Anchor pairs selected.
    pub alpha: usize,
    /// Spatial kNN degree of the semantic graph.
    pub k_nn: usize,
    /// Gaussian bandwidth: explicit value, or <= 0 for the median heuristic.
    pub sigma: f64,
    /// Sparse cloud size for aggregation.
    pub m_points: usize,
    /// Aggregation radius as a fraction of the bounding-box diagonal.
    pub epsilon_scale: f64,
    /// Descriptor diffusion time as a multiple of mean-edge-length squared.
    pub t_scale: f64,
    /// Commutativity regularizer; negative means the auto default.
    pub reg_weight: f64,
    pub transfer_mode: TransferMode,
    /// Indicator-mode threshold fraction.
    pub threshold: f64,
    pub seed: u64,
    pub method: Method,
    pub wks_energies: usize,
    pub wks_sigma_scale: f64,
    /// Estimation dimension of the geometry-only baseline, which recovers
    /// its map directly (no refinement stage).
    pub baseline_k: usize,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams {
            k_basis: 100,
            k0: 20,
            step: 5,
            k_final: 80,
            n_clusters: 5,
            alpha: 2,
            k_nn: 10,
            sigma: 0.0,
            m_points: 400,
            epsilon_scale: 0.05,
            t_scale: 10.0,
            reg_weight: -1.0,
            transfer_mode: TransferMode::Pointwise,
            threshold: 0.5,
            seed: 0,
            method: Method::SemFm,
            wks_energies: 100,
            wks_sigma_scale: 7.0,
            baseline_k: 50,
        }
    }
}

impl PipelineParams {
    pub fn sigma_mode(&self) -> SigmaMode {
        if self.sigma > 0.0 {
            SigmaMode::Explicit(self.sigma)
        } else {
            SigmaMode::Median
        }
    }

    pub fn reg_weight_option(&self) -> Option<f64> {
        if self.reg_weight < 0.0 {
            None
        } else {
            Some(self.reg_weight)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k0 == 0 || self.k0 > self.k_final {
            return Err(Error::InvalidArgument(format!(
                "k0 = {} must satisfy 1 <= k0 <= k_final = {}",
                self.k0, self.k_final
            )));
        }
        if self.k_final > self.k_basis {
            return Err(Error::InvalidArgument(format!(
                "k_final = {} exceeds the basis size {}",
                self.k_final, self.k_basis
            )));
        }
        if self.step == 0 {
            return Err(Error::InvalidArgument("step must be >= 1".into()));
        }
        if self.alpha == 0 || self.alpha > self.n_clusters {
            return Err(Error::InvalidArgument(format!(
                "alpha = {} must satisfy 1 <= alpha <= K = {}",
                self.alpha, self.n_clusters
            )));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidArgument(
                "threshold must lie in (0, 1)".into(),
            ));
        }
        if !(self.epsilon_scale > 0.0) {
            return Err(Error::InvalidArgument("epsilon_scale must be > 0".into()));
        }
        if !(self.t_scale >= 0.0) {
            return Err(Error::InvalidArgument("t_scale must be >= 0".into()));
        }
        Ok(())
    }
}

/// One shape entering the pipeline.
#[derive(Debug, Clone)]
pub struct ShapeData {
    pub id: String,
    pub mesh: TriangleMesh,
    /// Lifted semantic samples; required by the semantic method, unused by
    /// the baseline.
    pub samples: Option<LiftedSampleSet>,
}

/// Semantic artifacts computed for one shape.
#[derive(Debug, Clone)]
pub struct SemanticArtifacts {
    pub cloud: SemanticPointCloud,
    pub clusters: ClusterSet,
    pub assignment: Vec<usize>,
}

/// Everything a transfer produces, for reporting and inspection.
#[derive(Debug, Clone)]
pub struct TransferOutcome {
    pub predicted: AffordanceRegion,
    pub pointwise: PointwiseMap,
    pub fmap: FunctionalMap,
    pub anchors: Option<AnchorSet>,
    pub similarity: Option<DMatrix<f64>>,
    pub source_semantics: Option<SemanticArtifacts>,
    pub target_semantics: Option<SemanticArtifacts>,
    /// Seconds of work attributable to this transfer (basis loads from a
    /// warm cache are excluded; fresh basis computes are included).
    pub runtime_seconds: f64,
    pub basis_cache_hit: (bool, bool),
    /// Relative deviation of |C00| from the area-ratio prediction, recorded
    /// when it exceeds 20%.
    pub constant_mode_warning: Option<f64>,
}

impl TransferOutcome {
    pub fn report(&self, source: &str, target: &str, mode: TransferMode, iou: f64) -> TransferReport {
        TransferReport {
            source: source.to_string(),
            target: target.to_string(),
            iou,
            runtime_seconds: self.runtime_seconds,
            alpha: self.anchors.as_ref().map(|a| a.len()).unwrap_or(0),
            anchor_similarities: self
                .anchors
                .as_ref()
                .map(|a| a.pairs().iter().map(|p| p.similarity).collect())
                .unwrap_or_default(),
            mode,
        }
    }
}

/// Monotonic stage timer; reads zero on targets without a monotonic clock
/// (the browser demo) where the runtime fields are not meaningful anyway.
pub struct Stopwatch {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl Stopwatch {
    pub fn start() -> Self {
        Stopwatch {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    pub fn seconds(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        {
            self.start.elapsed().as_secs_f64()
        }
        #[cfg(target_arch = "wasm32")]
        {
            0.0
        }
    }
}

/// Load or compute the spectral basis for a shape, with the cache directory
/// keyed by mesh content.
pub fn obtain_basis(
    shape: &ShapeData,
    params: &PipelineParams,
    cache_dir: Option<&Path>,
) -> Result<(SpectralBasis, bool)> {
    cache::load_or_compute(cache_dir, &shape.mesh, params.k_basis)
}

/// Semantic stage for one shape: aggregate, graph, cluster.
pub fn semantic_stage(
    shape: &ShapeData,
    params: &PipelineParams,
    seed: u64,
) -> Result<(SemanticPointCloud, ClusterSet)> {
    let samples = shape.samples.as_ref().ok_or_else(|| {
        Error::InvalidArgument(format!(
            "shape `{}` carries no semantic samples, required by the semantic method",
            shape.id
        ))
    })?;
    let epsilon = params.epsilon_scale * shape.mesh.bounding_box_diagonal();
    let cloud = aggregate_samples(&shape.mesh, samples, params.m_points, epsilon, seed)?;
    let graph = build_semantic_graph(&cloud, params.k_nn, params.sigma_mode())?;
    let clusters = spectral_cluster(&cloud, &graph, params.n_clusters, seed.wrapping_add(1))?;
    Ok((cloud, clusters))
}

/// Full transfer between two shapes. The region lives on the source mesh.
pub fn run_transfer(
    source: &ShapeData,
    target: &ShapeData,
    region: &AffordanceRegion,
    params: &PipelineParams,
    cache_dir: Option<&Path>,
) -> Result<TransferOutcome> {
    params.validate()?;
    if region.mesh_id() != source.id {
        return Err(Error::MeshIdMismatch {
            a: region.mesh_id().to_string(),
            b: source.id.clone(),
        });
    }
    region.clone().checked(&source.mesh)?;

    let mut runtime = 0.0;

    let basis_timer = Stopwatch::start();
    let (basis1, hit1) = obtain_basis(source, params, cache_dir)?;
    let basis1_seconds = basis_timer.seconds();
    if !hit1 {
        runtime += basis1_seconds;
    }
    let basis_timer = Stopwatch::start();
    let (basis2, hit2) = obtain_basis(target, params, cache_dir)?;
    let basis2_seconds = basis_timer.seconds();
    if !hit2 {
        runtime += basis2_seconds;
    }

    let work = Stopwatch::start();

    let mut anchors = None;
    let mut similarity = None;
    let mut source_semantics = None;
    let mut target_semantics = None;

    let (f1, f2): (DescriptorMatrix, DescriptorMatrix) = match params.method {
        Method::SemFm => {
            let semantic_seed = params.seed ^ 0x51de_0000;
            let (cloud1, clusters1) = semantic_stage(source, params, semantic_seed)?;
            let (cloud2, clusters2) = semantic_stage(target, params, semantic_seed)?;
            let s = cluster_similarity(&clusters1, &clusters2)?;
            let selected = select_anchors(&s, params.alpha)?;

            let assignment1 = vertex_cluster_assignment(&source.mesh, &cloud1, clusters1.labels())?;
            let assignment2 = vertex_cluster_assignment(&target.mesh, &cloud2, clusters2.labels())?;
            let ind1 = indicator_functions(&assignment1, &selected, PairSide::Source, clusters1.k())?;
            let ind2 = indicator_functions(&assignment2, &selected, PairSide::Target, clusters2.k())?;
            let t1 = params.t_scale * source.mesh.mean_edge_length().powi(2);
            let t2 = params.t_scale * target.mesh.mean_edge_length().powi(2);
            let f1 = diffuse_descriptors(&basis1, &ind1, t1)?;
            let f2 = diffuse_descriptors(&basis2, &ind2, t2)?;

            similarity = Some(s);
            anchors = Some(selected);
            source_semantics = Some(SemanticArtifacts {
                cloud: cloud1,
                clusters: clusters1,
                assignment: assignment1,
            });
            target_semantics = Some(SemanticArtifacts {
                cloud: cloud2,
                clusters: clusters2,
                assignment: assignment2,
            });
            (f1, f2)
        }
        Method::FmWks => {
            let f1 = DescriptorMatrix::from_raw(wks_descriptors(
                &basis1,
                params.wks_energies,
                params.wks_sigma_scale,
                true,
            )?);
            let f2 = DescriptorMatrix::from_raw(wks_descriptors(
                &basis2,
                params.wks_energies,
                params.wks_sigma_scale,
                true,
            )?);
            (f1, f2)
        }
    };

    // The semantic method estimates a small seed map and grows it by
    // refinement; the classical baseline estimates once from its dense
    // descriptor set and recovers the map directly.
    let refined = match params.method {
        Method::SemFm => {
            let initial =
                estimate_fmap(&basis1, &basis2, &f1, &f2, params.k0, params.reg_weight_option())?;
            zoomout_refine(&basis1, &basis2, &initial, params.step, params.k_final)?
        }
        Method::FmWks => {
            let k = params.baseline_k.min(params.k_basis);
            estimate_fmap(&basis1, &basis2, &f1, &f2, k, params.reg_weight_option())?
        }
    };
    let pointwise = fmap_to_pointwise(&basis1, &basis2, &refined)?;

    let predicted = match params.transfer_mode {
        TransferMode::Pointwise => transfer_region_pointwise(&pointwise, region, &target.id)?,
        TransferMode::Indicator => transfer_region_indicator(
            &basis1,
            &basis2,
            &refined,
            region,
            params.threshold,
            &target.id,
        )?,
    };

    runtime += work.seconds();

    let deviation = refined.constant_mode_deviation(&basis1, &basis2);
    Ok(TransferOutcome {
        predicted,
        pointwise,
        fmap: refined,
        anchors,
        similarity,
        source_semantics,
        target_semantics,
        runtime_seconds: runtime,
        basis_cache_hit: (hit1, hit2),
        constant_mode_warning: (deviation > 0.2).then_some(deviation),
    })
}

/// Per-pair records plus the category averages.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CategoryReport {
    pub schema_version: u32,
    pub method: Method,
    pub n_objects: usize,
    pub pairs: Vec<TransferReport>,
    pub avg_iou: f64,
    pub avg_runtime_s: f64,
}

/// Category evaluation: the serializable report plus the raw outcomes for
/// further analysis.
pub struct CategoryEvaluation {
    pub report: CategoryReport,
    /// Outcomes in the same order as `report.pairs`.
    pub outcomes: Vec<TransferOutcome>,
    /// (source, target) object indices per pair.
    pub pair_indices: Vec<(usize, usize)>,
}

/// Run all N(N-1) ordered transfers. Bases are precomputed (and cached) up
/// front so per-pair runtimes exclude the shared preprocessing; `workers`
/// caps the worker threads, and the report order is index-deterministic
/// regardless of scheduling.
pub fn evaluate_category(
    shapes: &[ShapeData],
    regions: &[AffordanceRegion],
    params: &PipelineParams,
    cache_dir: Option<&Path>,
    workers: usize,
) -> Result<CategoryEvaluation> {
    params.validate()?;
    let n = shapes.len();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "category evaluation needs at least 2 objects".into(),
        ));
    }
    if regions.len() != n {
        return Err(Error::InvalidArgument(format!(
            "need one ground-truth region per object: {n} objects, {} regions",
            regions.len()
        )));
    }

    // Warm the basis cache so pair workers always hit it.
    if cache_dir.is_some() {
        for shape in shapes {
            obtain_basis(shape, params, cache_dir)?;
        }
    }

    let pair_indices: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();

    let workers = workers.max(1).min(pair_indices.len());
    let results: Vec<Result<TransferOutcome>> = if workers == 1 {
        pair_indices
            .iter()
            .map(|&(i, j)| run_transfer(&shapes[i], &shapes[j], &regions[i], params, cache_dir))
            .collect()
    } else {
        let mut slots: Vec<Option<Result<TransferOutcome>>> =
            (0..pair_indices.len()).map(|_| None).collect();
        let next = std::sync::atomic::AtomicUsize::new(0);
        let slot_refs: Vec<std::sync::Mutex<&mut Option<Result<TransferOutcome>>>> =
            slots.iter_mut().map(std::sync::Mutex::new).collect();
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let idx = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                    if idx >= pair_indices.len() {
                        break;
                    }
                    let (i, j) = pair_indices[idx];
                    let outcome =
                        run_transfer(&shapes[i], &shapes[j], &regions[i], params, cache_dir);
                    **slot_refs[idx].lock().unwrap() = Some(outcome);
                });
            }
        });
        slots.into_iter().map(|s| s.expect("pair computed")).collect()
    };

    let mut outcomes = Vec::with_capacity(results.len());
    for r in results {
        outcomes.push(r?);
    }

    let mut pairs = Vec::with_capacity(outcomes.len());
    for (&(i, j), outcome) in pair_indices.iter().zip(&outcomes) {
        let iou = crate::transfer::iou(&outcome.predicted, &regions[j])?;
        let report = outcome.report(&shapes[i].id, &shapes[j].id, params.transfer_mode, iou);
        report.validate()?;
        pairs.push(report);
    }
    let avg_iou = crate::transfer::category_average_iou(&pairs, n)?;
    let avg_runtime_s =
        pairs.iter().map(|p| p.runtime_seconds).sum::<f64>() / pairs.len() as f64;

    Ok(CategoryEvaluation {
        report: CategoryReport {
            schema_version: 1,
            method: params.method,
            n_objects: n,
            pairs,
            avg_iou,
            avg_runtime_s,
        },
        outcomes,
        pair_indices,
    })
}

/// Build shape inputs from a generated synthetic category.
pub fn shapes_from_category(
    spec: &crate::synthbench::CategorySpec,
) -> Result<(Vec<ShapeData>, Vec<AffordanceRegion>)> {
    let objects = crate::synthbench::generate_category(spec)?;
    let mut shapes = Vec::with_capacity(objects.len());
    let mut regions = Vec::with_capacity(objects.len());
    for obj in &objects {
        let samples =
            crate::synthbench::generate_semantic_field(obj, spec.embed_dim, spec.noise, spec.seed)?;
        shapes.push(ShapeData {
            id: obj.id(),
            mesh: obj.mesh.clone(),
            samples: Some(samples),
        });
        regions.push(obj.gt_affordance.clone());
    }
    Ok((shapes, regions))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives;
    use crate::synthbench::{BaseShape, CategorySpec, MeshResolution};

    fn sphere_shape(id: &str) -> ShapeData {
        let mesh = primitives::icosphere(2, 1.0);
        // Two hemispheres as semantic halves.
        let positions = mesh.vertices().to_vec();
        let embeddings: Vec<Vec<f64>> = positions
            .iter()
            .map(|p| {
                if p.z >= 0.0 {
                    vec![1.0, 0.0]
                } else {
                    vec![0.0, 1.0]
                }
            })
            .collect();
        ShapeData {
            id: id.into(),
            mesh,
            samples: Some(crate::semantics::LiftedSampleSet::new(positions, embeddings).unwrap()),
        }
    }

    fn quick_params() -> PipelineParams {
        PipelineParams {
            k_basis: 40,
            k0: 10,
            step: 10,
            k_final: 30,
            n_clusters: 2,
            alpha: 1,
            k_nn: 6,
            m_points: 120,
            ..Default::default()
        }
    }

    #[test]
    fn self_transfer_is_identity_and_iou_one() {
        // Template shapes are deliberately asymmetric, so the identity is
        // the unique near-isometry and self-transfer must recover it.
        let spec = CategorySpec {
            base: BaseShape::HandleTool,
            n_objects: 2,
            amplitude: 0.0,
            embed_dim: 8,
            noise: 0.02,
            seed: 9,
            resolution: MeshResolution {
                segments: 20,
                ring_vertices: 12,
            },
        };
        let (shapes, regions) = shapes_from_category(&spec).unwrap();
        let params = PipelineParams {
            k_basis: 50,
            k0: 15,
            step: 5,
            k_final: 40,
            m_points: 150,
            ..Default::default()
        };
        let outcome = run_transfer(&shapes[0], &shapes[0], &regions[0], &params, None).unwrap();
        let n = shapes[0].mesh.vertex_count();
        let identical = outcome
            .pointwise
            .targets()
            .iter()
            .enumerate()
            .filter(|(i, &t)| *i == t)
            .count();
        assert!(
            identical as f64 >= 0.99 * n as f64,
            "identity fraction {identical}/{n}"
        );
        let relabeled =
            AffordanceRegion::new("obj0", outcome.predicted.vertices().to_vec()).unwrap();
        assert_eq!(crate::transfer::iou(&relabeled, &regions[0]).unwrap(), 1.0);
    }

    #[test]
    fn synthetic_pair_beats_trivial_baseline() {
        let spec = CategorySpec {
            base: BaseShape::HandleTool,
            n_objects: 2,
            amplitude: 0.15,
            embed_dim: 16,
            noise: 0.05,
            seed: 3,
            resolution: MeshResolution {
                segments: 24,
                ring_vertices: 14,
            },
        };
        let (shapes, regions) = shapes_from_category(&spec).unwrap();
        let params = PipelineParams {
            k_basis: 60,
            k0: 15,
            step: 5,
            k_final: 40,
            m_points: 200,
            ..Default::default()
        };
        let outcome = run_transfer(&shapes[0], &shapes[1], &regions[0], &params, None).unwrap();
        let iou = crate::transfer::iou(&outcome.predicted, &regions[1]).unwrap();
        assert!(iou > 0.3, "synthetic pair IoU {iou}");
        assert_eq!(outcome.anchors.as_ref().unwrap().len(), params.alpha);
    }

    #[test]
    fn evaluate_category_covers_all_ordered_pairs_deterministically() {
        let spec = CategorySpec {
            base: BaseShape::HandleTool,
            n_objects: 3,
            amplitude: 0.1,
            embed_dim: 8,
            noise: 0.02,
            seed: 5,
            resolution: MeshResolution {
                segments: 14,
                ring_vertices: 10,
            },
        };
        let (shapes, regions) = shapes_from_category(&spec).unwrap();
        let params = PipelineParams {
            k_basis: 30,
            k0: 10,
            step: 10,
            k_final: 20,
            m_points: 80,
            k_nn: 8,
            ..Default::default()
        };
        let eval1 = evaluate_category(&shapes, &regions, &params, None, 1).unwrap();
        assert_eq!(eval1.report.pairs.len(), 6);
        let eval2 = evaluate_category(&shapes, &regions, &params, None, 3).unwrap();
        for (a, b) in eval1.report.pairs.iter().zip(&eval2.report.pairs) {
            assert_eq!(a.source, b.source);
            assert_eq!(a.target, b.target);
            assert_eq!(a.iou, b.iou);
        }
        assert_eq!(eval1.report.avg_iou, eval2.report.avg_iou);
    }

    #[test]
    fn run_transfer_rejects_region_on_wrong_mesh() {
        let shape = sphere_shape("a");
        let other_region = AffordanceRegion::new("b", vec![0, 1]).unwrap();
        let err = run_transfer(&shape, &shape, &other_region, &quick_params(), None).unwrap_err();
        assert!(matches!(err, Error::MeshIdMismatch { .. }));
    }

    #[test]
    fn wks_baseline_runs_end_to_end() {
        let shape = sphere_shape("s");
        let mut params = quick_params();
        params.method = Method::FmWks;
        params.wks_energies = 20;
        let region = AffordanceRegion::new("s", (0..20).collect()).unwrap();
        let outcome = run_transfer(&shape, &shape, &region, &params, None).unwrap();
        assert!(outcome.anchors.is_none());
        assert!(!outcome.predicted.is_empty());
    }

    #[test]
    fn cache_roundtrip_marks_hits() {
        let dir = tempfile::tempdir().unwrap();
        let shape = sphere_shape("s");
        let region = AffordanceRegion::new("s", vec![0, 1, 2, 3, 4]).unwrap();
        let params = quick_params();
        let first = run_transfer(&shape, &shape, &region, &params, Some(dir.path())).unwrap();
        assert_eq!(first.basis_cache_hit, (false, true)); // same mesh: second load hits
        let second = run_transfer(&shape, &shape, &region, &params, Some(dir.path())).unwrap();
        assert_eq!(second.basis_cache_hit, (true, true));
        assert_eq!(first.predicted, second.predicted);
    }
}
