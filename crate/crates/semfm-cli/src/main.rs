//! `semfm`: transfer demonstrated interaction regions between triangle
//! meshes through a semantically anchored spectral correspondence.
//!
//! Subcommands: `transfer` (one pair), `eval-category` (all ordered pairs of
//! a dataset), `synth` (generate a synthetic dataset), `anchors` (dump the
//! cluster-similarity matrix and selected anchors).
//!
//! Exit codes: 0 success, 1 internal/numeric failure, 2 usage/input error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use semfm::mesh::io::{export_colored_mesh_path, load_mesh_path, VertexField};
use semfm::pipeline::{
    evaluate_category, run_transfer, Method, PipelineParams, ShapeData, TransferOutcome,
};
use semfm::semantics;
use semfm::synthbench::{self, BaseShape, CategorySpec, Manifest, MeshResolution};
use semfm::transfer::{AffordanceRegion, TransferMode};
use semfm::Error;

mod config;

use config::ParamOverrides;

#[derive(Parser)]
#[command(name = "semfm", version, about = "Semantically anchored shape correspondence and affordance transfer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Transfer a region from a source mesh to a target mesh.
    Transfer(TransferCmd),
    /// Run every ordered pair of a dataset and aggregate the metrics.
    EvalCategory(EvalCmd),
    /// Generate a synthetic category dataset.
    Synth(SynthCmd),
    /// Dump the cluster-similarity matrix and the selected anchor pairs.
    Anchors(AnchorsCmd),
}

#[derive(Args, Clone)]
struct CommonParams {
    /// Flat JSON config file; command-line flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,

    #[command(flatten)]
    overrides: ParamOverrides,

    /// Basis cache directory (content-addressed). Caching is on by default.
    #[arg(long)]
    cache_dir: Option<PathBuf>,

    /// Disable the basis cache.
    #[arg(long)]
    no_cache: bool,
}

impl CommonParams {
    fn pipeline_params(&self) -> Result<PipelineParams, Error> {
        let mut params = PipelineParams::default();
        if let Some(path) = &self.config {
            config::apply_config_file(&mut params, path)?;
        }
        self.overrides.apply(&mut params)?;
        params.validate()?;
        Ok(params)
    }

    fn cache_dir(&self, default_root: &Path) -> Option<PathBuf> {
        if self.no_cache {
            None
        } else {
            Some(
                self.cache_dir
                    .clone()
                    .unwrap_or_else(|| default_root.join(".semfm-cache")),
            )
        }
    }
}

#[derive(Args)]
struct TransferCmd {
    /// Source mesh (.off or .obj).
    #[arg(long)]
    source_mesh: PathBuf,
    /// Target mesh (.off or .obj).
    #[arg(long)]
    target_mesh: PathBuf,
    /// Source lifted sample set (JSON or binary).
    #[arg(long)]
    source_samples: Option<PathBuf>,
    /// Target lifted sample set (JSON or binary).
    #[arg(long)]
    target_samples: Option<PathBuf>,
    /// Demonstrated region on the source mesh (JSON affordance file).
    #[arg(long)]
    region: PathBuf,
    /// Ground-truth region on the target mesh, for IoU reporting.
    #[arg(long)]
    target_region: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,

    #[command(flatten)]
    common: CommonParams,
}

#[derive(Args)]
struct EvalCmd {
    /// Dataset manifest written by `synth`.
    #[arg(long)]
    manifest: PathBuf,
    /// Report output path.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads for pair evaluation.
    #[arg(long, default_value_t = 1)]
    workers: usize,

    #[command(flatten)]
    common: CommonParams,
}

#[derive(Args)]
struct SynthCmd {
    /// Base template: handle-tool, two-part-container, blade-tool.
    #[arg(long, default_value = "handle-tool")]
    base: String,
    /// Object count.
    #[arg(long, default_value_t = 4)]
    n: usize,
    /// Deformation amplitude in [0, 0.5].
    #[arg(long, default_value_t = 0.25)]
    amplitude: f64,
    /// Embedding dimension.
    #[arg(long, default_value_t = 32)]
    d: usize,
    /// Embedding noise level.
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Rings along the axis.
    #[arg(long, default_value_t = 40)]
    segments: usize,
    /// Vertices per ring.
    #[arg(long, default_value_t = 24)]
    ring_vertices: usize,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AnchorsCmd {
    #[arg(long)]
    source_mesh: PathBuf,
    #[arg(long)]
    target_mesh: PathBuf,
    #[arg(long)]
    source_samples: PathBuf,
    #[arg(long)]
    target_samples: PathBuf,
    /// Output JSON path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,

    #[command(flatten)]
    common: CommonParams,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Transfer(cmd) => cmd_transfer(cmd),
        Command::EvalCategory(cmd) => cmd_eval_category(cmd),
        Command::Synth(cmd) => cmd_synth(cmd),
        Command::Anchors(cmd) => cmd_anchors(cmd),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => ExitCode::from(e.exit_code() as u8),
    }
}

/// Print to stdout, tolerating a closed pipe (e.g. `semfm ... | head`).
fn emit(text: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout(), "{text}");
}

fn stage<T>(label: &str, result: Result<T, Error>) -> Result<T, Error> {
    result.map_err(|e| {
        eprintln!("semfm: {label}: {e}");
        e
    })
}

fn mesh_id_for(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn load_shape(mesh_path: &Path, samples_path: Option<&Path>) -> Result<ShapeData, Error> {
    let mesh = load_mesh_path(mesh_path)?;
    let samples = samples_path
        .map(semantics::io::load_path)
        .transpose()?;
    Ok(ShapeData {
        id: mesh_id_for(mesh_path),
        mesh,
        samples,
    })
}

#[derive(serde::Deserialize)]
struct RegionFile {
    #[serde(default)]
    #[allow(dead_code)]
    schema_version: Option<u32>,
    mesh: String,
    vertices: Vec<usize>,
}

fn load_region(path: &Path) -> Result<AffordanceRegion, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let doc: RegionFile = serde_json::from_str(&text).map_err(|e| Error::JsonFile {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    AffordanceRegion::new(doc.mesh, doc.vertices)
}

/// Report document written by `transfer`.
#[derive(Serialize)]
struct TransferDocument {
    schema_version: u32,
    method: Method,
    source: String,
    target: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    iou: Option<f64>,
    runtime_seconds: f64,
    alpha: usize,
    anchor_similarities: Vec<f64>,
    mode: TransferMode,
    predicted_vertices: Vec<usize>,
    refinement_trace: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    constant_mode_warning: Option<f64>,
}

fn write_transfer_artifacts(
    out: &Path,
    source: &ShapeData,
    target: &ShapeData,
    region: &AffordanceRegion,
    outcome: &TransferOutcome,
) -> Result<(), Error> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;

    // Anchor-region colorings: vertices of anchor pair i get label i+1.
    let anchor_labels = |assignment: &[usize], side: semfm::descriptors::PairSide| -> Vec<usize> {
        let Some(anchors) = outcome.anchors.as_ref() else {
            return vec![0; assignment.len()];
        };
        assignment
            .iter()
            .map(|&cluster| {
                anchors
                    .pairs()
                    .iter()
                    .position(|p| {
                        cluster
                            == match side {
                                semfm::descriptors::PairSide::Source => p.source_cluster,
                                semfm::descriptors::PairSide::Target => p.target_cluster,
                            }
                    })
                    .map(|i| i + 1)
                    .unwrap_or(0)
            })
            .collect()
    };
    if let (Some(src), Some(tgt)) = (&outcome.source_semantics, &outcome.target_semantics) {
        let labels = anchor_labels(&src.assignment, semfm::descriptors::PairSide::Source);
        export_colored_mesh_path(
            &source.mesh,
            &VertexField::Labels(&labels),
            &out.join("source_anchors.ply"),
        )?;
        let labels = anchor_labels(&tgt.assignment, semfm::descriptors::PairSide::Target);
        export_colored_mesh_path(
            &target.mesh,
            &VertexField::Labels(&labels),
            &out.join("target_anchors.ply"),
        )?;
    }

    let source_field = region.indicator(source.mesh.vertex_count());
    export_colored_mesh_path(
        &source.mesh,
        &VertexField::Scalar(&source_field),
        &out.join("source_affordance.ply"),
    )?;
    let target_field = outcome.predicted.indicator(target.mesh.vertex_count());
    export_colored_mesh_path(
        &target.mesh,
        &VertexField::Scalar(&target_field),
        &out.join("target_affordance.ply"),
    )?;

    std::fs::write(out.join("fmap.json"), outcome.fmap.to_json())
        .map_err(|e| Error::io(out.join("fmap.json"), e))?;
    std::fs::write(out.join("map.json"), outcome.pointwise.to_json())
        .map_err(|e| Error::io(out.join("map.json"), e))?;
    Ok(())
}

fn cmd_transfer(cmd: TransferCmd) -> Result<(), Error> {
    let params = stage("reading configuration", cmd.common.pipeline_params())?;
    let source = stage(
        "loading source shape",
        load_shape(&cmd.source_mesh, cmd.source_samples.as_deref()),
    )?;
    let target = stage(
        "loading target shape",
        load_shape(&cmd.target_mesh, cmd.target_samples.as_deref()),
    )?;
    let region = stage("loading region", load_region(&cmd.region))?;
    let ground_truth = cmd
        .target_region
        .as_deref()
        .map(|p| stage("loading ground-truth region", load_region(p)))
        .transpose()?;

    let cache = cmd.common.cache_dir(&cmd.out);
    let outcome = stage(
        "running transfer",
        run_transfer(&source, &target, &region, &params, cache.as_deref()),
    )?;

    // IoU against the provided ground truth, or against the input region on
    // a self-transfer.
    let iou = match &ground_truth {
        Some(gt) => Some(stage(
            "computing IoU",
            semfm::transfer::iou(&outcome.predicted, gt),
        )?),
        None if source.id == target.id => {
            let same_id =
                AffordanceRegion::new(target.id.clone(), region.vertices().to_vec())?;
            Some(semfm::transfer::iou(&outcome.predicted, &same_id)?)
        }
        None => None,
    };

    stage(
        "writing artifacts",
        write_transfer_artifacts(&cmd.out, &source, &target, &region, &outcome),
    )?;
    let document = TransferDocument {
        schema_version: 1,
        method: params.method,
        source: source.id.clone(),
        target: target.id.clone(),
        iou,
        runtime_seconds: outcome.runtime_seconds,
        alpha: outcome.anchors.as_ref().map(|a| a.len()).unwrap_or(0),
        anchor_similarities: outcome
            .anchors
            .as_ref()
            .map(|a| a.pairs().iter().map(|p| p.similarity).collect())
            .unwrap_or_default(),
        mode: params.transfer_mode,
        predicted_vertices: outcome.predicted.vertices().to_vec(),
        refinement_trace: outcome.fmap.provenance().refinement_trace.clone(),
        constant_mode_warning: outcome.constant_mode_warning,
    };
    let report_path = cmd.out.join("report.json");
    let text = serde_json::to_string_pretty(&document).expect("report serializes");
    std::fs::write(&report_path, text).map_err(|e| Error::io(&report_path, e))?;

    emit(&format!(
        "transfer {} -> {}: {} predicted vertices{} in {:.2}s ({})",
        source.id,
        target.id,
        outcome.predicted.len(),
        iou.map(|v| format!(", IoU {v:.3}")).unwrap_or_default(),
        outcome.runtime_seconds,
        params.method.name(),
    ));
    Ok(())
}

fn cmd_eval_category(cmd: EvalCmd) -> Result<(), Error> {
    let params = stage("reading configuration", cmd.common.pipeline_params())?;
    let manifest = stage("loading manifest", Manifest::load(&cmd.manifest))?;
    let root = cmd
        .manifest
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));

    let mut shapes = Vec::with_capacity(manifest.objects.len());
    for entry in &manifest.objects {
        let mesh = stage(
            "loading dataset meshes",
            load_mesh_path(&root.join(&entry.mesh)),
        )?;
        let samples = stage(
            "loading dataset samples",
            semantics::io::load_path(&root.join(&entry.samples)),
        )?;
        shapes.push(ShapeData {
            id: entry.id.clone(),
            mesh,
            samples: Some(samples),
        });
    }
    if manifest.gt_affordances.len() != shapes.len() {
        return stage(
            "validating manifest",
            Err(Error::InvalidArgument(format!(
                "manifest lists {} objects but {} ground-truth regions",
                shapes.len(),
                manifest.gt_affordances.len()
            ))),
        );
    }

    let cache = cmd.common.cache_dir(&root);
    let evaluation = stage(
        "evaluating category",
        evaluate_category(
            &shapes,
            &manifest.gt_affordances,
            &params,
            cache.as_deref(),
            cmd.workers,
        ),
    )?;

    let text = serde_json::to_string_pretty(&evaluation.report).expect("report serializes");
    std::fs::write(&cmd.out, text).map_err(|e| Error::io(&cmd.out, e))?;
    emit(&format!(
        "evaluated {} ordered pairs ({}): avg IoU {:.3}, avg runtime {:.2}s",
        evaluation.report.pairs.len(),
        params.method.name(),
        evaluation.report.avg_iou,
        evaluation.report.avg_runtime_s,
    ));
    Ok(())
}

fn cmd_synth(cmd: SynthCmd) -> Result<(), Error> {
    let base = stage("parsing base shape", BaseShape::parse(&cmd.base))?;
    let spec = CategorySpec {
        base,
        n_objects: cmd.n,
        amplitude: cmd.amplitude,
        embed_dim: cmd.d,
        noise: cmd.noise,
        seed: cmd.seed,
        resolution: MeshResolution {
            segments: cmd.segments,
            ring_vertices: cmd.ring_vertices,
        },
    };
    let manifest = stage("generating dataset", synthbench::write_dataset(&cmd.out, &spec))?;
    emit(&format!(
        "wrote {} objects ({}, {} vertices each, amplitude {}, d {}, noise {}, seed {}) to {}",
        manifest.objects.len(),
        base.name(),
        spec.resolution.vertex_count(),
        spec.amplitude,
        spec.embed_dim,
        spec.noise,
        spec.seed,
        cmd.out.display(),
    ));
    Ok(())
}

#[derive(Serialize)]
struct AnchorsDocument {
    schema_version: u32,
    source: String,
    target: String,
    k_clusters: (usize, usize),
    similarity: Vec<Vec<f64>>,
    anchors: semfm::semantics::AnchorSet,
}

fn cmd_anchors(cmd: AnchorsCmd) -> Result<(), Error> {
    let params = stage("reading configuration", cmd.common.pipeline_params())?;
    let source = stage(
        "loading source shape",
        load_shape(&cmd.source_mesh, Some(&cmd.source_samples)),
    )?;
    let target = stage(
        "loading target shape",
        load_shape(&cmd.target_mesh, Some(&cmd.target_samples)),
    )?;

    let semantic_seed = params.seed ^ 0x51de_0000;
    let (_, clusters1) = stage(
        "clustering source",
        semfm::pipeline::semantic_stage(&source, &params, semantic_seed),
    )?;
    let (_, clusters2) = stage(
        "clustering target",
        semfm::pipeline::semantic_stage(&target, &params, semantic_seed),
    )?;
    let similarity = stage(
        "computing similarity",
        semfm::semantics::cluster_similarity(&clusters1, &clusters2),
    )?;
    let anchors = stage(
        "selecting anchors",
        semfm::semantics::select_anchors(&similarity, params.alpha),
    )?;

    let document = AnchorsDocument {
        schema_version: 1,
        source: source.id,
        target: target.id,
        k_clusters: (clusters1.k(), clusters2.k()),
        similarity: (0..similarity.nrows())
            .map(|r| (0..similarity.ncols()).map(|c| similarity[(r, c)]).collect())
            .collect(),
        anchors,
    };
    let text = serde_json::to_string_pretty(&document).expect("anchors serialize");
    match &cmd.out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::io(path, e))?,
        None => emit(&text),
    }
    Ok(())
}
