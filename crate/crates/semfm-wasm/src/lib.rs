//! Browser bindings for the correspondence pipeline.
//!
//! Three entry points, all returning JSON strings for a framework-free page:
//! `generate_pair` builds a deformed synthetic pair and caches it,
//! `run_transfer` maps the demonstrated region onto the target, and
//! `diffuse_field` shows heat smoothing of the region indicator at a chosen
//! time. State lives in a thread-local; wasm runs single-threaded.

use std::cell::RefCell;

use wasm_bindgen::prelude::*;

use semfm::mesh::io::{color_ramp, label_color};
use semfm::pipeline::{run_transfer as pipeline_transfer, PipelineParams, ShapeData};
use semfm::spectral::SpectralBasis;
use semfm::synthbench::{BaseShape, CategorySpec, MeshResolution};
use semfm::transfer::AffordanceRegion;

struct DemoState {
    shapes: [ShapeData; 2],
    regions: [AffordanceRegion; 2],
    part_labels: Vec<usize>,
    source_basis: SpectralBasis,
}

thread_local! {
    static STATE: RefCell<Option<DemoState>> = const { RefCell::new(None) };
}

fn demo_params() -> PipelineParams {
    // Sized for interactive latency in the browser.
    PipelineParams {
        k_basis: 60,
        k0: 15,
        step: 5,
        k_final: 40,
        m_points: 200,
        ..Default::default()
    }
}

fn demo_resolution() -> MeshResolution {
    MeshResolution {
        segments: 28,
        ring_vertices: 16,
    }
}

#[derive(serde::Serialize)]
struct MeshJson {
    positions: Vec<f64>,
    faces: Vec<usize>,
    parts: Vec<usize>,
    affordance: Vec<usize>,
}

fn mesh_json(shape: &ShapeData, parts: &[usize], region: &AffordanceRegion) -> MeshJson {
    MeshJson {
        positions: shape
            .mesh
            .vertices()
            .iter()
            .flat_map(|p| [p.x, p.y, p.z])
            .collect(),
        faces: shape.mesh.faces().iter().flatten().copied().collect(),
        parts: parts.to_vec(),
        affordance: region.vertices().to_vec(),
    }
}

fn err_json(e: impl std::fmt::Display) -> String {
    serde_json::json!({ "error": e.to_string() }).to_string()
}

/// Build a two-object synthetic category and cache it for the other calls.
/// Returns both meshes with part labels and ground-truth regions.
#[wasm_bindgen]
pub fn generate_pair(base: &str, amplitude: f64, noise: f64, seed: u32) -> String {
    let base = match BaseShape::parse(base) {
        Ok(b) => b,
        Err(e) => return err_json(e),
    };
    let spec = CategorySpec {
        base,
        n_objects: 2,
        amplitude,
        embed_dim: 16,
        noise,
        seed: seed as u64,
        resolution: demo_resolution(),
    };
    let objects = match semfm::synthbench::generate_category(&spec) {
        Ok(o) => o,
        Err(e) => return err_json(e),
    };
    let mut shapes = Vec::new();
    let mut regions = Vec::new();
    for obj in &objects {
        let samples = match semfm::synthbench::generate_semantic_field(
            obj,
            spec.embed_dim,
            spec.noise,
            spec.seed,
        ) {
            Ok(s) => s,
            Err(e) => return err_json(e),
        };
        shapes.push(ShapeData {
            id: obj.id(),
            mesh: obj.mesh.clone(),
            samples: Some(samples),
        });
        regions.push(obj.gt_affordance.clone());
    }
    let part_labels = objects[0].part_labels.clone();

    let params = demo_params();
    let source_basis = match SpectralBasis::compute(&shapes[0].mesh, params.k_basis) {
        Ok(b) => b,
        Err(e) => return err_json(e),
    };

    let payload = serde_json::json!({
        "source": mesh_json(&shapes[0], &part_labels, &regions[0]),
        "target": mesh_json(&shapes[1], &part_labels, &regions[1]),
        "parts": base.part_names(),
    });
    let [s0, s1] = match <[ShapeData; 2]>::try_from(shapes) {
        Ok(pair) => pair,
        Err(_) => return err_json("expected exactly two shapes"),
    };
    let [r0, r1] = match <[AffordanceRegion; 2]>::try_from(regions) {
        Ok(pair) => pair,
        Err(_) => return err_json("expected exactly two regions"),
    };
    STATE.with(|state| {
        *state.borrow_mut() = Some(DemoState {
            shapes: [s0, s1],
            regions: [r0, r1],
            part_labels,
            source_basis,
        });
    });
    payload.to_string()
}

/// Transfer the cached source region to the target. Returns per-vertex RGB
/// colors for both meshes (anchor regions on the source, prediction vs
/// ground truth on the target) plus the headline numbers.
#[wasm_bindgen]
pub fn run_transfer(alpha: usize, t_scale: f64, seed: u32) -> String {
    STATE.with(|state| {
        let state = state.borrow();
        let Some(demo) = state.as_ref() else {
            return err_json("call generate_pair first");
        };
        let params = PipelineParams {
            alpha: alpha.clamp(1, 5),
            t_scale: t_scale.max(0.0),
            seed: seed as u64,
            ..demo_params()
        };
        let outcome = match pipeline_transfer(
            &demo.shapes[0],
            &demo.shapes[1],
            &demo.regions[0],
            &params,
            None,
        ) {
            Ok(o) => o,
            Err(e) => return err_json(e),
        };
        let iou = semfm::transfer::iou(&outcome.predicted, &demo.regions[1]).unwrap_or(0.0);

        // Source: anchor regions tinted by anchor index, region highlighted.
        let n1 = demo.shapes[0].mesh.vertex_count();
        let mut source_colors = vec![[210u8, 210, 214]; n1];
        if let (Some(anchors), Some(sem)) = (&outcome.anchors, &outcome.source_semantics) {
            for (v, &cluster) in sem.assignment.iter().enumerate() {
                if let Some(i) = anchors
                    .pairs()
                    .iter()
                    .position(|p| p.source_cluster == cluster)
                {
                    source_colors[v] = label_color(i + 1);
                }
            }
        }
        for &v in demo.regions[0].vertices() {
            source_colors[v] = [220, 40, 40];
        }

        // Target: prediction in red, ground truth outline in blue, overlap
        // in purple-ish blend.
        let n2 = demo.shapes[1].mesh.vertex_count();
        let mut target_colors = vec![[210u8, 210, 214]; n2];
        if let (Some(anchors), Some(sem)) = (&outcome.anchors, &outcome.target_semantics) {
            for (v, &cluster) in sem.assignment.iter().enumerate() {
                if let Some(i) = anchors
                    .pairs()
                    .iter()
                    .position(|p| p.target_cluster == cluster)
                {
                    target_colors[v] = label_color(i + 1);
                }
            }
        }
        for &v in demo.regions[1].vertices() {
            target_colors[v] = [70, 90, 220];
        }
        for &v in outcome.predicted.vertices() {
            target_colors[v] = if demo.regions[1].contains(v) {
                [170, 40, 170]
            } else {
                [220, 40, 40]
            };
        }

        let anchors: Vec<serde_json::Value> = outcome
            .anchors
            .as_ref()
            .map(|a| {
                a.pairs()
                    .iter()
                    .map(|p| {
                        serde_json::json!({
                            "source_cluster": p.source_cluster,
                            "target_cluster": p.target_cluster,
                            "similarity": p.similarity,
                        })
                    })
                    .collect()
            })
            .unwrap_or_default();

        serde_json::json!({
            "iou": iou,
            "anchors": anchors,
            "predicted": outcome.predicted.vertices(),
            "source_colors": flatten(&source_colors),
            "target_colors": flatten(&target_colors),
        })
        .to_string()
    })
}

/// Heat-diffuse the source region indicator for time `t_scale` x (mean edge
/// length)^2 and return ramp colors of the smoothed field.
#[wasm_bindgen]
pub fn diffuse_field(t_scale: f64) -> String {
    STATE.with(|state| {
        let state = state.borrow();
        let Some(demo) = state.as_ref() else {
            return err_json("call generate_pair first");
        };
        let mesh = &demo.shapes[0].mesh;
        let indicator = demo.regions[0].indicator(mesh.vertex_count());
        let t = t_scale.max(0.0) * mesh.mean_edge_length().powi(2);
        let field = match demo.source_basis.heat_diffuse(&indicator, t) {
            Ok(f) => f,
            Err(e) => return err_json(e),
        };
        let hi = field.iter().cloned().fold(f64::NEG_INFINITY, f64::max).max(1e-12);
        let colors: Vec<[u8; 3]> = field
            .iter()
            .map(|&v| color_ramp((v / hi).clamp(0.0, 1.0)))
            .collect();
        serde_json::json!({
            "colors": flatten(&colors),
            "max": hi,
            "parts": demo.part_labels,
        })
        .to_string()
    })
}

fn flatten(colors: &[[u8; 3]]) -> Vec<u8> {
    colors.iter().flatten().copied().collect()
}
