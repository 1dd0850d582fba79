//! Procedural object categories with exact ground truth.
//!
//! Each category grows N objects from one labeled base template (a closed
//! profile solid with asymmetric cross-sections, so maps cannot hide behind
//! mirror symmetries) under seeded smooth deformations. Connectivity is
//! shared, which makes the ground-truth correspondence the index identity
//! and lets every metric be computed exactly.

use std::path::Path;

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{graph_geodesics, TriangleMesh};
use crate::rng::Rng;
use crate::semantics::LiftedSampleSet;
use crate::transfer::AffordanceRegion;

/// Base template family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaseShape {
    /// Grip, shaft, neck, head, striking face.
    HandleTool,
    /// Base, belly, shoulder, neck, rim.
    TwoPartContainer,
    /// Pommel, grip, guard, blade, tip.
    BladeTool,
}

impl BaseShape {
    pub const ALL: [BaseShape; 3] = [
        BaseShape::HandleTool,
        BaseShape::TwoPartContainer,
        BaseShape::BladeTool,
    ];

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "handle-tool" => Ok(BaseShape::HandleTool),
            "two-part-container" => Ok(BaseShape::TwoPartContainer),
            "blade-tool" => Ok(BaseShape::BladeTool),
            other => Err(Error::InvalidArgument(format!(
                "unknown base shape `{other}` (expected handle-tool, two-part-container, blade-tool)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BaseShape::HandleTool => "handle-tool",
            BaseShape::TwoPartContainer => "two-part-container",
            BaseShape::BladeTool => "blade-tool",
        }
    }

    pub fn part_names(&self) -> &'static [&'static str] {
        match self {
            BaseShape::HandleTool => &["grip", "shaft", "neck", "head", "face"],
            BaseShape::TwoPartContainer => &["base", "belly", "shoulder", "neck", "rim"],
            BaseShape::BladeTool => &["pommel", "grip", "guard", "blade", "tip"],
        }
    }

    /// Part carrying the category's default interaction region.
    pub fn default_affordance_part(&self) -> usize {
        match self {
            BaseShape::HandleTool => 0,   // grip
            BaseShape::TwoPartContainer => 3, // neck
            BaseShape::BladeTool => 1,    // grip
        }
    }
}

/// Tessellation density of the template.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeshResolution {
    /// Rings along the axis.
    pub segments: usize,
    /// Vertices per ring.
    pub ring_vertices: usize,
}

impl Default for MeshResolution {
    fn default() -> Self {
        // ~1k vertices: segments * ring_vertices + 2 caps.
        MeshResolution {
            segments: 40,
            ring_vertices: 24,
        }
    }
}

impl MeshResolution {
    pub fn vertex_count(&self) -> usize {
        self.segments * self.ring_vertices + 2
    }

    /// Pick segments/ring_vertices for roughly `target` vertices, keeping the
    /// template's aspect ratio.
    pub fn for_vertex_count(target: usize) -> Self {
        let base = MeshResolution::default();
        let scale = ((target.max(base.vertex_count()) as f64)
            / base.vertex_count() as f64)
            .sqrt();
        MeshResolution {
            segments: ((base.segments as f64 * scale).round() as usize).max(8),
            ring_vertices: ((base.ring_vertices as f64 * scale).round() as usize).max(8),
        }
    }
}

/// Generation recipe for one category.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategorySpec {
    pub base: BaseShape,
    pub n_objects: usize,
    /// Deformation amplitude, relative to the template bounding-box
    /// diagonal; stable range [0, 0.5].
    pub amplitude: f64,
    pub embed_dim: usize,
    /// Per-coordinate standard deviation of the embedding noise.
    pub noise: f64,
    pub seed: u64,
    pub resolution: MeshResolution,
}

impl CategorySpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_objects < 2 {
            return Err(Error::InvalidArgument(format!(
                "category needs at least 2 objects, got {}",
                self.n_objects
            )));
        }
        if !(0.0..=0.5).contains(&self.amplitude) {
            return Err(Error::InvalidArgument(format!(
                "deformation amplitude {} outside the stable range [0, 0.5]",
                self.amplitude
            )));
        }
        if self.noise < 0.0 {
            return Err(Error::InvalidArgument("noise level must be >= 0".into()));
        }
        if self.embed_dim < 2 {
            return Err(Error::InvalidArgument(
                "embedding dimension must be >= 2".into(),
            ));
        }
        Ok(())
    }
}

/// One generated object with its exact ground truth.
#[derive(Debug, Clone)]
pub struct SyntheticObject {
    pub index: usize,
    pub mesh: TriangleMesh,
    pub part_labels: Vec<usize>,
    pub gt_affordance: AffordanceRegion,
    /// Index into the category's base template; shared connectivity makes
    /// this the identity.
    pub gt_map_to_base: Vec<usize>,
}

impl SyntheticObject {
    pub fn id(&self) -> String {
        format!("obj{}", self.index)
    }
}

/// Axial profile template: per-u radius, cross-section eccentricity, lateral
/// offsets, and twist, sampled on a closed ring/cap tessellation.
struct Template {
    mesh: TriangleMesh,
    /// (u, theta) parameters per vertex; caps carry theta = 0.
    params: Vec<(f64, f64)>,
    part_labels: Vec<usize>,
    part_ranges: Vec<(f64, f64)>,
}

struct Profile {
    height: f64,
    /// (u_end, part id) boundaries, ascending and covering [0, 1].
    parts: Vec<f64>,
    radius: fn(f64) -> f64,
    eccentricity: fn(f64) -> f64,
    offset_x: fn(f64) -> f64,
    offset_y: fn(f64) -> f64,
    twist: fn(f64) -> f64,
}

fn smoothstep(u: f64, lo: f64, hi: f64) -> f64 {
    let t = ((u - lo) / (hi - lo)).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

fn profile_for(base: BaseShape) -> Profile {
    match base {
        BaseShape::HandleTool => Profile {
            height: 1.0,
            parts: vec![0.28, 0.52, 0.64, 0.86, 1.0],
            radius: |u| {
                let grip = 0.075 - 0.02 * smoothstep(u, 0.0, 0.28);
                let shaft = 0.052f64;
                let neck = 0.052 + 0.05 * smoothstep(u, 0.52, 0.64);
                let head = 0.165;
                let face = 0.165 - 0.06 * smoothstep(u, 0.86, 1.0);
                if u < 0.28 {
                    grip
                } else if u < 0.52 {
                    shaft.max(grip.min(0.056))
                } else if u < 0.64 {
                    neck
                } else if u < 0.86 {
                    head
                } else {
                    face
                }
            },
            eccentricity: |u| 0.82 - 0.18 * smoothstep(u, 0.5, 0.75),
            offset_x: |u| {
                0.13 * smoothstep(u, 0.58, 0.85)
                    + 0.03 * (std::f64::consts::TAU * 0.9 * u + 1.9).sin()
            },
            offset_y: |u| {
                0.06 * (std::f64::consts::TAU * 0.7 * u).sin()
                    + 0.05 * smoothstep(u, 0.6, 0.95)
            },
            twist: |u| 0.35 * u,
        },
        BaseShape::TwoPartContainer => Profile {
            height: 1.0,
            parts: vec![0.16, 0.44, 0.66, 0.84, 1.0],
            radius: |u| {
                let belly = 0.14 + 0.15 * smoothstep(u, 0.12, 0.3) * (1.0 - smoothstep(u, 0.34, 0.56));
                let shoulder = 0.14 + 0.02 - 0.055 * smoothstep(u, 0.56, 0.74);
                let neck = 0.105;
                let rim = 0.105 + 0.035 * smoothstep(u, 0.9, 1.0);
                if u < 0.56 {
                    belly.max(0.14)
                } else if u < 0.74 {
                    shoulder
                } else if u < 0.9 {
                    neck
                } else {
                    rim
                }
            },
            eccentricity: |u| {
                0.84 - 0.12 * smoothstep(u, 0.15, 0.7) - 0.1 * smoothstep(u, 0.82, 1.0)
            },
            offset_x: |u| {
                0.055 * smoothstep(u, 0.5, 1.0)
                    + 0.035 * (std::f64::consts::TAU * 0.8 * u + 0.3).sin()
                    + 0.05 * smoothstep(u, 0.82, 1.0)
            },
            offset_y: |u| {
                0.065 * (std::f64::consts::TAU * 0.6 * u + 0.8).sin()
                    + 0.05 * smoothstep(u, 0.78, 1.0)
            },
            twist: |u| 0.3 * u,
        },
        BaseShape::BladeTool => Profile {
            height: 1.2,
            parts: vec![0.08, 0.34, 0.42, 0.9, 1.0],
            radius: |u| {
                if u < 0.08 {
                    0.062
                } else if u < 0.34 {
                    0.055
                } else if u < 0.42 {
                    0.055 + 0.032 * smoothstep(u, 0.34, 0.38) * (1.0 - smoothstep(u, 0.38, 0.42))
                        + 0.01
                } else if u < 0.9 {
                    0.115 - 0.04 * smoothstep(u, 0.42, 0.9)
                } else {
                    0.075 - 0.058 * smoothstep(u, 0.9, 1.0)
                }
            },
            eccentricity: |u| {
                0.84 - 0.52 * smoothstep(u, 0.36, 0.55) - 0.06 * smoothstep(u, 0.7, 1.0)
            },
            offset_x: |u| {
                0.05 * smoothstep(u, 0.45, 1.0).powi(2)
                    + 0.028 * (std::f64::consts::TAU * 0.85 * u + 1.1).sin()
                    + 0.03 * (smoothstep(u, 0.3, 0.42) - smoothstep(u, 0.42, 0.56))
            },
            offset_y: |u| {
                0.05 * (std::f64::consts::TAU * 0.5 * u + 0.4).sin()
                    + 0.09 * smoothstep(u, 0.5, 1.0).powi(2)
            },
            twist: |u| 0.18 * u,
        },
    }
}

fn build_template(base: BaseShape, resolution: MeshResolution) -> Template {
    let profile = profile_for(base);
    let s_count = resolution.segments.max(4);
    let r_count = resolution.ring_vertices.max(6);

    let part_of = |u: f64| -> usize {
        profile
            .parts
            .iter()
            .position(|&end| u < end || (end - 1.0).abs() < 1e-12)
            .unwrap_or(profile.parts.len() - 1)
            .min(profile.parts.len() - 1)
    };

    let mut vertices = Vec::with_capacity(s_count * r_count + 2);
    let mut params = Vec::with_capacity(s_count * r_count + 2);
    let mut labels = Vec::with_capacity(s_count * r_count + 2);
    for s in 0..s_count {
        let u = s as f64 / (s_count - 1) as f64;
        let radius = (profile.radius)(u).max(0.012);
        let ecc = (profile.eccentricity)(u);
        let (ox, oy) = ((profile.offset_x)(u), (profile.offset_y)(u));
        let twist = (profile.twist)(u);
        for r in 0..r_count {
            let theta = std::f64::consts::TAU * r as f64 / r_count as f64 + twist;
            vertices.push(Point3::new(
                ox + radius * theta.cos(),
                oy + radius * ecc * theta.sin(),
                u * profile.height,
            ));
            params.push((u, theta));
            labels.push(part_of(u));
        }
    }
    // Cap centers.
    let bottom = vertices.len();
    vertices.push(Point3::new(
        (profile.offset_x)(0.0),
        (profile.offset_y)(0.0),
        0.0,
    ));
    params.push((0.0, 0.0));
    labels.push(part_of(0.0));
    let top = vertices.len();
    vertices.push(Point3::new(
        (profile.offset_x)(1.0),
        (profile.offset_y)(1.0),
        profile.height,
    ));
    params.push((1.0, 0.0));
    labels.push(part_of(1.0));

    let ring = |s: usize, r: usize| s * r_count + (r % r_count);
    let mut faces = Vec::with_capacity(2 * (s_count - 1) * r_count + 2 * r_count);
    for s in 0..s_count - 1 {
        for r in 0..r_count {
            let (a, b) = (ring(s, r), ring(s, r + 1));
            let (c, d) = (ring(s + 1, r), ring(s + 1, r + 1));
            faces.push([a, b, d]);
            faces.push([a, d, c]);
        }
    }
    for r in 0..r_count {
        faces.push([bottom, ring(0, r + 1), ring(0, r)]);
        faces.push([top, ring(s_count - 1, r), ring(s_count - 1, r + 1)]);
    }

    let mesh = TriangleMesh::new(vertices, faces).expect("template is a valid mesh");
    let mut part_ranges = Vec::new();
    let mut lo = 0.0;
    for &end in &profile.parts {
        part_ranges.push((lo, end));
        lo = end;
    }
    Template {
        mesh,
        params,
        part_labels: labels,
        part_ranges,
    }
}

/// Seeded smooth deformation of the template: per-part radial scaling, a
/// global bend, a low-frequency radial wave, and bounded vertex jitter. The
/// resulting displacement field is capped at amplitude/2 of the template
/// diagonal so any two category members stay within amplitude x diagonal of
/// each other.
fn deform(template: &Template, amplitude: f64, rng: &mut Rng) -> Vec<Point3<f64>> {
    let diag = template.mesh.bounding_box_diagonal();
    let n_parts = template.part_ranges.len();
    let height = template
        .mesh
        .vertices()
        .iter()
        .map(|v| v.z)
        .fold(f64::NEG_INFINITY, f64::max);

    let part_scale: Vec<f64> = (0..n_parts)
        .map(|_| 1.0 + amplitude * rng.range(-0.7, 0.7))
        .collect();
    // Per-part axial rates reshape the proportions (a long-gripped mallet vs
    // a stubby hammer), which is where members stop being isometric.
    let part_rate: Vec<f64> = (0..n_parts)
        .map(|_| 1.0 + amplitude * rng.range(-0.15, 0.15))
        .collect();
    let bend_x = amplitude * rng.range(-0.35, 0.35) * diag;
    let bend_y = amplitude * rng.range(-0.35, 0.35) * diag;
    let wave_cycles = 1.0 + rng.index(2) as f64;
    let wave_phase = rng.range(0.0, std::f64::consts::TAU);
    let wave_gain = amplitude * rng.range(0.0, 0.3);
    let z_scale = 1.0 + amplitude * rng.range(-0.3, 0.3);
    let jitter = amplitude * 0.008 * diag;

    // Per-part factors, interpolated smoothly across ranges.
    let blend = |u: f64, values: &[f64]| -> f64 {
        let mut value = 0.0;
        let mut weight = 0.0;
        for (p, &(lo, hi)) in template.part_ranges.iter().enumerate() {
            let center = 0.5 * (lo + hi);
            let width = 0.5 * (hi - lo) + 0.12;
            let w = (-(u - center).powi(2) / (2.0 * width * width)).exp();
            value += w * values[p];
            weight += w;
        }
        value / weight
    };

    // Monotone axial re-parameterization from the cumulative rate integral,
    // normalized so the overall height is governed by z_scale alone.
    let resolution = 512usize;
    let mut cumulative = Vec::with_capacity(resolution + 1);
    let mut acc = 0.0;
    cumulative.push(0.0);
    for step in 0..resolution {
        let u = (step as f64 + 0.5) / resolution as f64;
        acc += blend(u, &part_rate) / resolution as f64;
        cumulative.push(acc);
    }
    let total = acc;
    let warp = |u: f64| -> f64 {
        let x = (u.clamp(0.0, 1.0)) * resolution as f64;
        let i = (x.floor() as usize).min(resolution - 1);
        let frac = x - i as f64;
        (cumulative[i] * (1.0 - frac) + cumulative[i + 1] * frac) / total
    };

    let mut displaced: Vec<Point3<f64>> = Vec::with_capacity(template.mesh.vertex_count());
    let mut max_disp: f64 = 0.0;
    for (v, &(u, _)) in template.mesh.vertices().iter().zip(&template.params) {
        let scale = blend(u, &part_scale)
            * (1.0 + wave_gain * (std::f64::consts::TAU * wave_cycles * u + wave_phase).sin());
        let new = Point3::new(
            v.x * scale + bend_x * u * u + jitter * rng.normal(),
            v.y * scale + bend_y * u * u + jitter * rng.normal(),
            height * warp(u) * z_scale + jitter * rng.normal(),
        );
        max_disp = max_disp.max((new - v).norm());
        displaced.push(new);
    }

    // Cap the displacement field so the documented bound holds exactly.
    let cap = 0.5 * amplitude * diag;
    if max_disp > cap && max_disp > 0.0 {
        let shrink = cap / max_disp;
        for (new, old) in displaced.iter_mut().zip(template.mesh.vertices()) {
            let d = *new - old;
            *new = old + d * shrink;
        }
    }
    displaced
}

/// Build the N category members. Pure function of the spec.
pub fn generate_category(spec: &CategorySpec) -> Result<Vec<SyntheticObject>> {
    spec.validate()?;
    let template = build_template(spec.base, spec.resolution);
    let identity: Vec<usize> = (0..template.mesh.vertex_count()).collect();

    let mut objects = Vec::with_capacity(spec.n_objects);
    for index in 0..spec.n_objects {
        let mut rng = Rng::new(spec.seed).fork(0x0b1ec7 + index as u64);
        let verts = if spec.amplitude == 0.0 {
            template.mesh.vertices().to_vec()
        } else {
            deform(&template, spec.amplitude, &mut rng)
        };
        let mesh = TriangleMesh::new(verts, template.mesh.faces().to_vec())?;
        let gt_affordance = affordance_for_mesh(
            &mesh,
            &template.part_labels,
            spec.base.default_affordance_part(),
            DEFAULT_AFFORDANCE_RADIUS_FRACTION,
            spec.seed,
            &format!("obj{index}"),
        )?;
        objects.push(SyntheticObject {
            index,
            mesh,
            part_labels: template.part_labels.clone(),
            gt_affordance,
            gt_map_to_base: identity.clone(),
        });
    }
    Ok(objects)
}

pub const DEFAULT_AFFORDANCE_RADIUS_FRACTION: f64 = 0.2;

/// Geodesic ball around a seeded in-part vertex, intersected with the part.
/// The seeded center choice depends only on (labels, part, seed), so objects
/// with shared connectivity get corresponding regions.
pub fn generate_affordance(
    obj: &SyntheticObject,
    part: usize,
    radius_fraction: f64,
    seed: u64,
) -> Result<AffordanceRegion> {
    affordance_for_mesh(
        &obj.mesh,
        &obj.part_labels,
        part,
        radius_fraction,
        seed,
        &obj.id(),
    )
}

fn affordance_for_mesh(
    mesh: &TriangleMesh,
    part_labels: &[usize],
    part: usize,
    radius_fraction: f64,
    seed: u64,
    mesh_id: &str,
) -> Result<AffordanceRegion> {
    if radius_fraction < 0.0 {
        return Err(Error::InvalidArgument("radius fraction must be >= 0".into()));
    }
    let members: Vec<usize> = part_labels
        .iter()
        .enumerate()
        .filter(|(_, &l)| l == part)
        .map(|(i, _)| i)
        .collect();
    if members.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "part {part} has no vertices"
        )));
    }
    let mut rng = Rng::new(seed).fork(0xaff0 + part as u64);
    let center = members[rng.index(members.len())];
    let radius = radius_fraction * crate::mesh::geodesic_diameter_estimate(mesh, seed);
    let dist = graph_geodesics(mesh, &[center])?;
    let vertices: Vec<usize> = members
        .iter()
        .copied()
        .filter(|&v| dist[v] <= radius)
        .collect();
    if vertices.is_empty() {
        return Err(Error::InvalidArgument(
            "affordance ball does not intersect the part".into(),
        ));
    }
    AffordanceRegion::new(mesh_id, vertices)
}

/// Minimum lifted samples drawn per part.
pub const MIN_SAMPLES_PER_PART: usize = 20;

/// Synthesize a lifted sample set for one object: each part carries a fixed
/// seeded unit embedding (shared category-wide through `seed`), and each
/// surface sample gets its part's vector plus isotropic noise.
pub fn generate_semantic_field(
    obj: &SyntheticObject,
    embed_dim: usize,
    noise: f64,
    seed: u64,
) -> Result<LiftedSampleSet> {
    if embed_dim < 2 {
        return Err(Error::InvalidArgument(
            "embedding dimension must be >= 2".into(),
        ));
    }
    if noise < 0.0 {
        return Err(Error::InvalidArgument("noise level must be >= 0".into()));
    }
    let n_parts = obj
        .part_labels
        .iter()
        .copied()
        .max()
        .map(|m| m + 1)
        .unwrap_or(0);

    // Part vectors from the category seed only: identical across objects.
    let mut part_rng = Rng::new(seed).fork(0x9a27);
    let part_vectors: Vec<Vec<f64>> = (0..n_parts)
        .map(|_| {
            let mut v: Vec<f64> = (0..embed_dim).map(|_| part_rng.normal()).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
            for x in &mut v {
                *x /= norm;
            }
            v
        })
        .collect();

    let mut rng = Rng::new(seed).fork(0x5a3b_1e00 + obj.index as u64);
    let total = (120 * n_parts).max(600);
    let samples = obj.mesh.sample_surface(total, &mut rng);

    let mut positions = Vec::with_capacity(total);
    let mut embeddings = Vec::with_capacity(total);
    let mut per_part = vec![0usize; n_parts];
    fn push(
        position: Point3<f64>,
        part: usize,
        part_vectors: &[Vec<f64>],
        noise: f64,
        rng: &mut Rng,
        positions: &mut Vec<Point3<f64>>,
        embeddings: &mut Vec<Vec<f64>>,
        per_part: &mut [usize],
    ) {
        let mut e = part_vectors[part].clone();
        for x in &mut e {
            *x += noise * rng.normal();
        }
        positions.push(position);
        embeddings.push(e);
        per_part[part] += 1;
    }
    for s in &samples {
        let part = obj.part_labels[s.nearest_face_vertex(&obj.mesh)];
        push(
            s.position,
            part,
            &part_vectors,
            noise,
            &mut rng,
            &mut positions,
            &mut embeddings,
            &mut per_part,
        );
    }

    // Top up sparsely hit parts from their own faces.
    for part in 0..n_parts {
        while per_part[part] < MIN_SAMPLES_PER_PART {
            let s = obj.mesh.sample_surface(1, &mut rng)[0];
            let p = obj.part_labels[s.nearest_face_vertex(&obj.mesh)];
            if p == part {
                push(
                    s.position,
                    part,
                    &part_vectors,
                    noise,
                    &mut rng,
                    &mut positions,
                    &mut embeddings,
                    &mut per_part,
                );
            }
        }
    }

    LiftedSampleSet::new(positions, embeddings)
}

/// Dataset manifest written next to the generated files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub base: BaseShape,
    pub seed: u64,
    pub amplitude: f64,
    pub embed_dim: usize,
    pub noise: f64,
    pub objects: Vec<ManifestObject>,
    pub gt_affordances: Vec<AffordanceRegion>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestObject {
    pub id: String,
    pub mesh: String,
    pub samples: String,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::JsonFile {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

/// Generate a category and write meshes, sample sets, and the manifest into
/// `dir`. Returns the manifest.
pub fn write_dataset(dir: &Path, spec: &CategorySpec) -> Result<Manifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let objects = generate_category(spec)?;
    let mut manifest_objects = Vec::with_capacity(objects.len());
    let mut gt = Vec::with_capacity(objects.len());
    for obj in &objects {
        let mesh_name = format!("{}.off", obj.id());
        let samples_name = format!("{}.samples.json", obj.id());
        crate::mesh::io::write_off_path(&obj.mesh, &dir.join(&mesh_name))?;
        let samples = generate_semantic_field(obj, spec.embed_dim, spec.noise, spec.seed)?;
        crate::semantics::io::save_json_path(&samples, &dir.join(&samples_name))?;
        manifest_objects.push(ManifestObject {
            id: obj.id(),
            mesh: mesh_name,
            samples: samples_name,
        });
        gt.push(obj.gt_affordance.clone());
    }
    let manifest = Manifest {
        schema_version: 1,
        base: spec.base,
        seed: spec.seed,
        amplitude: spec.amplitude,
        embed_dim: spec.embed_dim,
        noise: spec.noise,
        objects: manifest_objects,
        gt_affordances: gt,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(dir.join("manifest.json"), text)
        .map_err(|e| Error::io(dir.join("manifest.json"), e))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec(base: BaseShape) -> CategorySpec {
        CategorySpec {
            base,
            n_objects: 3,
            amplitude: 0.2,
            embed_dim: 8,
            noise: 0.05,
            seed: 42,
            resolution: MeshResolution {
                segments: 16,
                ring_vertices: 10,
            },
        }
    }

    #[test]
    fn templates_are_valid_and_labeled() {
        for base in BaseShape::ALL {
            let t = build_template(base, MeshResolution::default());
            assert_eq!(t.part_labels.len(), t.mesh.vertex_count());
            let parts: std::collections::BTreeSet<usize> =
                t.part_labels.iter().copied().collect();
            assert_eq!(parts.len(), base.part_names().len(), "{base:?}");
            // Connected: one zero eigenvalue means all geodesics are finite.
            let d = graph_geodesics(&t.mesh, &[0]).unwrap();
            assert!(d.iter().all(|v| v.is_finite()), "{base:?} is disconnected");
        }
    }

    #[test]
    fn zero_amplitude_reproduces_template_exactly() {
        let mut spec = small_spec(BaseShape::HandleTool);
        spec.amplitude = 0.0;
        spec.noise = 0.0;
        let objects = generate_category(&spec).unwrap();
        for pair in objects.windows(2) {
            assert_eq!(pair[0].mesh.vertices(), pair[1].mesh.vertices());
            assert_eq!(pair[0].mesh.faces(), pair[1].mesh.faces());
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = small_spec(BaseShape::BladeTool);
        let a = generate_category(&spec).unwrap();
        let b = generate_category(&spec).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.mesh.vertices(), y.mesh.vertices());
            assert_eq!(x.gt_affordance, y.gt_affordance);
        }
    }

    #[test]
    fn displacement_bound_holds_exhaustively() {
        let mut spec = small_spec(BaseShape::TwoPartContainer);
        spec.amplitude = 0.3;
        let template = build_template(spec.base, spec.resolution);
        let diag = template.mesh.bounding_box_diagonal();
        let objects = generate_category(&spec).unwrap();
        for a in &objects {
            for b in &objects {
                for (va, vb) in a.mesh.vertices().iter().zip(b.mesh.vertices()) {
                    assert!(
                        (va - vb).norm() <= spec.amplitude * diag + 1e-12,
                        "{} > {}",
                        (va - vb).norm(),
                        spec.amplitude * diag
                    );
                }
            }
        }
    }

    #[test]
    fn amplitude_out_of_range_rejected() {
        let mut spec = small_spec(BaseShape::HandleTool);
        spec.amplitude = 0.6;
        assert!(generate_category(&spec).is_err());
    }

    #[test]
    fn ground_truth_map_is_identity_and_affordance_in_part() {
        let spec = small_spec(BaseShape::HandleTool);
        let objects = generate_category(&spec).unwrap();
        for obj in &objects {
            assert!(obj
                .gt_map_to_base
                .iter()
                .enumerate()
                .all(|(i, &t)| i == t));
            let part = spec.base.default_affordance_part();
            for &v in obj.gt_affordance.vertices() {
                assert_eq!(obj.part_labels[v], part);
            }
        }
    }

    #[test]
    fn affordance_radius_extremes() {
        let spec = small_spec(BaseShape::HandleTool);
        let obj = &generate_category(&spec).unwrap()[0];
        let part = 0;
        // Zero radius: exactly the seeded center vertex.
        let tiny = generate_affordance(obj, part, 0.0, 7).unwrap();
        assert_eq!(tiny.len(), 1);
        // Huge radius: the entire part.
        let whole = generate_affordance(obj, part, 10.0, 7).unwrap();
        let part_size = obj.part_labels.iter().filter(|&&l| l == part).count();
        assert_eq!(whole.len(), part_size);
    }

    #[test]
    fn affordance_ball_matches_distance_oracle() {
        let spec = small_spec(BaseShape::BladeTool);
        let obj = &generate_category(&spec).unwrap()[1];
        let part = 1;
        let rf = 0.15;
        let region = generate_affordance(obj, part, rf, 99).unwrap();
        // Recover the center: the unique region vertex with distance 0 is
        // unknown, so check the ball property against every candidate center
        // used by the generator's rng stream.
        let mut rng = Rng::new(99).fork(0xaff0 + part as u64);
        let members: Vec<usize> = obj
            .part_labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == part)
            .map(|(i, _)| i)
            .collect();
        let center = members[rng.index(members.len())];
        let radius = rf * crate::mesh::geodesic_diameter_estimate(&obj.mesh, 99);
        let dist = graph_geodesics(&obj.mesh, &[center]).unwrap();
        let oracle: Vec<usize> = members
            .iter()
            .copied()
            .filter(|&v| dist[v] <= radius)
            .collect();
        assert_eq!(region.vertices(), oracle.as_slice());
    }

    #[test]
    fn semantic_field_noiseless_is_pure_part_vectors() {
        let spec = small_spec(BaseShape::HandleTool);
        let objects = generate_category(&spec).unwrap();
        let samples = generate_semantic_field(&objects[0], 6, 0.0, spec.seed).unwrap();
        // Group embeddings: every sample of a part must be bit-identical.
        let mut by_vector: std::collections::BTreeMap<String, usize> = Default::default();
        for e in samples.embeddings() {
            let key = format!("{e:?}");
            *by_vector.entry(key).or_insert(0) += 1;
        }
        assert_eq!(by_vector.len(), 5, "expected exactly one vector per part");
    }

    #[test]
    fn semantic_field_part_vectors_shared_across_objects() {
        let spec = small_spec(BaseShape::TwoPartContainer);
        let objects = generate_category(&spec).unwrap();
        let a = generate_semantic_field(&objects[0], 6, 0.0, spec.seed).unwrap();
        let b = generate_semantic_field(&objects[1], 6, 0.0, spec.seed).unwrap();
        let vectors = |s: &LiftedSampleSet| -> std::collections::BTreeSet<String> {
            s.embeddings().iter().map(|e| format!("{e:?}")).collect()
        };
        assert_eq!(vectors(&a), vectors(&b));
    }

    #[test]
    fn semantic_field_noise_mean_converges_to_part_vector() {
        // The blade part covers enough area to collect 200+ samples.
        let spec = small_spec(BaseShape::BladeTool);
        let obj = &generate_category(&spec).unwrap()[0];
        let d = 32;
        let noise = 0.1;
        let noisy = generate_semantic_field(obj, d, noise, spec.seed).unwrap();
        let clean = generate_semantic_field(obj, d, 0.0, spec.seed).unwrap();
        // Per part: mean of noisy embeddings vs the exact vector.
        let mut sums: std::collections::BTreeMap<String, (Vec<f64>, usize, Vec<f64>)> =
            Default::default();
        for (noisy_e, clean_e) in noisy.embeddings().iter().zip(clean.embeddings()) {
            let key = format!("{clean_e:?}");
            let entry = sums
                .entry(key)
                .or_insert_with(|| (vec![0.0; d], 0, clean_e.clone()));
            for (s, v) in entry.0.iter_mut().zip(noisy_e) {
                *s += v;
            }
            entry.1 += 1;
        }
        // The convergence statement applies from 200 samples up.
        let mut checked = 0;
        for (_, (sum, count, reference)) in sums {
            if count < 200 {
                continue;
            }
            checked += 1;
            let err: f64 = sum
                .iter()
                .zip(&reference)
                .map(|(s, r)| (s / count as f64 - r).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(err < 0.05, "part mean deviates by {err}");
        }
        assert!(checked >= 1, "no part reached 200 samples");
    }

    #[test]
    fn semantic_field_minimum_per_part() {
        let spec = small_spec(BaseShape::BladeTool);
        let obj = &generate_category(&spec).unwrap()[0];
        let clean = generate_semantic_field(obj, 4, 0.0, spec.seed).unwrap();
        let mut counts: std::collections::BTreeMap<String, usize> = Default::default();
        for e in clean.embeddings() {
            *counts.entry(format!("{e:?}")).or_insert(0) += 1;
        }
        for (_, c) in counts {
            assert!(c >= MIN_SAMPLES_PER_PART);
        }
    }

    #[test]
    fn dataset_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let spec = small_spec(BaseShape::HandleTool);
        let manifest = write_dataset(dir.path(), &spec).unwrap();
        assert_eq!(manifest.objects.len(), 3);
        let loaded = Manifest::load(&dir.path().join("manifest.json")).unwrap();
        assert_eq!(loaded.seed, spec.seed);
        assert_eq!(loaded.objects.len(), 3);
        for obj in &loaded.objects {
            let mesh = crate::mesh::io::load_mesh_path(&dir.path().join(&obj.mesh)).unwrap();
            assert_eq!(mesh.vertex_count(), spec.resolution.vertex_count());
            let samples =
                crate::semantics::io::load_path(&dir.path().join(&obj.samples)).unwrap();
            assert_eq!(samples.dim(), spec.embed_dim);
        }
    }
}
