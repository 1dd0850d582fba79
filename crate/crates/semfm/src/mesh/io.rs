//! ASCII mesh I/O: OFF and OBJ input, OFF output, colored ASCII PLY output.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use nalgebra::Point3;

use crate::error::{Error, Result};

use super::TriangleMesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    Obj,
}

impl MeshFormat {
    /// Guess from a file extension (case-insensitive).
    pub fn from_path(path: &Path) -> Result<Self> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("off") => Ok(MeshFormat::Off),
            Some("obj") => Ok(MeshFormat::Obj),
            other => Err(Error::InvalidArgument(format!(
                "cannot infer mesh format from extension {other:?} (expected .off or .obj)"
            ))),
        }
    }
}

/// Parse a triangle mesh from a byte stream in the declared format.
/// Polygonal faces are fan-triangulated; vertex and face order is preserved.
pub fn load_mesh<R: Read>(source: R, format: MeshFormat) -> Result<TriangleMesh> {
    match format {
        MeshFormat::Off => load_off(source),
        MeshFormat::Obj => load_obj(source),
    }
}

pub fn load_mesh_path(path: &Path) -> Result<TriangleMesh> {
    let format = MeshFormat::from_path(path)?;
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    load_mesh(BufReader::new(file), format)
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::MeshParse {
        line,
        message: message.into(),
    }
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| parse_err(line, format!("expected a number, found `{tok}`")))
}

fn parse_usize(tok: &str, line: usize) -> Result<usize> {
    tok.parse::<usize>()
        .map_err(|_| parse_err(line, format!("expected a nonnegative integer, found `{tok}`")))
}

/// Push the fan triangulation of a polygon, validating indices on the way.
fn push_fan(
    poly: &[usize],
    n_vertices: usize,
    line: usize,
    faces: &mut Vec<[usize; 3]>,
) -> Result<()> {
    if poly.len() < 3 {
        return Err(parse_err(line, format!("face has {} vertices", poly.len())));
    }
    for &v in poly {
        if v >= n_vertices {
            return Err(parse_err(
                line,
                format!("face index {v} out of range (vertex count {n_vertices})"),
            ));
        }
    }
    for i in 1..poly.len() - 1 {
        let tri = [poly[0], poly[i], poly[i + 1]];
        if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
            return Err(parse_err(line, format!("face repeats a vertex: {poly:?}")));
        }
        faces.push(tri);
    }
    Ok(())
}

fn load_off<R: Read>(source: R) -> Result<TriangleMesh> {
    let reader = BufReader::new(source);
    // (line number, content) with comments and blanks stripped.
    let mut lines = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| parse_err(idx + 1, format!("read failure: {e}")))?;
        let content = line.split('#').next().unwrap_or("").trim().to_string();
        if !content.is_empty() {
            lines.push((idx + 1, content));
        }
    }
    let mut it = lines.into_iter();

    let (hline, header) = it.next().ok_or_else(|| parse_err(1, "empty OFF stream"))?;
    // The counts may share the header line ("OFF 8 12 18") or follow it.
    let mut counts_tokens: Vec<String> = Vec::new();
    let mut counts_line = hline;
    if let Some(rest) = header.strip_prefix("OFF") {
        let rest = rest.trim();
        if !rest.is_empty() {
            counts_tokens = rest.split_whitespace().map(str::to_string).collect();
        }
    } else {
        return Err(parse_err(hline, format!("malformed header `{header}`")));
    }
    if counts_tokens.is_empty() {
        let (cline, counts) = it
            .next()
            .ok_or_else(|| parse_err(hline, "missing counts line"))?;
        counts_line = cline;
        counts_tokens = counts.split_whitespace().map(str::to_string).collect();
    }
    if counts_tokens.len() < 2 {
        return Err(parse_err(counts_line, "counts line needs `nv nf [ne]`"));
    }
    let nv = parse_usize(&counts_tokens[0], counts_line)?;
    let nf = parse_usize(&counts_tokens[1], counts_line)?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, text) = it
            .next()
            .ok_or_else(|| parse_err(counts_line, "stream ended before all vertices"))?;
        let tok: Vec<&str> = text.split_whitespace().collect();
        if tok.len() < 3 {
            return Err(parse_err(ln, "vertex line needs 3 coordinates"));
        }
        vertices.push(Point3::new(
            parse_f64(tok[0], ln)?,
            parse_f64(tok[1], ln)?,
            parse_f64(tok[2], ln)?,
        ));
    }

    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, text) = it
            .next()
            .ok_or_else(|| parse_err(counts_line, "stream ended before all faces"))?;
        let tok: Vec<&str> = text.split_whitespace().collect();
        if tok.is_empty() {
            return Err(parse_err(ln, "empty face line"));
        }
        let m = parse_usize(tok[0], ln)?;
        if tok.len() < 1 + m {
            return Err(parse_err(ln, format!("face declares {m} indices, line has fewer")));
        }
        let mut poly = Vec::with_capacity(m);
        for t in &tok[1..1 + m] {
            poly.push(parse_usize(t, ln)?);
        }
        push_fan(&poly, vertices.len(), ln, &mut faces)?;
        validate_new_faces(&vertices, &faces, ln)?;
    }

    TriangleMesh::new(vertices, faces)
}

fn load_obj<R: Read>(source: R) -> Result<TriangleMesh> {
    let reader = BufReader::new(source);
    let mut vertices: Vec<Point3<f64>> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();

    for (idx, line) in reader.lines().enumerate() {
        let ln = idx + 1;
        let line = line.map_err(|e| parse_err(ln, format!("read failure: {e}")))?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tok = content.split_whitespace();
        match tok.next() {
            Some("v") => {
                let coords: Vec<&str> = tok.collect();
                if coords.len() < 3 {
                    return Err(parse_err(ln, "vertex line needs 3 coordinates"));
                }
                vertices.push(Point3::new(
                    parse_f64(coords[0], ln)?,
                    parse_f64(coords[1], ln)?,
                    parse_f64(coords[2], ln)?,
                ));
            }
            Some("f") => {
                let mut poly = Vec::new();
                for group in tok {
                    let index_tok = group.split('/').next().unwrap_or("");
                    let raw: i64 = index_tok.parse().map_err(|_| {
                        parse_err(ln, format!("expected a face index, found `{group}`"))
                    })?;
                    if raw < 1 {
                        return Err(parse_err(
                            ln,
                            format!("face index {raw} not positive (relative indices unsupported)"),
                        ));
                    }
                    poly.push((raw - 1) as usize);
                }
                push_fan(&poly, vertices.len(), ln, &mut faces)?;
                validate_new_faces(&vertices, &faces, ln)?;
            }
            // Normals, texcoords, materials, groups: ignored.
            _ => {}
        }
    }
    TriangleMesh::new(vertices, faces)
}

/// Degenerate triangles are reported against the face's source line.
fn validate_new_faces(
    vertices: &[Point3<f64>],
    faces: &[[usize; 3]],
    line: usize,
) -> Result<()> {
    if let Some(&[a, b, c]) = faces.last() {
        let area = super::triangle_area(&vertices[a], &vertices[b], &vertices[c]);
        if !(area > super::MIN_FACE_AREA) {
            return Err(parse_err(line, format!("degenerate face (area {area:.3e})")));
        }
    }
    Ok(())
}

/// Write ASCII OFF. `Display` for f64 prints the shortest round-trippable
/// representation, so coordinates survive a save/load cycle exactly.
pub fn write_off<W: Write>(mesh: &TriangleMesh, mut out: W) -> std::io::Result<()> {
    writeln!(out, "OFF")?;
    writeln!(out, "{} {} 0", mesh.vertex_count(), mesh.face_count())?;
    for v in mesh.vertices() {
        writeln!(out, "{} {} {}", v.x, v.y, v.z)?;
    }
    for f in mesh.faces() {
        writeln!(out, "3 {} {} {}", f[0], f[1], f[2])?;
    }
    Ok(())
}

pub fn write_off_path(mesh: &TriangleMesh, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_off(mesh, std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

/// Per-vertex coloring for PLY export.
pub enum VertexField<'a> {
    /// Scalars, mapped through the fixed blue-white-red ramp after min/max
    /// normalization.
    Scalar(&'a [f64]),
    /// Label ids, mapped through the fixed 10-color palette (cycled).
    Labels(&'a [usize]),
}

/// Fixed diverging ramp: blue (0) through white (0.5) to red (1).
pub fn color_ramp(t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64, s: f64| a + (b - a) * s;
    let (r, g, b) = if t < 0.5 {
        let s = t / 0.5;
        (lerp(59.0, 245.0, s), lerp(76.0, 245.0, s), lerp(192.0, 245.0, s))
    } else {
        let s = (t - 0.5) / 0.5;
        (lerp(245.0, 180.0, s), lerp(245.0, 4.0, s), lerp(245.0, 38.0, s))
    };
    [r.round() as u8, g.round() as u8, b.round() as u8]
}

/// Fixed label palette (cycled for ids >= 10).
pub const LABEL_PALETTE: [[u8; 3]; 10] = [
    [31, 119, 180],
    [255, 127, 14],
    [44, 160, 44],
    [214, 39, 40],
    [148, 103, 189],
    [140, 86, 75],
    [227, 119, 194],
    [127, 127, 127],
    [188, 189, 34],
    [23, 190, 207],
];

pub fn label_color(label: usize) -> [u8; 3] {
    LABEL_PALETTE[label % LABEL_PALETTE.len()]
}

/// Map a field to per-vertex RGB.
pub fn field_colors(field: &VertexField<'_>) -> Vec<[u8; 3]> {
    match field {
        VertexField::Scalar(values) => {
            let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let span = if hi > lo { hi - lo } else { 1.0 };
            values.iter().map(|&v| color_ramp((v - lo) / span)).collect()
        }
        VertexField::Labels(labels) => labels.iter().map(|&l| label_color(l)).collect(),
    }
}

/// ASCII PLY with `red green blue` uchar vertex properties.
pub fn export_colored_mesh<W: Write>(
    mesh: &TriangleMesh,
    field: &VertexField<'_>,
    mut out: W,
) -> Result<()> {
    let len = match field {
        VertexField::Scalar(v) => v.len(),
        VertexField::Labels(l) => l.len(),
    };
    if len != mesh.vertex_count() {
        return Err(Error::InvalidArgument(format!(
            "field length {len} does not match vertex count {}",
            mesh.vertex_count()
        )));
    }
    let colors = field_colors(field);
    let write = |out: &mut W| -> std::io::Result<()> {
        writeln!(out, "ply")?;
        writeln!(out, "format ascii 1.0")?;
        writeln!(out, "element vertex {}", mesh.vertex_count())?;
        writeln!(out, "property float x")?;
        writeln!(out, "property float y")?;
        writeln!(out, "property float z")?;
        writeln!(out, "property uchar red")?;
        writeln!(out, "property uchar green")?;
        writeln!(out, "property uchar blue")?;
        writeln!(out, "element face {}", mesh.face_count())?;
        writeln!(out, "property list uchar int vertex_indices")?;
        writeln!(out, "end_header")?;
        for (v, c) in mesh.vertices().iter().zip(&colors) {
            writeln!(out, "{} {} {} {} {} {}", v.x, v.y, v.z, c[0], c[1], c[2])?;
        }
        for f in mesh.faces() {
            writeln!(out, "3 {} {} {}", f[0], f[1], f[2])?;
        }
        Ok(())
    };
    write(&mut out).map_err(|e| Error::io("<ply stream>", e))
}

pub fn export_colored_mesh_path(
    mesh: &TriangleMesh,
    field: &VertexField<'_>,
    path: &Path,
) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    export_colored_mesh(mesh, field, std::io::BufWriter::new(file))
        .map_err(|e| match e {
            Error::Io { source, .. } => Error::io(path, source),
            other => other,
        })
}
