//! Lifted sample set files: the boundary to the upstream feature-extraction
//! pipeline. JSON form `{"d": int, "samples": [{"p": [x,y,z], "e": [...]}]}`
//! plus an equivalent packed binary variant.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::LiftedSampleSet;

#[derive(Serialize, Deserialize)]
struct SampleSetJson {
    d: usize,
    samples: Vec<SampleJson>,
}

#[derive(Serialize, Deserialize)]
struct SampleJson {
    p: [f64; 3],
    e: Vec<f64>,
}

pub fn to_json(samples: &LiftedSampleSet) -> String {
    let doc = SampleSetJson {
        d: samples.dim(),
        samples: samples
            .positions()
            .iter()
            .zip(samples.embeddings())
            .map(|(p, e)| SampleJson {
                p: [p.x, p.y, p.z],
                e: e.clone(),
            })
            .collect(),
    };
    serde_json::to_string(&doc).expect("sample set serializes")
}

pub fn from_json(text: &str) -> Result<LiftedSampleSet> {
    let doc: SampleSetJson = serde_json::from_str(text)
        .map_err(|e| Error::InvalidArgument(format!("malformed sample set JSON: {e}")))?;
    let positions = doc
        .samples
        .iter()
        .map(|s| Point3::new(s.p[0], s.p[1], s.p[2]))
        .collect();
    let embeddings: Vec<Vec<f64>> = doc.samples.into_iter().map(|s| s.e).collect();
    let set = LiftedSampleSet::new(positions, embeddings)?;
    if set.dim() != doc.d {
        return Err(Error::InvalidArgument(format!(
            "declared d = {} but samples carry dimension {}",
            doc.d,
            set.dim()
        )));
    }
    Ok(set)
}

const BINARY_MAGIC: &[u8; 4] = b"SFLS";
const BINARY_VERSION: u32 = 1;

pub fn write_binary<W: Write>(samples: &LiftedSampleSet, mut out: W) -> std::io::Result<()> {
    out.write_all(BINARY_MAGIC)?;
    out.write_all(&BINARY_VERSION.to_le_bytes())?;
    out.write_all(&(samples.dim() as u32).to_le_bytes())?;
    out.write_all(&(samples.len() as u64).to_le_bytes())?;
    for (p, e) in samples.positions().iter().zip(samples.embeddings()) {
        for v in [p.x, p.y, p.z] {
            out.write_all(&v.to_le_bytes())?;
        }
        for &v in e {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut input: R) -> Result<LiftedSampleSet> {
    let bad = |msg: &str| Error::CacheFormat(format!("sample set binary: {msg}"));
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic).map_err(|_| bad("truncated magic"))?;
    if &magic != BINARY_MAGIC {
        return Err(bad("wrong magic"));
    }
    let mut u32buf = [0u8; 4];
    input.read_exact(&mut u32buf).map_err(|_| bad("truncated version"))?;
    if u32::from_le_bytes(u32buf) != BINARY_VERSION {
        return Err(bad("unsupported version"));
    }
    input.read_exact(&mut u32buf).map_err(|_| bad("truncated dim"))?;
    let dim = u32::from_le_bytes(u32buf) as usize;
    let mut u64buf = [0u8; 8];
    input.read_exact(&mut u64buf).map_err(|_| bad("truncated count"))?;
    let count = u64::from_le_bytes(u64buf) as usize;

    let mut positions = Vec::with_capacity(count);
    let mut embeddings = Vec::with_capacity(count);
    let mut f64buf = [0u8; 8];
    let mut next = |input: &mut R| -> Result<f64> {
        input
            .read_exact(&mut f64buf)
            .map_err(|_| bad("truncated record"))?;
        Ok(f64::from_le_bytes(f64buf))
    };
    for _ in 0..count {
        let (x, y, z) = (next(&mut input)?, next(&mut input)?, next(&mut input)?);
        positions.push(Point3::new(x, y, z));
        let mut e = Vec::with_capacity(dim);
        for _ in 0..dim {
            e.push(next(&mut input)?);
        }
        embeddings.push(e);
    }
    LiftedSampleSet::new(positions, embeddings)
}

/// Load a sample set, picking JSON or binary by file content.
pub fn load_path(path: &Path) -> Result<LiftedSampleSet> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(BINARY_MAGIC) {
        read_binary(bytes.as_slice())
    } else {
        let text = std::str::from_utf8(&bytes).map_err(|_| Error::JsonFile {
            path: path.to_path_buf(),
            message: "not UTF-8 and not the binary sample format".into(),
        })?;
        from_json(text).map_err(|e| Error::JsonFile {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

pub fn save_json_path(samples: &LiftedSampleSet, path: &Path) -> Result<()> {
    std::fs::write(path, to_json(samples)).map_err(|e| Error::io(path, e))
}
