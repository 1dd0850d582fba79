//! On-disk basis cache, keyed by mesh content hash.
//!
//! Layout (little endian): 8-byte magic, u32 version, u32 k, u64 vertex
//! count, k eigenvalues, k*|V| eigenfunction entries row-major, |V| masses.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;

use super::SpectralBasis;

const MAGIC: &[u8; 8] = b"SFMBASIS";
const VERSION: u32 = 1;

/// FNV-1a over the exact vertex/face bytes; stable across runs and platforms.
pub fn mesh_content_hash(mesh: &TriangleMesh) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            hash ^= b as u64;
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    for v in mesh.vertices() {
        eat(&v.x.to_le_bytes());
        eat(&v.y.to_le_bytes());
        eat(&v.z.to_le_bytes());
    }
    for f in mesh.faces() {
        for &i in f {
            eat(&(i as u64).to_le_bytes());
        }
    }
    hash
}

/// Cache file path for a mesh/k pair inside `dir`.
pub fn cache_path(dir: &Path, mesh: &TriangleMesh, k: usize) -> PathBuf {
    dir.join(format!("{:016x}_k{}.basis", mesh_content_hash(mesh), k))
}

pub fn write_basis<W: Write>(basis: &SpectralBasis, mut out: W) -> std::io::Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(basis.k() as u32).to_le_bytes())?;
    out.write_all(&(basis.vertex_count() as u64).to_le_bytes())?;
    for &v in basis.eigenvalues() {
        out.write_all(&v.to_le_bytes())?;
    }
    for r in 0..basis.vertex_count() {
        for c in 0..basis.k() {
            out.write_all(&basis.eigenfunctions()[(r, c)].to_le_bytes())?;
        }
    }
    for &m in basis.mass() {
        out.write_all(&m.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_basis<R: Read>(mut input: R) -> Result<SpectralBasis> {
    let bad = |msg: &str| Error::CacheFormat(msg.to_string());
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic).map_err(|_| bad("truncated magic"))?;
    if &magic != MAGIC {
        return Err(bad("wrong magic"));
    }
    let mut u32buf = [0u8; 4];
    input.read_exact(&mut u32buf).map_err(|_| bad("truncated version"))?;
    if u32::from_le_bytes(u32buf) != VERSION {
        return Err(bad("unsupported version"));
    }
    input.read_exact(&mut u32buf).map_err(|_| bad("truncated k"))?;
    let k = u32::from_le_bytes(u32buf) as usize;
    let mut u64buf = [0u8; 8];
    input.read_exact(&mut u64buf).map_err(|_| bad("truncated vertex count"))?;
    let nv = u64::from_le_bytes(u64buf) as usize;

    let mut read_f64s = |count: usize, what: &str| -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(count);
        let mut buf = [0u8; 8];
        for _ in 0..count {
            input
                .read_exact(&mut buf)
                .map_err(|_| Error::CacheFormat(format!("truncated {what}")))?;
            out.push(f64::from_le_bytes(buf));
        }
        Ok(out)
    };
    let eigenvalues = read_f64s(k, "eigenvalues")?;
    let phi_flat = read_f64s(nv * k, "eigenfunctions")?;
    let mass = read_f64s(nv, "mass")?;
    let phi = DMatrix::from_row_slice(nv, k, &phi_flat);
    SpectralBasis::from_parts(eigenvalues, phi, mass)
}

/// Load a cached basis, or compute one and populate the cache. Returns
/// whether the cache was hit alongside the basis (timing wants to know).
pub fn load_or_compute(
    dir: Option<&Path>,
    mesh: &TriangleMesh,
    k: usize,
) -> Result<(SpectralBasis, bool)> {
    if let Some(dir) = dir {
        let path = cache_path(dir, mesh, k);
        if path.is_file() {
            let file = std::fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
            match read_basis(std::io::BufReader::new(file)) {
                Ok(basis)
                    if basis.k() == k && basis.vertex_count() == mesh.vertex_count() =>
                {
                    return Ok((basis, true));
                }
                // Corrupt or stale entry: fall through and recompute.
                _ => {}
            }
        }
        let basis = SpectralBasis::compute(mesh, k)?;
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        write_basis(&basis, std::io::BufWriter::new(file)).map_err(|e| Error::io(&path, e))?;
        Ok((basis, false))
    } else {
        Ok((SpectralBasis::compute(mesh, k)?, false))
    }
}
