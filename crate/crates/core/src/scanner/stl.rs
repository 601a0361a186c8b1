//! Binary STL: 80-byte header, little-endian `u32` facet count, then 50 bytes
//! per facet (normal, three vertices as `f32`, `u16` attribute).

use std::fs;
use std::path::Path;

use super::mesh::TriangleMesh;
use crate::error::{Error, Result};
use crate::geom;

const HEADER: &[u8] = b"binary STL: perturbation mesh";

pub fn encode_stl(mesh: &TriangleMesh) -> Vec<u8> {
    let n = mesh.faces().len();
    let mut out = Vec::with_capacity(84 + 50 * n);
    let mut header = [0u8; 80];
    header[..HEADER.len()].copy_from_slice(HEADER);
    out.extend_from_slice(&header);
    out.extend_from_slice(&(n as u32).to_le_bytes());
    for f in 0..n {
        let [a, b, c] = mesh.triangle(f);
        let normal = geom::normalize(geom::cross(geom::sub(b, a), geom::sub(c, a))).unwrap_or([0.0; 3]);
        for v in [normal, a, b, c] {
            for x in v {
                out.extend_from_slice(&(x as f32).to_le_bytes());
            }
        }
        out.extend_from_slice(&0u16.to_le_bytes());
    }
    out
}

pub fn export_stl(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_stl(mesh)).map_err(|e| Error::io(path, e))
}

/// Reads a binary STL into a single-part mesh (three vertices per facet).
pub fn load_stl(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_stl(&bytes).map_err(|reason| Error::MalformedFile {
        path: path.to_path_buf(),
        reason,
    })
}

pub fn decode_stl(bytes: &[u8]) -> std::result::Result<TriangleMesh, String> {
    if bytes.len() < 84 {
        return Err(format!("{} bytes is shorter than the STL header", bytes.len()));
    }
    let n = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
    let expected = 84 + 50 * n;
    if bytes.len() != expected {
        return Err(format!("expected {expected} bytes for {n} facets, found {}", bytes.len()));
    }
    let mut vertices = Vec::with_capacity(3 * n);
    let mut faces = Vec::with_capacity(n);
    for (i, rec) in bytes[84..].chunks_exact(50).enumerate() {
        let f = |k: usize| f32::from_le_bytes(rec[4 * k..4 * k + 4].try_into().unwrap()) as f64;
        for v in 1..4 {
            vertices.push([f(3 * v), f(3 * v + 1), f(3 * v + 2)]);
        }
        let base = 3 * i as u32;
        faces.push([base, base + 1, base + 2]);
    }
    TriangleMesh::new(vertices, faces).map_err(|e| e.to_string())
}
