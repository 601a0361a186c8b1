use std::ops::Range;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::geom::{self, Vec3};
use crate::pointcloud::PointCloud;

/// Default radius of the printable sphere built around each perturbation point.
pub const DEFAULT_SPHERE_RADIUS: f64 = 0.05;

/// A group of faces with a bounding sphere, used to cull beams during scanning.
#[derive(Debug, Clone, PartialEq)]
pub struct Part {
    pub faces: Range<usize>,
    pub center: Vec3,
    pub radius: f64,
}

/// Indexed triangle mesh. Faces are wound counter-clockwise seen from outside.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[u32; 3]>,
    parts: Vec<Part>,
}

impl TriangleMesh {
    /// Builds a single-part mesh, rejecting out-of-range indices,
    /// non-finite vertices and zero-area faces.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[u32; 3]>) -> Result<Self> {
        if let Some(i) = vertices
            .iter()
            .position(|v| !v.iter().all(|c| c.is_finite()))
        {
            return Err(Error::arg(format!("vertex {i} is not finite")));
        }
        for (fi, f) in faces.iter().enumerate() {
            if f.iter().any(|&i| i as usize >= vertices.len()) {
                return Err(Error::arg(format!("face {fi} references a missing vertex")));
            }
            let [a, b, c] = f.map(|i| vertices[i as usize]);
            let e1 = geom::sub(b, a);
            let e2 = geom::sub(c, a);
            let area2 = geom::norm(geom::cross(e1, e2));
            if !(area2 > f64::EPSILON * geom::norm(e1) * geom::norm(e2)) {
                return Err(Error::arg(format!("face {fi} is degenerate")));
            }
        }
        let mut mesh = Self {
            vertices,
            faces,
            parts: Vec::new(),
        };
        if !mesh.faces.is_empty() {
            let part = mesh.bounding_part(0..mesh.faces.len());
            mesh.parts.push(part);
        }
        Ok(mesh)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn parts(&self) -> &[Part] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    #[inline]
    pub fn triangle(&self, face: usize) -> [Vec3; 3] {
        self.faces[face].map(|i| self.vertices[i as usize])
    }

    /// Disjoint union; parts of each input stay separate.
    pub fn append(&mut self, other: &TriangleMesh) {
        let vbase = self.vertices.len() as u32;
        let fbase = self.faces.len();
        self.vertices.extend_from_slice(&other.vertices);
        self.faces
            .extend(other.faces.iter().map(|f| f.map(|i| i + vbase)));
        self.parts.extend(other.parts.iter().map(|p| Part {
            faces: p.faces.start + fbase..p.faces.end + fbase,
            ..p.clone()
        }));
    }

    /// Applies `f` to every vertex. Parts are recomputed.
    pub fn map_vertices(&self, f: impl Fn(Vec3) -> Vec3) -> Self {
        let mut out = Self {
            vertices: self.vertices.iter().map(|v| f(*v)).collect(),
            faces: self.faces.clone(),
            parts: Vec::new(),
        };
        out.parts = self
            .parts
            .iter()
            .map(|p| out.bounding_part(p.faces.clone()))
            .collect();
        out
    }

    fn bounding_part(&self, faces: Range<usize>) -> Part {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for f in &self.faces[faces.clone()] {
            for &i in f {
                let v = self.vertices[i as usize];
                for k in 0..3 {
                    lo[k] = lo[k].min(v[k]);
                    hi[k] = hi[k].max(v[k]);
                }
            }
        }
        let center = geom::scale(geom::add(lo, hi), 0.5);
        let radius = self.faces[faces.clone()]
            .iter()
            .flatten()
            .map(|&i| geom::dist(center, self.vertices[i as usize]))
            .fold(0.0, f64::max);
        Part {
            faces,
            center,
            radius,
        }
    }

    /// Level-1 icosphere (42 vertices, 80 faces).
    pub fn icosphere(center: Vec3, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::arg("sphere radius must be positive"));
        }
        if !center.iter().all(|c| c.is_finite()) {
            return Err(Error::arg("sphere center is not finite"));
        }
        let unit = unit_icosphere();
        let vertices = unit
            .0
            .iter()
            .map(|v| geom::add(center, geom::scale(*v, radius)))
            .collect();
        Self::new(vertices, unit.1.clone())
    }

    /// Axis-aligned cuboid.
    pub fn cuboid(center: Vec3, half: Vec3) -> Result<Self> {
        let mut vertices = Vec::with_capacity(8);
        for i in 0..8u32 {
            let s = |bit: u32| if i & bit != 0 { 1.0 } else { -1.0 };
            vertices.push([
                center[0] + s(1) * half[0],
                center[1] + s(2) * half[1],
                center[2] + s(4) * half[2],
            ]);
        }
        let faces = vec![
            [0, 2, 3],
            [0, 3, 1], // -z
            [4, 5, 7],
            [4, 7, 6], // +z
            [0, 1, 5],
            [0, 5, 4], // -y
            [2, 6, 7],
            [2, 7, 3], // +y
            [0, 4, 6],
            [0, 6, 2], // -x
            [1, 3, 7],
            [1, 7, 5], // +x
        ];
        Self::new(vertices, faces)
    }
}

fn unit_icosphere() -> &'static (Vec<Vec3>, Vec<[u32; 3]>) {
    static SPHERE: OnceLock<(Vec<Vec3>, Vec<[u32; 3]>)> = OnceLock::new();
    SPHERE.get_or_init(|| {
        let t = (1.0 + 5f64.sqrt()) / 2.0;
        let mut verts: Vec<Vec3> = [
            [-1.0, t, 0.0],
            [1.0, t, 0.0],
            [-1.0, -t, 0.0],
            [1.0, -t, 0.0],
            [0.0, -1.0, t],
            [0.0, 1.0, t],
            [0.0, -1.0, -t],
            [0.0, 1.0, -t],
            [t, 0.0, -1.0],
            [t, 0.0, 1.0],
            [-t, 0.0, -1.0],
            [-t, 0.0, 1.0],
        ]
        .into_iter()
        .map(|v| geom::normalize(v).unwrap())
        .collect();
        let base: [[u32; 3]; 20] = [
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];
        let mut midpoints = std::collections::HashMap::new();
        let mut midpoint = |a: u32, b: u32, verts: &mut Vec<Vec3>| -> u32 {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                let m = geom::scale(geom::add(verts[a as usize], verts[b as usize]), 0.5);
                verts.push(geom::normalize(m).unwrap());
                (verts.len() - 1) as u32
            })
        };
        let mut faces = Vec::with_capacity(80);
        for [a, b, c] in base {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            faces.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        (verts, faces)
    })
}

/// Union of one icosphere per perturbation point, in input order.
pub fn build_perturbation_mesh(points: &PointCloud, radius: f64) -> Result<TriangleMesh> {
    if points.is_empty() {
        return Err(Error::arg("no perturbation points to reconstruct"));
    }
    let mut mesh = TriangleMesh::empty();
    for (i, p) in points.iter().enumerate() {
        if !p.is_finite() {
            return Err(Error::arg(format!("perturbation point {i} is not finite")));
        }
        mesh.append(&TriangleMesh::icosphere(p.xyz(), radius)?);
    }
    Ok(mesh)
}
