//! Point-cloud data model, KITTI velodyne I/O, rigid transforms and the
//! distance measures used by the attack fitness.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{self, Vec3};

/// Bytes per KITTI record: four little-endian `f32` (x, y, z, intensity).
pub const KITTI_RECORD_BYTES: usize = 16;

/// A single LiDAR return in the sensor frame (meters).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub intensity: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self {
            x,
            y,
            z,
            intensity: 1.0,
        }
    }

    pub const fn with_intensity(x: f64, y: f64, z: f64, intensity: f64) -> Self {
        Self { x, y, z, intensity }
    }

    pub fn from_xyz(v: Vec3, intensity: f64) -> Self {
        Self::with_intensity(v[0], v[1], v[2], intensity)
    }

    #[inline]
    pub fn xyz(&self) -> Vec3 {
        [self.x, self.y, self.z]
    }

    #[inline]
    pub fn distance(&self, other: &Point3) -> f64 {
        geom::dist(self.xyz(), other.xyz())
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite() && self.intensity.is_finite()
    }
}

impl From<[f64; 4]> for Point3 {
    fn from(v: [f64; 4]) -> Self {
        Self::with_intensity(v[0], v[1], v[2], v[3])
    }
}

impl From<Point3> for [f64; 4] {
    fn from(p: Point3) -> Self {
        [p.x, p.y, p.z, p.intensity]
    }
}

/// Ordered set of points; the unit of detector input.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointCloud {
    pub points: Vec<Point3>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point3> {
        self.points.iter()
    }

    /// Concatenation `self ++ other`, order preserved.
    pub fn merged(&self, other: &PointCloud) -> PointCloud {
        let mut points = Vec::with_capacity(self.len() + other.len());
        points.extend_from_slice(&self.points);
        points.extend_from_slice(&other.points);
        PointCloud { points }
    }

    pub fn centroid(&self) -> Option<Vec3> {
        if self.is_empty() {
            return None;
        }
        let mut c = [0.0; 3];
        for p in &self.points {
            c = geom::add(c, p.xyz());
        }
        Some(geom::scale(c, 1.0 / self.len() as f64))
    }

    /// Index of the first non-finite point, if any.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.points.iter().position(|p| !p.is_finite())
    }
}

impl FromIterator<Point3> for PointCloud {
    fn from_iter<I: IntoIterator<Item = Point3>>(iter: I) -> Self {
        Self {
            points: iter.into_iter().collect(),
        }
    }
}

impl<'a> IntoIterator for &'a PointCloud {
    type Item = &'a Point3;
    type IntoIter = std::slice::Iter<'a, Point3>;

    fn into_iter(self) -> Self::IntoIter {
        self.points.iter()
    }
}

/// Oriented box with yaw about +Z, used for ground truth and predictions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub center: Vec3,
    pub half_extents: Vec3,
    #[serde(default)]
    pub yaw: f64,
}

impl BoundingBox {
    pub fn new(center: Vec3, half_extents: Vec3, yaw: f64) -> Result<Self> {
        let b = Self {
            center,
            half_extents,
            yaw: wrap_angle(yaw),
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.center.iter().all(|v| v.is_finite()) || !self.yaw.is_finite() {
            return Err(Error::arg("bounding box has non-finite center or yaw"));
        }
        if !self.half_extents.iter().all(|h| h.is_finite() && *h > 0.0) {
            return Err(Error::arg("bounding box half extents must be strictly positive"));
        }
        Ok(())
    }

    /// Axis-aligned box enclosing `cloud`, with every half extent at least `min_half`.
    pub fn enclosing(cloud: &PointCloud, min_half: f64) -> Option<Self> {
        let (lo, hi) = aabb(cloud)?;
        let center = geom::scale(geom::add(lo, hi), 0.5);
        let half = [
            ((hi[0] - lo[0]) * 0.5).max(min_half),
            ((hi[1] - lo[1]) * 0.5).max(min_half),
            ((hi[2] - lo[2]) * 0.5).max(min_half),
        ];
        Some(Self {
            center,
            half_extents: half,
            yaw: 0.0,
        })
    }

    /// Inclusive containment test in the box frame.
    pub fn contains(&self, p: Vec3) -> bool {
        let d = geom::sub(p, self.center);
        let (s, c) = self.yaw.sin_cos();
        let lx = c * d[0] + s * d[1];
        let ly = -s * d[0] + c * d[1];
        lx.abs() <= self.half_extents[0]
            && ly.abs() <= self.half_extents[1]
            && d[2].abs() <= self.half_extents[2]
    }

    pub fn translated(&self, delta: Vec3) -> Self {
        Self {
            center: geom::add(self.center, delta),
            ..*self
        }
    }

    /// Rotate the box by `psi` about a vertical axis through `pivot`.
    pub fn rotated_about(&self, pivot: Vec3, psi: f64) -> Self {
        let rel = geom::sub(self.center, pivot);
        let r = rz_apply(rz_matrix(psi), rel);
        Self {
            center: geom::add(pivot, r),
            half_extents: self.half_extents,
            yaw: wrap_angle(self.yaw + psi),
        }
    }
}

/// Maps an angle into `[-pi, pi)`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w >= PI {
        w - 2.0 * PI
    } else {
        w
    }
}

pub fn aabb(cloud: &PointCloud) -> Option<(Vec3, Vec3)> {
    let first = cloud.points.first()?.xyz();
    let mut lo = first;
    let mut hi = first;
    for p in &cloud.points[1..] {
        let v = p.xyz();
        for k in 0..3 {
            lo[k] = lo[k].min(v[k]);
            hi[k] = hi[k].max(v[k]);
        }
    }
    Some((lo, hi))
}

/// Reads a KITTI velodyne `.bin` file.
pub fn load_kitti_bin(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_kitti(&bytes).map_err(|e| match e {
        DecodeError::Length(len) => Error::MalformedFile {
            path: path.to_path_buf(),
            reason: format!("length {len} is not a multiple of {KITTI_RECORD_BYTES}"),
        },
        DecodeError::NonFinite(index) => Error::MalformedRecord {
            path: path.to_path_buf(),
            index,
        },
    })
}

enum DecodeError {
    Length(usize),
    NonFinite(usize),
}

fn decode_kitti(bytes: &[u8]) -> std::result::Result<PointCloud, DecodeError> {
    if !bytes.len().is_multiple_of(KITTI_RECORD_BYTES) {
        return Err(DecodeError::Length(bytes.len()));
    }
    let mut points = Vec::with_capacity(bytes.len() / KITTI_RECORD_BYTES);
    for (index, rec) in bytes.chunks_exact(KITTI_RECORD_BYTES).enumerate() {
        let f = |k: usize| f32::from_le_bytes(rec[4 * k..4 * k + 4].try_into().unwrap());
        let vals = [f(0), f(1), f(2), f(3)];
        if !vals.iter().all(|v| v.is_finite()) {
            return Err(DecodeError::NonFinite(index));
        }
        points.push(Point3::with_intensity(
            vals[0] as f64,
            vals[1] as f64,
            vals[2] as f64,
            vals[3] as f64,
        ));
    }
    Ok(PointCloud { points })
}

/// Serializes to KITTI layout. Coordinates are narrowed to `f32`.
pub fn encode_kitti(cloud: &PointCloud) -> Vec<u8> {
    let mut out = Vec::with_capacity(cloud.len() * KITTI_RECORD_BYTES);
    for p in &cloud.points {
        for v in [p.x, p.y, p.z, p.intensity] {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

pub fn save_kitti_bin(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_kitti(cloud)).map_err(|e| Error::io(path, e))
}

/// Row-major rotation about +Z.
pub fn rz_matrix(psi: f64) -> [[f64; 3]; 3] {
    let (s, c) = psi.sin_cos();
    [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
}

#[inline]
pub fn rz_apply(m: [[f64; 3]; 3], v: Vec3) -> Vec3 {
    [
        geom::dot(m[0], v),
        geom::dot(m[1], v),
        geom::dot(m[2], v),
    ]
}

pub fn rotate_z(cloud: &PointCloud, psi: f64) -> PointCloud {
    let m = rz_matrix(psi);
    cloud
        .iter()
        .map(|p| Point3::from_xyz(rz_apply(m, p.xyz()), p.intensity))
        .collect()
}

/// Rotation about a vertical axis through `pivot`.
pub fn rotate_z_about(cloud: &PointCloud, pivot: Vec3, psi: f64) -> PointCloud {
    let m = rz_matrix(psi);
    cloud
        .iter()
        .map(|p| {
            let r = rz_apply(m, geom::sub(p.xyz(), pivot));
            Point3::from_xyz(geom::add(r, pivot), p.intensity)
        })
        .collect()
}

pub fn translate(cloud: &PointCloud, delta: Vec3) -> PointCloud {
    cloud
        .iter()
        .map(|p| Point3::from_xyz(geom::add(p.xyz(), delta), p.intensity))
        .collect()
}

/// Uniform-grid nearest-neighbour index over a fixed reference cloud.
#[derive(Debug, Clone)]
pub struct NearestIndex {
    cell: f64,
    points: Vec<Vec3>,
    cells: HashMap<[i64; 3], Vec<u32>>,
    lo: [i64; 3],
    hi: [i64; 3],
}

const MAX_RING: i64 = 6;

impl NearestIndex {
    pub fn new(cloud: &PointCloud) -> Result<Self> {
        if cloud.is_empty() {
            return Err(Error::arg("nearest-neighbour index needs a non-empty cloud"));
        }
        let (lo, hi) = aabb(cloud).expect("non-empty");
        let volume = (0..3).map(|k| (hi[k] - lo[k]).max(0.05)).product::<f64>();
        let cell = (volume / cloud.len() as f64).cbrt().clamp(0.02, 1.0) * 2.0;
        let points: Vec<Vec3> = cloud.iter().map(Point3::xyz).collect();
        let mut cells: HashMap<[i64; 3], Vec<u32>> = HashMap::new();
        let mut clo = [i64::MAX; 3];
        let mut chi = [i64::MIN; 3];
        for (i, p) in points.iter().enumerate() {
            let key = cell_key(*p, cell);
            for k in 0..3 {
                clo[k] = clo[k].min(key[k]);
                chi[k] = chi[k].max(key[k]);
            }
            cells.entry(key).or_default().push(i as u32);
        }
        Ok(Self {
            cell,
            points,
            cells,
            lo: clo,
            hi: chi,
        })
    }

    pub fn point(&self, i: usize) -> Vec3 {
        self.points[i]
    }

    /// Index of and distance to the reference point nearest `q`.
    pub fn nearest(&self, q: Vec3) -> (usize, f64) {
        let c = cell_key(q, self.cell);
        let outside = (0..3)
            .map(|k| self.lo[k].saturating_sub(c[k]).max(c[k].saturating_sub(self.hi[k])).max(0))
            .max()
            .unwrap_or(0);
        if outside > MAX_RING {
            return self.brute(q);
        }
        let mut best = (usize::MAX, f64::INFINITY);
        let span = (0..3)
            .map(|k| c[k].saturating_sub(self.lo[k]).saturating_abs().max(self.hi[k].saturating_sub(c[k]).saturating_abs()))
            .max()
            .unwrap_or(0);
        for r in 0..=span {
            if r > MAX_RING + outside {
                return self.brute(q);
            }
            self.scan_ring(c, r, q, &mut best);
            // Points in rings beyond r are at least r cells away.
            if best.0 != usize::MAX && best.1 <= r as f64 * self.cell {
                break;
            }
        }
        best
    }

    fn scan_ring(&self, c: [i64; 3], r: i64, q: Vec3, best: &mut (usize, f64)) {
        for dx in -r..=r {
            for dy in -r..=r {
                for dz in -r..=r {
                    if dx.abs().max(dy.abs()).max(dz.abs()) != r {
                        continue;
                    }
                    let Some(ids) = self.cells.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) else {
                        continue;
                    };
                    for &i in ids {
                        let i = i as usize;
                        let d = geom::dist(q, self.points[i]);
                        if d < best.1 || (d == best.1 && i < best.0) {
                            *best = (i, d);
                        }
                    }
                }
            }
        }
    }

    fn brute(&self, q: Vec3) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (i, p) in self.points.iter().enumerate() {
            let d = geom::dist(q, *p);
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }
}

fn cell_key(p: Vec3, cell: f64) -> [i64; 3] {
    [
        (p[0] / cell).floor() as i64,
        (p[1] / cell).floor() as i64,
        (p[2] / cell).floor() as i64,
    ]
}

/// One-directional Chamfer distance: mean over `perturb` of the distance to
/// the nearest point of `target`.
pub fn chamfer_to_target(perturb: &PointCloud, target: &PointCloud) -> Result<f64> {
    if perturb.is_empty() {
        return Err(Error::arg("chamfer distance of an empty perturbation set"));
    }
    let index = NearestIndex::new(target)?;
    Ok(chamfer_with_index(perturb, &index))
}

pub fn chamfer_with_index(perturb: &PointCloud, index: &NearestIndex) -> f64 {
    let total: f64 = perturb.iter().map(|p| index.nearest(p.xyz()).1).sum();
    total / perturb.len() as f64
}

/// Mean Euclidean distance over all unordered pairs; 0 for a single point.
pub fn mean_pairwise_distance(perturb: &PointCloud) -> Result<f64> {
    let n = perturb.len();
    if n == 0 {
        return Err(Error::arg("mean pairwise distance of an empty set"));
    }
    if n == 1 {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for (i, a) in perturb.points.iter().enumerate() {
        for b in &perturb.points[i + 1..] {
            sum += a.distance(b);
        }
    }
    Ok(sum / (n * (n - 1) / 2) as f64)
}
