use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::intersect::ray_triangle_intersect;
use super::mesh::{Part, TriangleMesh};
use crate::error::{Error, Result};
use crate::geom::{self, Vec3};
use crate::pointcloud::{Point3, PointCloud};

/// Beam pattern of a simulated spinning LiDAR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    /// Laser source position.
    pub origin: Vec3,
    /// Elevation of each laser, degrees.
    pub vertical_angles: Vec<f64>,
    pub horizontal_resolution_deg: f64,
    /// Inclusive `[start, end]` azimuth range in degrees. A span of 360 or
    /// more covers the full circle once. `end < start` yields no beams.
    pub horizontal_span_deg: [f64; 2],
}

impl Default for ScanConfig {
    /// 64 lasers from -24.8 to +2 degrees, 0.2 degree azimuth steps, full turn.
    fn default() -> Self {
        let lo = -24.8;
        let hi = 2.0;
        let vertical_angles = (0..64).map(|i| lo + (hi - lo) * i as f64 / 63.0).collect();
        Self {
            origin: [0.0; 3],
            vertical_angles,
            horizontal_resolution_deg: 0.2,
            horizontal_span_deg: [0.0, 360.0],
        }
    }
}

impl ScanConfig {
    /// Uniformly spaced lasers between `lo` and `hi` degrees (inclusive).
    pub fn uniform(origin: Vec3, lo: f64, hi: f64, beams: usize, resolution_deg: f64) -> Self {
        let vertical_angles = if beams <= 1 {
            vec![lo]
        } else {
            (0..beams)
                .map(|i| lo + (hi - lo) * i as f64 / (beams - 1) as f64)
                .collect()
        };
        Self {
            origin,
            vertical_angles,
            horizontal_resolution_deg: resolution_deg,
            horizontal_span_deg: [0.0, 360.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizontal_resolution_deg > 0.0 && self.horizontal_resolution_deg.is_finite()) {
            return Err(Error::Config("horizontal resolution must be positive".into()));
        }
        if self.vertical_angles.is_empty() {
            return Err(Error::Config("at least one vertical angle is required".into()));
        }
        if let Some(a) = self
            .vertical_angles
            .iter()
            .find(|a| !(a.abs() < 90.0))
        {
            return Err(Error::Config(format!("vertical angle {a} outside (-90, 90)")));
        }
        if !self.origin.iter().chain(&self.horizontal_span_deg).all(|v| v.is_finite()) {
            return Err(Error::Config("scan origin and span must be finite".into()));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Number of azimuth steps.
    pub fn horizontal_count(&self) -> usize {
        let [start, end] = self.horizontal_span_deg;
        let res = self.horizontal_resolution_deg;
        if end < start {
            0
        } else if end - start >= 360.0 {
            (360.0 / res - 1e-9).ceil() as usize
        } else {
            ((end - start) / res + 1e-9).floor() as usize + 1
        }
    }

    #[inline]
    pub fn horizontal_angle(&self, i: usize) -> f64 {
        self.horizontal_span_deg[0] + i as f64 * self.horizontal_resolution_deg
    }

    /// Unit direction of the beam at azimuth index `hi`, laser index `ai`.
    #[inline]
    pub fn beam_direction(&self, hi: usize, ai: usize) -> Vec3 {
        beam_direction(self.horizontal_angle(hi), self.vertical_angles[ai])
    }

    /// Same pattern with the azimuth span shifted by `deg`.
    pub fn shifted(&self, deg: f64) -> Self {
        let mut c = self.clone();
        c.horizontal_span_deg = [c.horizontal_span_deg[0] + deg, c.horizontal_span_deg[1] + deg];
        c
    }
}

/// `(cos a cos h, cos a sin h, sin a)` for azimuth `h` and elevation `a` in degrees.
#[inline]
pub fn beam_direction(h_deg: f64, a_deg: f64) -> Vec3 {
    let (sh, ch) = h_deg.to_radians().sin_cos();
    let (sa, ca) = a_deg.to_radians().sin_cos();
    [ca * ch, ca * sh, sa]
}

/// One returned beam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanHit {
    pub h_index: usize,
    pub a_index: usize,
    pub face: usize,
    pub t: f64,
    pub point: Vec3,
}

const ANGLE_MARGIN: f64 = 1e-7;

/// Nearest hit per beam, ordered by (azimuth index, laser index).
pub fn scan_hits(mesh: &TriangleMesh, config: &ScanConfig) -> Vec<ScanHit> {
    let count = config.horizontal_count();
    if count == 0 || mesh.is_empty() {
        return Vec::new();
    }
    let mut best: BTreeMap<(usize, usize), ScanHit> = BTreeMap::new();
    for part in mesh.parts() {
        let (h_indices, a_indices) = beam_window(part, config, count);
        for &hi in &h_indices {
            for &ai in &a_indices {
                let dir = config.beam_direction(hi, ai);
                for face in part.faces.clone() {
                    let [v0, v1, v2] = mesh.triangle(face);
                    let Some(hit) = ray_triangle_intersect(config.origin, dir, v0, v1, v2) else {
                        continue;
                    };
                    let entry = best.entry((hi, ai));
                    match entry {
                        std::collections::btree_map::Entry::Vacant(v) => {
                            v.insert(ScanHit {
                                h_index: hi,
                                a_index: ai,
                                face,
                                t: hit.t,
                                point: hit.point,
                            });
                        }
                        std::collections::btree_map::Entry::Occupied(mut o) => {
                            if hit.t < o.get().t {
                                *o.get_mut() = ScanHit {
                                    h_index: hi,
                                    a_index: ai,
                                    face,
                                    t: hit.t,
                                    point: hit.point,
                                };
                            }
                        }
                    }
                }
            }
        }
    }
    best.into_values().collect()
}

/// Simulated scan of `mesh`; one point (intensity 1) per beam that hits.
pub fn simulate_scan(mesh: &TriangleMesh, config: &ScanConfig) -> PointCloud {
    scan_hits(mesh, config)
        .into_iter()
        .map(|h| Point3::from_xyz(h.point, 1.0))
        .collect()
}

/// Beams whose direction can intersect the bounding sphere of `part`.
fn beam_window(part: &Part, config: &ScanConfig, count: usize) -> (Vec<usize>, Vec<usize>) {
    let all_h = || (0..count).collect::<Vec<_>>();
    let all_a = || (0..config.vertical_angles.len()).collect::<Vec<_>>();
    let rel = geom::sub(part.center, config.origin);
    let d = geom::norm(rel);
    if d <= part.radius * (1.0 + 1e-9) + 1e-12 {
        return (all_h(), all_a());
    }
    let theta = (part.radius / d).asin() + ANGLE_MARGIN;
    let el = rel[2].atan2(rel[0].hypot(rel[1]));
    let (el_lo, el_hi) = ((el - theta).to_degrees(), (el + theta).to_degrees());
    let a_indices: Vec<usize> = config
        .vertical_angles
        .iter()
        .enumerate()
        .filter(|(_, a)| **a >= el_lo && **a <= el_hi)
        .map(|(i, _)| i)
        .collect();
    if a_indices.is_empty() {
        return (Vec::new(), a_indices);
    }
    if el.abs() + theta >= FRAC_PI_2 - 1e-9 {
        return (all_h(), a_indices);
    }
    let half = ((theta.sin() / el.abs().cos()).min(1.0).asin() + ANGLE_MARGIN).to_degrees();
    let az = rel[1].atan2(rel[0]).to_degrees();
    let (lo, hi) = (az - half, az + half);
    let start = config.horizontal_span_deg[0];
    let res = config.horizontal_resolution_deg;
    let last = config.horizontal_angle(count - 1);
    let mut h_indices = Vec::new();
    let m_lo = ((start - hi) / 360.0).floor() as i64;
    let m_hi = ((last - lo) / 360.0).ceil() as i64;
    for m in m_lo..=m_hi {
        let wlo = lo + 360.0 * m as f64;
        let whi = hi + 360.0 * m as f64;
        let i_lo = ((wlo - start) / res).ceil().max(0.0);
        let i_hi = ((whi - start) / res).floor().min((count - 1) as f64);
        if i_lo <= i_hi {
            h_indices.extend(i_lo as usize..=i_hi as usize);
        }
    }
    h_indices.sort_unstable();
    h_indices.dedup();
    (h_indices, a_indices)
}
