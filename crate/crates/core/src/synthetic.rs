//! Procedural class shapes, the synthetic benchmark scenes, and the templates
//! behind the built-in detectors.
//!
//! Objects are unions of boxes standing on a flat ground at `GROUND_Z` below
//! the sensor. Scenes carry no ground returns.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::oracle::{ToyVoxelDetector, CLASSES};
use crate::pointcloud::{rz_apply, rz_matrix, BoundingBox, Point3, PointCloud};
use crate::scanner::{scan_hits, ScanConfig, TriangleMesh};
use crate::scene::Scene;

/// Ground height relative to the sensor, meters.
pub const GROUND_Z: f64 = -1.73;
/// Seed of the shipped benchmark.
pub const BENCHMARK_SEED: u64 = 20;
pub const BENCHMARK_SCENES: usize = 20;

/// Boxes `(center, half_extents)` in the object frame (x forward, z up from ground).
fn class_boxes(label: &str) -> Result<Vec<(Vec3, Vec3)>> {
    Ok(match label {
        "Car" => vec![
            ([0.0, 0.0, 0.55], [2.0, 0.85, 0.35]),
            ([-0.2, 0.0, 1.175], [1.1, 0.78, 0.275]),
        ],
        "Pedestrian" => vec![
            ([0.0, 0.0, 0.45], [0.12, 0.2, 0.45]),
            ([0.0, 0.0, 1.2], [0.14, 0.25, 0.3]),
            ([0.0, 0.0, 1.62], [0.1, 0.1, 0.12]),
        ],
        "Cyclist" => vec![
            ([0.0, 0.0, 0.45], [0.85, 0.05, 0.3]),
            ([0.65, 0.0, 0.95], [0.05, 0.3, 0.05]),
            ([-0.1, 0.0, 1.05], [0.22, 0.2, 0.3]),
            ([-0.05, 0.0, 1.45], [0.1, 0.1, 0.1]),
        ],
        other => return Err(Error::arg(format!("no shape for class {other:?}"))),
    })
}

/// Object mesh standing at ground position `(x, y)` with heading `yaw`.
pub fn class_mesh(label: &str, x: f64, y: f64, yaw: f64) -> Result<TriangleMesh> {
    let m = rz_matrix(yaw);
    let mut mesh = TriangleMesh::empty();
    for (c, h) in class_boxes(label)? {
        let local = TriangleMesh::cuboid(c, h)?;
        mesh.append(&local.map_vertices(|v| {
            let r = rz_apply(m, v);
            [r[0] + x, r[1] + y, r[2] + GROUND_Z]
        }));
    }
    Ok(mesh)
}

/// Ground-truth box of a class placed like [`class_mesh`], with 0.1 m margin.
pub fn class_box(label: &str, x: f64, y: f64, yaw: f64) -> Result<BoundingBox> {
    let boxes = class_boxes(label)?;
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for (c, h) in boxes {
        for k in 0..3 {
            lo[k] = lo[k].min(c[k] - h[k]);
            hi[k] = hi[k].max(c[k] + h[k]);
        }
    }
    let center_local = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0, (lo[2] + hi[2]) / 2.0];
    let r = rz_apply(rz_matrix(yaw), center_local);
    BoundingBox::new(
        [r[0] + x, r[1] + y, r[2] + GROUND_Z],
        [
            (hi[0] - lo[0]) / 2.0 + 0.1,
            (hi[1] - lo[1]) / 2.0 + 0.1,
            (hi[2] - lo[2]) / 2.0 + 0.1,
        ],
        yaw,
    )
}

/// Scanner used for the benchmark and the built-in templates: 64 lasers,
/// -24.8..2 degrees, 0.2 degree azimuth steps.
pub fn benchmark_scan_config() -> ScanConfig {
    ScanConfig::default()
}

/// Scans `mesh` and splits the returns into those hitting faces before and
/// after `split_face`.
fn scan_split(mesh: &TriangleMesh, split_face: usize, cfg: &ScanConfig) -> (PointCloud, PointCloud) {
    let mut first = PointCloud::default();
    let mut second = PointCloud::default();
    for h in scan_hits(mesh, cfg) {
        let p = Point3::from_xyz(h.point, 1.0);
        if h.face < split_face {
            first.points.push(p);
        } else {
            second.points.push(p);
        }
    }
    (first, second)
}

/// Scan of an isolated object.
pub fn scan_object(label: &str, x: f64, y: f64, yaw: f64, cfg: &ScanConfig) -> Result<PointCloud> {
    let mesh = class_mesh(label, x, y, yaw)?;
    Ok(scan_split(&mesh, usize::MAX, cfg).0)
}

fn clutter_mesh(rng: &mut ChaCha8Rng, avoid: Vec3) -> Result<TriangleMesh> {
    let mut mesh = TriangleMesh::empty();
    let count = rng.random_range(3..=5);
    let mut placed = 0;
    while placed < count {
        let range = rng.random_range(11.0..22.0);
        let az = rng.random_range(-70f64..70.0).to_radians();
        let (x, y) = (range * az.cos(), range * az.sin());
        if ((x - avoid[0]).powi(2) + (y - avoid[1]).powi(2)).sqrt() < 4.0 {
            continue;
        }
        let half = match rng.random_range(0..3) {
            0 => [0.1, 0.1, 1.3],  // pole
            1 => [1.5, 0.15, 0.8], // wall segment
            _ => [0.6, 0.6, 0.5],  // bush
        };
        let yaw = rng.random_range(0.0..std::f64::consts::PI);
        let local = TriangleMesh::cuboid([0.0, 0.0, half[2]], half)?;
        let m = rz_matrix(yaw);
        mesh.append(&local.map_vertices(|v| {
            let r = rz_apply(m, v);
            [r[0] + x, r[1] + y, r[2] + GROUND_Z]
        }));
        placed += 1;
    }
    Ok(mesh)
}

/// One synthetic scene: a single object of class `label` in front of the
/// sensor plus a few clutter objects farther away.
pub fn synthetic_scene(label: &str, rng: &mut ChaCha8Rng, cfg: &ScanConfig) -> Result<Scene> {
    let range = rng.random_range(5.0..9.0);
    let az = rng.random_range(-35f64..35.0).to_radians();
    let yaw = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    let (x, y) = (range * az.cos(), range * az.sin());
    let mut mesh = class_mesh(label, x, y, yaw)?;
    let split = mesh.faces().len();
    mesh.append(&clutter_mesh(rng, [x, y, 0.0])?);
    let (target, background) = scan_split(&mesh, split, cfg);
    Scene::new(background, target, label, class_box(label, x, y, yaw)?)
}

/// The benchmark: classes cycle Car, Pedestrian, Cyclist.
pub fn synthetic_scenes(count: usize, seed: u64) -> Result<Vec<Scene>> {
    let cfg = benchmark_scan_config();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| synthetic_scene(CLASSES[i % CLASSES.len()], &mut rng, &cfg))
        .collect()
}

pub fn benchmark_scenes() -> Result<Vec<Scene>> {
    synthetic_scenes(BENCHMARK_SCENES, BENCHMARK_SEED)
}

/// Labelled template clouds: each class straight ahead at two ranges and
/// eight headings.
pub fn default_templates() -> Result<Vec<(String, PointCloud)>> {
    let cfg = benchmark_scan_config();
    let mut out = Vec::new();
    for label in CLASSES {
        for range in TEMPLATE_RANGES {
            for k in 0..8 {
                let yaw = (22.5 * k as f64).to_radians();
                out.push((label.to_string(), scan_object(label, range, 0.0, yaw, &cfg)?));
            }
        }
    }
    Ok(out)
}

const TEMPLATE_RANGES: [f64; 2] = [5.5, 8.0];

pub const BUILTIN_DETECTORS: [&str; 2] = ["voxel0.2", "voxel0.4"];

/// `voxel0.2` or `voxel0.4`: toy detectors with threshold 0.5.
pub fn builtin_detector(name: &str) -> Result<ToyVoxelDetector> {
    let voxel = match name {
        "voxel0.2" => 0.2,
        "voxel0.4" => 0.4,
        other => {
            return Err(Error::Config(format!(
                "unknown builtin detector {other:?} (expected one of {BUILTIN_DETECTORS:?})"
            )))
        }
    };
    ToyVoxelDetector::new(name, &default_templates()?, 0.5, voxel)
}
