//! Physical reconstruction of perturbation points and simulated LiDAR scanning.

mod intersect;
mod mesh;
mod scan;
mod stl;

pub use intersect::{ray_triangle_intersect, RayHit, MIN_T, PARALLEL_EPS};
pub use mesh::{build_perturbation_mesh, Part, TriangleMesh, DEFAULT_SPHERE_RADIUS};
pub use scan::{beam_direction, scan_hits, simulate_scan, ScanConfig, ScanHit};
pub use stl::{decode_stl, encode_stl, export_stl, load_stl};
