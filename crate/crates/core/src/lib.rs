//! Black-box adversarial attacks on LiDAR object detectors.
//!
//! A hybrid genetic algorithm with simulated annealing searches for a few
//! perturbation points near a target object. Each candidate is turned into a
//! printable mesh, scanned by a simulated LiDAR, merged into the scene and
//! scored by a detector oracle.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod defense;
pub mod error;
mod geom;
pub mod gsa;
pub mod harness;
pub mod oracle;
pub mod pointcloud;
pub mod scanner;
pub mod scene;
pub mod synthetic;

pub use error::{Error, Result};
pub use geom::Vec3;
