//! Deterministic voxel/feature-template detectors.
//!
//! The cloud is voxelized, occupied voxels are grouped into 26-connected
//! clusters, and every cluster with enough points is described by a small
//! hand-crafted feature vector. Each class is scored by a Gaussian kernel on
//! the distance to its nearest template; scores are normalized over classes
//! and the top class is reported when it clears the threshold.

use std::collections::HashMap;

use super::{Detection, Detector, DetectorInfo};
use crate::error::{Error, Result};
use crate::pointcloud::{BoundingBox, Point3, PointCloud};

pub const FEATURE_DIM: usize = 13;
/// Clusters with fewer points never produce a detection.
pub const MIN_CLUSTER_POINTS: usize = 5;

const HIST_BINS: usize = 8;
const HIST_BIN_HEIGHT: f64 = 0.3;
const W_COUNT: f64 = 0.5;
const W_HIST: f64 = 2.0;
const W_VOXELS: f64 = 0.5;
const W_GEOM: f64 = 2.0;
const DEFAULT_TAU: f64 = 0.3;
/// Squared feature distance at which objectness drops to one half.
const DEFAULT_GATE: f64 = 1.2;
const DEFAULT_SOFTNESS: f64 = 0.15;

/// `[w ln(1+n), w major, w minor, w height, w h0..h7, w ln(1+voxels)]`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Features(pub [f64; FEATURE_DIM]);

impl Features {
    pub fn distance_sq(&self, other: &Features) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    pub label: String,
    pub features: Features,
}

#[derive(Debug, Clone)]
pub struct ToyVoxelDetector {
    info: DetectorInfo,
    voxel: f64,
    tau: f64,
    gate: f64,
    softness: f64,
    templates: Vec<Template>,
}

struct Cluster {
    points: Vec<usize>,
    voxels: usize,
}

impl ToyVoxelDetector {
    /// Builds a detector from labelled example clouds. Each example contributes
    /// the features of its largest cluster.
    pub fn new(
        name: impl Into<String>,
        examples: &[(String, PointCloud)],
        threshold: f64,
        voxel: f64,
    ) -> Result<Self> {
        if examples.is_empty() {
            return Err(Error::arg("toy detector needs at least one template"));
        }
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::arg("detector threshold must lie in (0, 1)"));
        }
        if !(voxel > 0.0) {
            return Err(Error::arg("voxel size must be positive"));
        }
        let mut templates = Vec::with_capacity(examples.len());
        let mut classes: Vec<String> = Vec::new();
        for (label, cloud) in examples {
            let clusters = clusters(cloud, voxel);
            let largest = clusters
                .iter()
                .max_by_key(|c| c.points.len())
                .ok_or_else(|| Error::arg(format!("template for {label} is empty")))?;
            templates.push(Template {
                label: label.clone(),
                features: features(cloud, largest),
            });
            if !classes.contains(label) {
                classes.push(label.clone());
            }
        }
        Ok(Self {
            info: DetectorInfo {
                name: name.into(),
                default_threshold: threshold,
                classes,
            },
            voxel,
            tau: DEFAULT_TAU,
            gate: DEFAULT_GATE,
            softness: DEFAULT_SOFTNESS,
            templates,
        })
    }

    /// Overrides the class kernel width.
    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    /// Overrides the objectness falloff: clusters whose nearest template lies
    /// at squared feature distance `gate` score half their class posterior.
    pub fn with_objectness(mut self, gate: f64, softness: f64) -> Self {
        self.gate = gate;
        self.softness = softness;
        self
    }

    pub fn voxel(&self) -> f64 {
        self.voxel
    }

    pub fn templates(&self) -> &[Template] {
        &self.templates
    }

    /// Features of every cluster with at least [`MIN_CLUSTER_POINTS`] points.
    pub fn cluster_features(&self, cloud: &PointCloud) -> Vec<Features> {
        clusters(cloud, self.voxel)
            .iter()
            .filter(|c| c.points.len() >= MIN_CLUSTER_POINTS)
            .map(|c| features(cloud, c))
            .collect()
    }

    /// Squared feature distance to the nearest template of each class, in
    /// `info().classes` order.
    pub fn class_distances(&self, f: &Features) -> Vec<f64> {
        self.info
            .classes
            .iter()
            .map(|c| {
                self.templates
                    .iter()
                    .filter(|t| &t.label == c)
                    .map(|t| f.distance_sq(&t.features))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    /// Likelihood that a cluster is an object at all, falling smoothly from 1
    /// to 0 as its nearest template distance passes the gate.
    pub fn objectness(&self, dmin: f64) -> f64 {
        1.0 / (1.0 + ((dmin - self.gate) / self.softness).exp())
    }

    /// Per-class confidences in `info().classes` order: class posterior
    /// (kernel on template distance, normalized) times objectness.
    pub fn class_scores(&self, f: &Features) -> Vec<f64> {
        let dists = self.class_distances(f);
        let dmin = dists.iter().copied().fold(f64::INFINITY, f64::min);
        let obj = self.objectness(dmin);
        // shifted by dmin so nothing underflows
        let w: Vec<f64> = dists.iter().map(|d| (-(d - dmin) / self.tau).exp()).collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|x| obj * x / total).collect()
    }
}

impl Detector for ToyVoxelDetector {
    fn info(&self) -> &DetectorInfo {
        &self.info
    }

    fn detect(&self, cloud: &PointCloud) -> Result<Vec<Detection>> {
        let mut out = Vec::new();
        for c in clusters(cloud, self.voxel) {
            if c.points.len() < MIN_CLUSTER_POINTS {
                continue;
            }
            let f = features(cloud, &c);
            let scores = self.class_scores(&f);
            let (best, &score) = scores
                .iter()
                .enumerate()
                .fold((0, &f64::NEG_INFINITY), |acc, (i, s)| if *s > *acc.1 { (i, s) } else { acc });
            if score < self.info.default_threshold {
                continue;
            }
            let members: PointCloud = c.points.iter().map(|&i| cloud.points[i]).collect();
            let bbox = BoundingBox::enclosing(&members, 0.05).expect("non-empty cluster");
            out.push(Detection {
                label: self.info.classes[best].clone(),
                score,
                bbox,
            });
        }
        Ok(out)
    }
}

fn voxel_key(p: &Point3, voxel: f64) -> [i64; 3] {
    [
        (p.x / voxel).floor() as i64,
        (p.y / voxel).floor() as i64,
        (p.z / voxel).floor() as i64,
    ]
}

/// 26-connected components of occupied voxels, ordered by first point index.
fn clusters(cloud: &PointCloud, voxel: f64) -> Vec<Cluster> {
    let mut voxel_of: HashMap<[i64; 3], usize> = HashMap::with_capacity(cloud.len() / 2);
    let mut keys: Vec<[i64; 3]> = Vec::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for (i, p) in cloud.iter().enumerate() {
        let k = voxel_key(p, voxel);
        let id = *voxel_of.entry(k).or_insert_with(|| {
            keys.push(k);
            members.push(Vec::new());
            keys.len() - 1
        });
        members[id].push(i);
    }
    let mut label = vec![usize::MAX; keys.len()];
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for seed in 0..keys.len() {
        if label[seed] != usize::MAX {
            continue;
        }
        let cid = out.len();
        label[seed] = cid;
        stack.push(seed);
        let mut points = Vec::new();
        let mut voxels = 0;
        while let Some(v) = stack.pop() {
            voxels += 1;
            points.extend_from_slice(&members[v]);
            let k = keys[v];
            for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        if let Some(&n) = voxel_of.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                            if label[n] == usize::MAX {
                                label[n] = cid;
                                stack.push(n);
                            }
                        }
                    }
                }
            }
        }
        points.sort_unstable();
        out.push(Cluster { points, voxels });
    }
    out
}

fn features(cloud: &PointCloud, c: &Cluster) -> Features {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for &i in &c.points {
        let v = cloud.points[i].xyz();
        for k in 0..3 {
            lo[k] = lo[k].min(v[k]);
            hi[k] = hi[k].max(v[k]);
        }
    }
    let mut hist = [0usize; HIST_BINS];
    for &i in &c.points {
        let bin = ((cloud.points[i].z - lo[2]) / HIST_BIN_HEIGHT) as usize;
        hist[bin.min(HIST_BINS - 1)] += 1;
    }
    let n = c.points.len() as f64;
    let ex = hi[0] - lo[0];
    let ey = hi[1] - lo[1];
    let mut f = [0.0; FEATURE_DIM];
    f[0] = W_COUNT * (1.0 + n).ln();
    f[1] = W_GEOM * ex.max(ey);
    f[2] = W_GEOM * ex.min(ey);
    f[3] = W_GEOM * (hi[2] - lo[2]);
    for (b, count) in hist.iter().enumerate() {
        f[4 + b] = W_HIST * *count as f64 / n;
    }
    f[12] = W_VOXELS * (1.0 + c.voxels as f64).ln();
    Features(f)
}
