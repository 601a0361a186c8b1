use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::report::{Report, ReportRow};
use crate::defense::{srs_filter, SrsConfig};
use crate::error::{Error, Result};
use crate::geom::{self, Vec3};
use crate::gsa::{AttackConfig, Evaluator};
use crate::oracle::{classify_verdict, Detector, OracleVerdict};
use crate::pointcloud::{rotate_z_about, translate, PointCloud};
use crate::scene::Scene;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    /// Offsets in meters along the sensor-to-object direction.
    Distance,
    /// Yaw angles in degrees about the target centroid.
    Angle,
    /// Numbers of points removed by random sampling.
    Srs,
}

impl FromStr for SweepKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "distance" => Ok(Self::Distance),
            "angle" => Ok(Self::Angle),
            "srs" => Ok(Self::Srs),
            other => Err(Error::arg(format!("unknown sweep kind {other:?}"))),
        }
    }
}

impl SweepKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Distance => "distance",
            Self::Angle => "angle",
            Self::Srs => "srs",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub kind: SweepKind,
    pub values: Vec<f64>,
    /// Repetitions per value; only random sampling uses more than one.
    pub trials_per_value: usize,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::arg("sweep needs at least one value"));
        }
        if self.trials_per_value == 0 {
            return Err(Error::arg("sweep needs at least one trial per value"));
        }
        if let Some(v) = self.values.iter().find(|v| !v.is_finite()) {
            return Err(Error::arg(format!("sweep value {v} is not finite")));
        }
        if self.kind == SweepKind::Srs {
            if let Some(v) = self.values.iter().find(|v| **v < 0.0 || v.fract() != 0.0) {
                return Err(Error::arg(format!("removal count {v} is not a non-negative integer")));
            }
        }
        Ok(())
    }
}

/// A finished attack to re-examine: the scene and its best perturbation.
#[derive(Debug, Clone, Copy)]
pub struct SweepCase<'a> {
    pub scene: &'a Scene,
    pub points: &'a PointCloud,
}

/// Unit vector from the sensor to the target centroid, projected onto the
/// ground plane.
pub fn distance_direction(scene: &Scene, origin: Vec3) -> Vec3 {
    let c = scene.target.centroid().unwrap_or(origin);
    geom::normalize([c[0] - origin[0], c[1] - origin[1], 0.0]).unwrap_or([1.0, 0.0, 0.0])
}

/// Scene and perturbation moved `offset` meters away from the sensor.
pub fn shifted_case(scene: &Scene, points: &PointCloud, offset: f64, origin: Vec3) -> (Scene, PointCloud) {
    let delta = geom::scale(distance_direction(scene, origin), offset);
    let moved = Scene {
        background: scene.background.clone(),
        target: translate(&scene.target, delta),
        label: scene.label.clone(),
        gt_box: scene.gt_box.translated(delta),
    };
    (moved, translate(points, delta))
}

/// Scene and perturbation rotated by `psi` radians about the target centroid.
pub fn rotated_case(scene: &Scene, points: &PointCloud, psi: f64) -> (Scene, PointCloud) {
    if psi == 0.0 {
        return (scene.clone(), points.clone());
    }
    let pivot = scene.target.centroid().expect("validated scene has a target");
    let turned = Scene {
        background: scene.background.clone(),
        target: rotate_z_about(&scene.target, pivot, psi),
        label: scene.label.clone(),
        gt_box: scene.gt_box.rotated_about(pivot, psi),
    };
    (turned, rotate_z_about(points, pivot, psi))
}

/// Re-scans the perturbation in `scene` and asks the oracle once.
pub fn judge(scene: &Scene, points: &PointCloud, oracle: &dyn Detector, config: &AttackConfig) -> Result<OracleVerdict> {
    Ok(Evaluator::new(scene, oracle, config)?.evaluate_points(points)?.verdict)
}

fn seed_for(seed: u64, row: usize, case: usize, trial: usize) -> u64 {
    // splitmix64 finalizer over the packed coordinates
    let mut z = seed
        .wrapping_add((row as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add((case as u64).wrapping_mul(0xbf58_476d_1ce4_e5b9))
        .wrapping_add((trial as u64).wrapping_mul(0x94d0_49bb_1331_11eb));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn attempt(row: &mut ReportRow, f: impl FnOnce() -> Result<OracleVerdict>) -> Result<()> {
    let t = Instant::now();
    let outcome = match f() {
        Ok(v) => Some(v.is_success()),
        Err(e) if e.is_oracle_failure() => None,
        Err(e) => return Err(e),
    };
    row.record(outcome, 1, t.elapsed().as_secs_f64() * 1e3);
    Ok(())
}

fn fmt_value(v: f64) -> String {
    format!("{v}")
}

pub fn sweep_distance(
    cases: &[SweepCase<'_>],
    oracle: &dyn Detector,
    config: &AttackConfig,
    offsets: &[f64],
) -> Result<Report> {
    run(
        &SweepSpec {
            kind: SweepKind::Distance,
            values: offsets.to_vec(),
            trials_per_value: 1,
        },
        cases,
        oracle,
        config,
    )
}

pub fn sweep_angle(
    cases: &[SweepCase<'_>],
    oracle: &dyn Detector,
    config: &AttackConfig,
    angles_deg: &[f64],
) -> Result<Report> {
    run(
        &SweepSpec {
            kind: SweepKind::Angle,
            values: angles_deg.to_vec(),
            trials_per_value: 1,
        },
        cases,
        oracle,
        config,
    )
}

pub fn sweep_srs(
    cases: &[SweepCase<'_>],
    oracle: &dyn Detector,
    config: &AttackConfig,
    counts: &[usize],
    trials: usize,
) -> Result<Report> {
    run(
        &SweepSpec {
            kind: SweepKind::Srs,
            values: counts.iter().map(|&k| k as f64).collect(),
            trials_per_value: trials,
        },
        cases,
        oracle,
        config,
    )
}

/// Runs a sweep over every case. Rows follow the order of `spec.values`;
/// oracle failures count as unsuccessful attempts and do not stop the sweep.
pub fn run(spec: &SweepSpec, cases: &[SweepCase<'_>], oracle: &dyn Detector, config: &AttackConfig) -> Result<Report> {
    spec.validate()?;
    let mut report = Report::new(spec.kind.name(), config.seed);
    let origin = config.scan.origin;
    for (ri, &value) in spec.values.iter().enumerate() {
        let mut row = ReportRow::new(format!("{}={}", spec.kind.name(), fmt_value(value)), Some(value));
        for (ci, case) in cases.iter().enumerate() {
            match spec.kind {
                SweepKind::Distance => attempt(&mut row, || {
                    let (scene, pts) = shifted_case(case.scene, case.points, value, origin);
                    judge(&scene, &pts, oracle, config)
                })?,
                SweepKind::Angle => attempt(&mut row, || {
                    let (scene, pts) = rotated_case(case.scene, case.points, value.to_radians());
                    judge(&scene, &pts, oracle, config)
                })?,
                SweepKind::Srs => {
                    let eval = Evaluator::new(case.scene, oracle, config)?;
                    let merged = eval.adversarial_cloud(case.points)?;
                    for trial in 0..spec.trials_per_value {
                        let srs = SrsConfig::count(value as usize, seed_for(config.seed, ri, ci, trial));
                        let filtered = srs_filter(&merged, &srs)?;
                        attempt(&mut row, || {
                            let dets = oracle.detect(&filtered)?;
                            Ok(classify_verdict(
                                &dets,
                                &case.scene.label,
                                &case.scene.gt_box,
                                oracle.info(),
                                config.iou_gate,
                            ))
                        })?;
                    }
                }
            }
        }
        report.rows.push(row);
    }
    Ok(report)
}
