//! The black-box detector boundary.
//!
//! Everything the optimizer knows about a detector goes through [`Detector`]:
//! a point cloud in, a list of labelled boxes with confidences out. Built-in
//! toy detectors and external processes speaking the NDJSON wire protocol
//! both implement it.

mod external;
mod spec;
mod toy;
pub mod wire;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::pointcloud::{BoundingBox, PointCloud};

pub use external::{check_conformance, Connection, Endpoint, ExternalOracle, DEFAULT_TIMEOUT};
pub use spec::{open_oracle, OracleSpec};
pub use toy::{Features, Template, ToyVoxelDetector, FEATURE_DIM, MIN_CLUSTER_POINTS};

/// Class names used by the built-in detectors and the synthetic benchmark.
pub const CLASSES: [&str; 3] = ["Car", "Pedestrian", "Cyclist"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub label: String,
    pub score: f64,
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
}

impl Detection {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.label.is_empty() {
            return Err("detection label is empty".into());
        }
        if !(0.0..=1.0).contains(&self.score) {
            return Err(format!("detection score {} outside [0, 1]", self.score));
        }
        self.bbox.validate().map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorInfo {
    pub name: String,
    pub default_threshold: f64,
    pub classes: Vec<String>,
}

/// A detector queried as a black box.
pub trait Detector: Send + Sync {
    fn info(&self) -> &DetectorInfo;

    fn detect(&self, cloud: &PointCloud) -> Result<Vec<Detection>>;
}

impl<D: Detector + ?Sized> Detector for Box<D> {
    fn info(&self) -> &DetectorInfo {
        (**self).info()
    }

    fn detect(&self, cloud: &PointCloud) -> Result<Vec<Detection>> {
        (**self).detect(cloud)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VerdictCase {
    RecognizedCorrect,
    Hidden,
    Misclassified,
}

/// Which fitness branch a detector response falls into.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleVerdict {
    pub case: VerdictCase,
    pub matched: Option<Detection>,
    /// The confidence fed to the fitness function.
    pub score_s: f64,
}

impl OracleVerdict {
    pub fn is_success(&self) -> bool {
        attack_success(self)
    }
}

/// Matches detections to the ground truth and classifies the outcome.
///
/// A detection matches when its box center lies inside `gt_box`; the highest
/// scoring match wins (first on ties). When `iou_gate` is set the match must
/// also reach that axis-aligned IoU with the ground truth.
pub fn classify_verdict(
    detections: &[Detection],
    gt_label: &str,
    gt_box: &BoundingBox,
    info: &DetectorInfo,
    iou_gate: Option<f64>,
) -> OracleVerdict {
    let mut matched: Option<&Detection> = None;
    for d in detections {
        if !gt_box.contains(d.bbox.center) {
            continue;
        }
        if let Some(gate) = iou_gate {
            if aligned_iou(&d.bbox, gt_box) < gate {
                continue;
            }
        }
        if matched.is_none_or(|m| d.score > m.score) {
            matched = Some(d);
        }
    }
    match matched {
        None => OracleVerdict {
            case: VerdictCase::Hidden,
            matched: None,
            score_s: 0.0,
        },
        Some(d) if d.score < info.default_threshold => OracleVerdict {
            case: VerdictCase::Hidden,
            matched: Some(d.clone()),
            score_s: d.score,
        },
        Some(d) => OracleVerdict {
            case: if d.label == gt_label {
                VerdictCase::RecognizedCorrect
            } else {
                VerdictCase::Misclassified
            },
            matched: Some(d.clone()),
            score_s: d.score,
        },
    }
}

/// True when the target is hidden or mislabelled.
pub fn attack_success(verdict: &OracleVerdict) -> bool {
    matches!(verdict.case, VerdictCase::Hidden | VerdictCase::Misclassified)
}

/// IoU of the axis-aligned hulls of two boxes (yaw ignored).
fn aligned_iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let mut inter = 1.0;
    for k in 0..3 {
        let lo = (a.center[k] - a.half_extents[k]).max(b.center[k] - b.half_extents[k]);
        let hi = (a.center[k] + a.half_extents[k]).min(b.center[k] + b.half_extents[k]);
        inter *= (hi - lo).max(0.0);
    }
    let vol = |x: &BoundingBox| 8.0 * x.half_extents.iter().product::<f64>();
    inter / (vol(a) + vol(b) - inter)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn info() -> DetectorInfo {
        DetectorInfo {
            name: "t".into(),
            default_threshold: 0.5,
            classes: CLASSES.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn gt() -> BoundingBox {
        BoundingBox::new([5.0, 0.0, -1.0], [2.0, 1.0, 0.8], 0.0).unwrap()
    }

    fn det(label: &str, score: f64, center: [f64; 3]) -> Detection {
        Detection {
            label: label.into(),
            score,
            bbox: BoundingBox::new(center, [1.0, 1.0, 1.0], 0.0).unwrap(),
        }
    }

    #[test]
    fn no_detections_is_hidden() {
        let v = classify_verdict(&[], "Car", &gt(), &info(), None);
        assert_eq!(v.case, VerdictCase::Hidden);
        assert_eq!(v.score_s, 0.0);
        assert!(v.matched.is_none());
        assert!(attack_success(&v));
    }

    #[test]
    fn correct_label_above_threshold() {
        let v = classify_verdict(&[det("Car", 0.9, [5.0, 0.0, -1.0])], "Car", &gt(), &info(), None);
        assert_eq!(v.case, VerdictCase::RecognizedCorrect);
        assert_eq!(v.score_s, 0.9);
        assert!(!attack_success(&v));
    }

    #[test]
    fn wrong_label_is_misclassified() {
        let v = classify_verdict(
            &[det("Pedestrian", 0.8, [5.5, 0.2, -1.0])],
            "Car",
            &gt(),
            &info(),
            None,
        );
        assert_eq!(v.case, VerdictCase::Misclassified);
        assert_eq!(v.score_s, 0.8);
        assert!(attack_success(&v));
    }

    #[test]
    fn sub_threshold_match_is_hidden_with_score() {
        let v = classify_verdict(&[det("Car", 0.3, [5.0, 0.0, -1.0])], "Car", &gt(), &info(), None);
        assert_eq!(v.case, VerdictCase::Hidden);
        assert_eq!(v.score_s, 0.3);
    }

    #[test]
    fn outside_detections_are_ignored_and_best_match_wins() {
        let dets = [
            det("Car", 0.99, [20.0, 0.0, -1.0]),
            det("Cyclist", 0.6, [5.0, 0.5, -1.0]),
            det("Car", 0.7, [4.0, 0.0, -1.0]),
        ];
        let v = classify_verdict(&dets, "Car", &gt(), &info(), None);
        assert_eq!(v.case, VerdictCase::RecognizedCorrect);
        assert_eq!(v.score_s, 0.7);
    }

    #[test]
    fn iou_gate_filters_matches() {
        let dets = [det("Car", 0.9, [5.0, 0.0, -1.0])];
        let v = classify_verdict(&dets, "Car", &gt(), &info(), Some(0.9));
        assert_eq!(v.case, VerdictCase::Hidden);
        let v = classify_verdict(&dets, "Car", &gt(), &info(), Some(0.1));
        assert_eq!(v.case, VerdictCase::RecognizedCorrect);
    }

    #[test]
    fn success_predicate_per_case() {
        let mk = |case| OracleVerdict {
            case,
            matched: None,
            score_s: 0.0,
        };
        assert!(attack_success(&mk(VerdictCase::Hidden)));
        assert!(!attack_success(&mk(VerdictCase::RecognizedCorrect)));
        assert!(attack_success(&mk(VerdictCase::Misclassified)));
    }
}
