use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use super::config::AttackConfig;
use super::population::{Evaluation, Individual};
use crate::error::{Error, Result};
use crate::oracle::{classify_verdict, Detector, OracleVerdict, VerdictCase};
use crate::pointcloud::{chamfer_with_index, mean_pairwise_distance, NearestIndex, PointCloud};
use crate::scanner::{build_perturbation_mesh, simulate_scan};
use crate::scene::Scene;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitnessWeights {
    pub alpha1: f64,
    pub beta1: f64,
    pub alpha2: f64,
    pub beta2: f64,
}

impl From<&AttackConfig> for FitnessWeights {
    fn from(c: &AttackConfig) -> Self {
        Self {
            alpha1: c.alpha1,
            beta1: c.beta1,
            alpha2: c.alpha2,
            beta2: c.beta2,
        }
    }
}

/// Piecewise fitness:
/// recognized: `1 - S`;
/// hidden: `(1 - S) + a1/(1+d1) + b1/(1+d2)`;
/// misclassified: `S + a2/(1+d1) + b2/(1+d2)`.
pub fn fitness_value(case: VerdictCase, s: f64, d1: f64, d2: f64, w: &FitnessWeights) -> f64 {
    match case {
        VerdictCase::RecognizedCorrect => 1.0 - s,
        VerdictCase::Hidden => (1.0 - s) + w.alpha1 / (1.0 + d1) + w.beta1 / (1.0 + d2),
        VerdictCase::Misclassified => s + w.alpha2 / (1.0 + d1) + w.beta2 / (1.0 + d2),
    }
}

/// Scores perturbations against one scene and oracle, counting oracle calls
/// against the configured budget.
pub struct Evaluator<'a> {
    scene: &'a Scene,
    scene_cloud: PointCloud,
    target_index: NearestIndex,
    oracle: &'a dyn Detector,
    config: &'a AttackConfig,
    weights: FitnessWeights,
    calls: AtomicU64,
}

impl<'a> Evaluator<'a> {
    pub fn new(scene: &'a Scene, oracle: &'a dyn Detector, config: &'a AttackConfig) -> Result<Self> {
        Ok(Self {
            scene,
            scene_cloud: scene.cloud(),
            target_index: NearestIndex::new(&scene.target)?,
            oracle,
            config,
            weights: config.into(),
            calls: AtomicU64::new(0),
        })
    }

    pub fn scene(&self) -> &Scene {
        self.scene
    }

    pub fn config(&self) -> &AttackConfig {
        self.config
    }

    pub fn oracle(&self) -> &dyn Detector {
        self.oracle
    }

    pub fn target_index(&self) -> &NearestIndex {
        &self.target_index
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn remaining(&self) -> u64 {
        self.config.eval_budget.saturating_sub(self.calls())
    }

    /// Simulated returns from the printed perturbation object alone.
    pub fn perturbation_scan(&self, points: &PointCloud) -> Result<PointCloud> {
        let mesh = build_perturbation_mesh(points, self.config.mesh_radius)?;
        Ok(simulate_scan(&mesh, &self.config.scan))
    }

    /// Scene cloud followed by the perturbation returns.
    pub fn adversarial_cloud(&self, points: &PointCloud) -> Result<PointCloud> {
        Ok(self.scene_cloud.merged(&self.perturbation_scan(points)?))
    }

    fn reserve_call(&self) -> Result<()> {
        let budget = self.config.eval_budget;
        self.calls
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |c| (c < budget).then_some(c + 1))
            .map(|_| ())
            .map_err(|_| Error::BudgetExhausted { budget })
    }

    pub fn verdict_for(&self, cloud: &PointCloud) -> Result<OracleVerdict> {
        self.reserve_call()?;
        let detections = self.oracle.detect(cloud)?;
        Ok(classify_verdict(
            &detections,
            &self.scene.label,
            &self.scene.gt_box,
            self.oracle.info(),
            self.config.iou_gate,
        ))
    }

    pub fn evaluate_points(&self, points: &PointCloud) -> Result<Evaluation> {
        let scanned = self.perturbation_scan(points)?;
        let cloud = self.scene_cloud.merged(&scanned);
        let verdict = self.verdict_for(&cloud)?;
        let d1 = chamfer_with_index(points, &self.target_index);
        let d2 = mean_pairwise_distance(points)?;
        let fitness = fitness_value(verdict.case, verdict.score_s, d1, d2, &self.weights);
        Ok(Evaluation {
            fitness,
            verdict,
            d1,
            d2,
            scanned_points: scanned.len(),
        })
    }

    pub fn evaluate(&self, ind: &mut Individual) -> Result<f64> {
        let e = self.evaluate_points(&ind.points)?;
        let f = e.fitness;
        ind.eval = Some(e);
        Ok(f)
    }

    /// Evaluates every unevaluated individual. When the remaining budget is
    /// too small, only the first ones (by index) are evaluated and
    /// `BudgetExhausted` is returned. Errors are reported for the lowest
    /// failing index.
    pub fn evaluate_batch(&self, inds: &mut [Individual]) -> Result<()> {
        let pending: Vec<usize> = (0..inds.len()).filter(|&i| inds[i].eval.is_none()).collect();
        let take = pending.len().min(self.remaining() as usize);
        let chosen = &pending[..take];
        let results: Vec<(usize, Result<Evaluation>)> = chosen
            .par_iter()
            .map(|&i| (i, self.evaluate_points(&inds[i].points)))
            .collect();
        let mut first_err = None;
        for (i, r) in results {
            match r {
                Ok(e) => inds[i].eval = Some(e),
                Err(e) => {
                    if first_err.is_none() {
                        first_err = Some(e);
                    }
                }
            }
        }
        if let Some(e) = first_err {
            return Err(e);
        }
        if take < pending.len() {
            return Err(Error::BudgetExhausted {
                budget: self.config.eval_budget,
            });
        }
        Ok(())
    }
}
