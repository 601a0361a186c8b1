use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scanner::{ScanConfig, DEFAULT_SPHERE_RADIUS};

/// Optimizer settings. Some defaults are standard values for this
/// optimizer; the remaining knobs are artifact choices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackConfig {
    /// Population size n.
    pub population: usize,
    /// Standard deviation (m) of the initial Gaussian offsets; variance 0.01.
    pub sigma: f64,
    /// Generations T.
    pub generations: usize,
    /// Maximum crossover rate.
    pub k_c: f64,
    /// Maximum mutation rate.
    pub k_m: f64,
    pub temp0: f64,
    /// Total annealing steps, spread evenly over the generations.
    pub anneal_steps: usize,
    /// Cooling ratio per annealing step.
    pub lambda: f64,
    pub temp_min: f64,
    /// Perturbation points per individual.
    pub n0: usize,
    /// Maximum distance (m) from a perturbation point to the target cloud.
    pub shell_distance: f64,
    pub alpha1: f64,
    pub beta1: f64,
    pub alpha2: f64,
    pub beta2: f64,
    pub seed: u64,
    /// Hard cap on oracle calls.
    pub eval_budget: u64,
    /// Parents carried over unchanged each generation.
    pub elite_count: usize,
    /// Standard deviation (m) of annealing proposals.
    pub sigma_sa: f64,
    /// Consecutive successful generations after cooling before stopping early.
    pub patience: usize,
    /// Radius (m) of the sphere printed around each perturbation point.
    pub mesh_radius: f64,
    pub scan: ScanConfig,
    /// Optional IoU requirement when matching detections to ground truth.
    pub iou_gate: Option<f64>,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            population: 20,
            sigma: 0.1,
            generations: 1000,
            k_c: 1.0,
            k_m: 0.5,
            temp0: 300.0,
            anneal_steps: 500,
            lambda: 0.98,
            temp_min: 1.4,
            n0: 10,
            shell_distance: 0.2,
            alpha1: 0.5,
            beta1: 0.5,
            alpha2: 0.5,
            beta2: 0.5,
            seed: 0,
            eval_budget: 100_000,
            elite_count: 1,
            sigma_sa: 0.01,
            patience: 20,
            mesh_radius: DEFAULT_SPHERE_RADIUS,
            scan: ScanConfig::default(),
            iou_gate: None,
        }
    }
}

impl AttackConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.population < 2 {
            return fail("population must be at least 2");
        }
        if self.n0 < 1 {
            return fail("n0 must be at least 1");
        }
        if !(self.k_m > 0.0 && self.k_m < self.k_c && self.k_c <= 1.0) {
            return fail("rates must satisfy 0 < k_m < k_c <= 1");
        }
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return fail("lambda must lie in (0, 1)");
        }
        if !(self.temp0 > 0.0 && self.temp0.is_finite()) || !(self.temp_min >= 0.0) {
            return fail("temperatures must be positive");
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) || !(self.sigma_sa >= 0.0 && self.sigma_sa.is_finite()) {
            return fail("sigma and sigma_sa must be finite and non-negative");
        }
        if !(self.shell_distance > 0.0 && self.shell_distance.is_finite()) {
            return fail("shell_distance must be positive");
        }
        if !(self.mesh_radius > 0.0 && self.mesh_radius.is_finite()) {
            return fail("mesh_radius must be positive");
        }
        if self.elite_count >= self.population {
            return fail("elite_count must be smaller than the population");
        }
        for w in [self.alpha1, self.beta1, self.alpha2, self.beta2] {
            if !(w >= 0.0 && w.is_finite()) {
                return fail("fitness weights must be finite and non-negative");
            }
        }
        if let Some(g) = self.iou_gate {
            if !(0.0..=1.0).contains(&g) {
                return fail("iou_gate must lie in [0, 1]");
            }
        }
        self.scan.validate()
    }

    /// Loads TOML (`.toml`) or JSON (anything else). Missing keys take defaults.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        } else {
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Variance of the initial offsets.
    pub fn sigma_sq(&self) -> f64 {
        self.sigma * self.sigma
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_parameter_table() {
        let c = AttackConfig::default();
        assert_eq!(c.population, 20);
        assert!((c.sigma_sq() - 0.01).abs() < 1e-15);
        assert_eq!(c.generations, 1000);
        assert_eq!((c.k_c, c.k_m), (1.0, 0.5));
        assert_eq!((c.temp0, c.anneal_steps, c.lambda, c.temp_min), (300.0, 500, 0.98, 1.4));
        c.validate().unwrap();
    }

    #[test]
    fn invariants_are_enforced() {
        let bad = [
            AttackConfig { population: 1, ..Default::default() },
            AttackConfig { n0: 0, ..Default::default() },
            AttackConfig { k_m: 1.0, ..Default::default() },
            AttackConfig { k_c: 1.2, ..Default::default() },
            AttackConfig { lambda: 1.0, ..Default::default() },
            AttackConfig { elite_count: 20, ..Default::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }

    #[test]
    fn partial_files_take_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let json = dir.path().join("c.json");
        fs::write(&json, r#"{"population": 8, "seed": 7}"#).unwrap();
        let c = AttackConfig::load(&json).unwrap();
        assert_eq!((c.population, c.seed, c.generations), (8, 7, 1000));
        let toml_path = dir.path().join("c.toml");
        fs::write(&toml_path, "generations = 5\nk_m = 0.25\n").unwrap();
        let c = AttackConfig::load(&toml_path).unwrap();
        assert_eq!((c.generations, c.k_m), (5, 0.25));
        fs::write(&json, r#"{"populaton": 8}"#).unwrap();
        assert!(matches!(AttackConfig::load(&json), Err(Error::Config(_))));
    }
}
