//! Simple random sampling defense and adversarial dataset emission.

use std::fs;
use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gsa::AttackResult;
use crate::pointcloud::{save_kitti_bin, PointCloud};
use crate::scene::Scene;

/// How many points the filter removes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Removal {
    Count(usize),
    /// Fraction in `[0, 1)`; the count is `floor(fraction * n)`.
    Fraction(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SrsConfig {
    pub removal: Removal,
    pub seed: u64,
}

impl SrsConfig {
    pub fn count(k: usize, seed: u64) -> Self {
        Self {
            removal: Removal::Count(k),
            seed,
        }
    }

    pub fn fraction(f: f64, seed: u64) -> Self {
        Self {
            removal: Removal::Fraction(f),
            seed,
        }
    }

    /// Points removed from a cloud of `n` points.
    pub fn removed(&self, n: usize) -> Result<usize> {
        let k = match self.removal {
            Removal::Count(k) => k,
            Removal::Fraction(f) => {
                if !(0.0..1.0).contains(&f) {
                    return Err(Error::arg(format!("removal fraction {f} outside [0, 1)")));
                }
                // guard against 0.017 * 117000 landing just below 1989
                (f * n as f64 + 1e-9).floor() as usize
            }
        };
        if k > 0 && k >= n {
            return Err(Error::arg(format!("cannot remove {k} of {n} points")));
        }
        Ok(k)
    }
}

/// Keeps a uniformly random subset of `n - k` points in their original order.
pub fn srs_filter(cloud: &PointCloud, config: &SrsConfig) -> Result<PointCloud> {
    let n = cloud.len();
    let k = config.removed(n)?;
    if k == 0 {
        return Ok(cloud.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut keep = index::sample(&mut rng, n, n - k).into_vec();
    keep.sort_unstable();
    Ok(keep.into_iter().map(|i| cloud.points[i]).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleKind {
    Clean,
    Adversarial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub label: String,
    pub kind: SampleKind,
    pub points: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::MalformedFile {
            path: path.into(),
            reason: e.to_string(),
        })
    }
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes every clean scene plus adversarial versions of the first
/// `ceil(mix_fraction * N)` scenes, and a manifest describing them.
pub fn emit_adv_training_set(
    scenes: &[Scene],
    results: &[AttackResult],
    mix_fraction: f64,
    out_dir: impl AsRef<Path>,
) -> Result<Manifest> {
    if scenes.len() != results.len() {
        return Err(Error::arg(format!(
            "{} scenes but {} attack results",
            scenes.len(),
            results.len()
        )));
    }
    if !(0.0..=1.0).contains(&mix_fraction) {
        return Err(Error::arg(format!("mix fraction {mix_fraction} outside [0, 1]")));
    }
    let out = out_dir.as_ref();
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let n_adv = ((mix_fraction * scenes.len() as f64) - 1e-9).ceil().max(0.0) as usize;
    let mut manifest = Manifest::default();
    let mut write = |name: String, label: &str, kind, cloud: &PointCloud| -> Result<()> {
        save_kitti_bin(cloud, out.join(&name))?;
        manifest.entries.push(ManifestEntry {
            file: name,
            label: label.to_string(),
            kind,
            points: cloud.len(),
        });
        Ok(())
    };
    for (i, scene) in scenes.iter().enumerate() {
        write(format!("clean_{i:04}.bin"), &scene.label, SampleKind::Clean, &scene.cloud())?;
    }
    for (i, (scene, result)) in scenes.iter().zip(results).enumerate().take(n_adv) {
        write(
            format!("adv_{i:04}.bin"),
            &scene.label,
            SampleKind::Adversarial,
            &result.adversarial_cloud(scene),
        )?;
    }
    let path = out.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}
