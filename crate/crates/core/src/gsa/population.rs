use std::cmp::Ordering;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::chromosome::{decode, encode, Chromosome};
use super::config::AttackConfig;
use crate::error::Result;
use crate::geom::{self, Vec3};
use crate::oracle::OracleVerdict;
use crate::pointcloud::{NearestIndex, Point3, PointCloud};

/// Cached outcome of one oracle evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub fitness: f64,
    pub verdict: OracleVerdict,
    /// Chamfer distance from the perturbation points to the target.
    pub d1: f64,
    /// Mean pairwise distance between perturbation points.
    pub d2: f64,
    /// Number of simulated returns from the perturbation object.
    pub scanned_points: usize,
}

/// One candidate perturbation. `points == decode(chromosome)` always holds.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub points: PointCloud,
    pub chromosome: Chromosome,
    pub eval: Option<Evaluation>,
}

impl Individual {
    /// Wraps points that are already representable in single precision.
    pub fn from_points(points: PointCloud) -> Result<Self> {
        let chromosome = encode(&points)?;
        Ok(Self {
            points,
            chromosome,
            eval: None,
        })
    }

    /// Fitness, or negative infinity before evaluation.
    pub fn fitness(&self) -> f64 {
        self.eval.as_ref().map_or(f64::NEG_INFINITY, |e| e.fitness)
    }

    pub fn is_success(&self) -> bool {
        self.eval.as_ref().is_some_and(|e| e.verdict.is_success())
    }
}

/// Elite ordering: any successful individual outranks every unsuccessful one;
/// within the same outcome, higher fitness wins.
pub fn rank_cmp(a: &Individual, b: &Individual) -> Ordering {
    a.is_success()
        .cmp(&b.is_success())
        .then_with(|| a.fitness().total_cmp(&b.fitness()))
}

/// Indices sorted best-first; ties keep the lower index first.
pub fn ranked_indices(pop: &[Individual]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pop.len()).collect();
    idx.sort_by(|&i, &j| rank_cmp(&pop[j], &pop[i]));
    idx
}

pub fn best_index(pop: &[Individual]) -> Option<usize> {
    ranked_indices(pop).first().copied()
}

/// Keeps perturbation points finite, single-precision and within the shell
/// around the target cloud.
pub struct Repairer<'a> {
    target: &'a PointCloud,
    index: &'a NearestIndex,
    shell: f64,
}

fn round_f32(v: Vec3) -> Vec3 {
    v.map(|c| c as f32 as f64)
}

impl<'a> Repairer<'a> {
    pub fn new(target: &'a PointCloud, index: &'a NearestIndex, shell: f64) -> Self {
        Self { target, index, shell }
    }

    pub fn shell(&self) -> f64 {
        self.shell
    }

    pub fn nearest_distance(&self, p: Vec3) -> f64 {
        self.index.nearest(p).1
    }

    pub fn repair<R: Rng + ?Sized>(&self, points: &PointCloud, rng: &mut R) -> PointCloud {
        points
            .iter()
            .map(|p| {
                let xyz = if p.x.is_finite() && p.y.is_finite() && p.z.is_finite() {
                    p.xyz()
                } else {
                    self.resample(rng)
                };
                Point3::from_xyz(self.pull(xyz), 1.0)
            })
            .collect()
    }

    fn resample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec3 {
        let base = self.target.points[rng.random_range(0..self.target.len())].xyz();
        let normal = Normal::new(0.0, self.shell / 2.0).expect("positive shell");
        [
            base[0] + normal.sample(rng),
            base[1] + normal.sample(rng),
            base[2] + normal.sample(rng),
        ]
    }

    /// Radial projection onto the shell around the nearest target point,
    /// nudged inward until the single-precision result satisfies the bound.
    fn pull(&self, p: Vec3) -> Vec3 {
        let rounded = round_f32(p);
        let (qi, d) = self.index.nearest(p);
        if d <= self.shell && self.nearest_distance(rounded) <= self.shell {
            return rounded;
        }
        let q = self.index.point(qi);
        let dir = geom::normalize(geom::sub(p, q)).unwrap_or([1.0, 0.0, 0.0]);
        let reach = d.min(self.shell);
        for k in 0..25 {
            let r = (reach * (1.0 - 1e-7 * f64::from(1u32 << k))).max(0.0);
            let c = round_f32(geom::add(q, geom::scale(dir, r)));
            if self.nearest_distance(c) <= self.shell {
                return c;
            }
        }
        round_f32(q)
    }
}

/// Standalone repair against `target`.
pub fn repair<R: Rng + ?Sized>(points: &PointCloud, target: &PointCloud, shell: f64, rng: &mut R) -> Result<PointCloud> {
    let index = NearestIndex::new(target)?;
    Ok(Repairer::new(target, &index, shell).repair(points, rng))
}

/// Repairs decoded chromosome contents and re-encodes them.
pub fn individual_from_chromosome<R: Rng + ?Sized>(
    chromosome: &Chromosome,
    n0: usize,
    repairer: &Repairer<'_>,
    rng: &mut R,
) -> Result<Individual> {
    let decoded = decode(chromosome, n0)?;
    Individual::from_points(repairer.repair(&decoded.cloud, rng))
}

/// `n` unevaluated individuals: `n0` target points sampled uniformly, each
/// offset by `N(0, sigma^2)` per coordinate, then repaired.
pub fn init_population<R: Rng + ?Sized>(
    target: &PointCloud,
    config: &AttackConfig,
    repairer: &Repairer<'_>,
    rng: &mut R,
) -> Result<Vec<Individual>> {
    let normal = Normal::new(0.0, config.sigma).map_err(|e| crate::Error::Config(e.to_string()))?;
    (0..config.population)
        .map(|_| {
            let raw: PointCloud = (0..config.n0)
                .map(|_| {
                    let base = target.points[rng.random_range(0..target.len())];
                    let mut jitter = || if config.sigma > 0.0 { normal.sample(rng) } else { 0.0 };
                    Point3::new(base.x + jitter(), base.y + jitter(), base.z + jitter())
                })
                .collect();
            Individual::from_points(repairer.repair(&raw, rng))
        })
        .collect()
}
