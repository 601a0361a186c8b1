use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::fitness::Evaluator;
use super::population::{rank_cmp, Individual, Repairer};
use crate::error::{Error, Result};
use crate::pointcloud::{Point3, PointCloud};

/// Geometric cooling `temp0 * lambda^k`, where `k` counts completed steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub temp0: f64,
    pub lambda: f64,
    pub temp_min: f64,
    step: i32,
}

impl Schedule {
    pub fn new(temp0: f64, lambda: f64, temp_min: f64) -> Self {
        Self {
            temp0,
            lambda,
            temp_min,
            step: 0,
        }
    }

    pub fn steps_taken(&self) -> usize {
        self.step as usize
    }

    pub fn temperature(&self) -> f64 {
        Self::temperature_at(self.temp0, self.lambda, self.step)
    }

    pub fn temperature_at(temp0: f64, lambda: f64, k: i32) -> f64 {
        temp0 * lambda.powi(k)
    }

    pub fn is_frozen(&self) -> bool {
        self.temperature() <= self.temp_min
    }

    pub fn cool(&mut self) {
        self.step += 1;
    }

    /// Number of steps taken before the temperature first drops to the floor.
    pub fn steps_to_floor(&self) -> usize {
        let mut s = Schedule::new(self.temp0, self.lambda, self.temp_min);
        while !s.is_frozen() {
            s.cool();
        }
        s.steps_taken()
    }
}

/// Metropolis rule: improvements and ties always pass, a loss `df < 0` passes
/// with probability `exp(df / temp)`.
pub fn acceptance_probability(df: f64, temp: f64) -> f64 {
    if df >= 0.0 {
        1.0
    } else {
        (df / temp).exp()
    }
}

pub fn metropolis_accept<R: Rng + ?Sized>(df: f64, temp: f64, rng: &mut R) -> bool {
    df >= 0.0 || rng.random::<f64>() < acceptance_probability(df, temp)
}

/// Gaussian proposal around `points`, repaired back into the shell.
pub fn propose<R: Rng + ?Sized>(
    points: &PointCloud,
    sigma: f64,
    repairer: &Repairer<'_>,
    rng: &mut R,
) -> Result<Individual> {
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::Config(e.to_string()))?;
    let moved: PointCloud = points
        .iter()
        .map(|p| {
            let mut d = || normal.sample(rng);
            Point3::new(p.x + d(), p.y + d(), p.z + d())
        })
        .collect();
    Individual::from_points(repairer.repair(&moved, rng))
}

/// Outcome of one annealing episode.
#[derive(Debug, Clone)]
pub struct Annealed {
    /// Best individual seen, ranked like elites (the input counts).
    pub best: Individual,
    /// Individual the chain ended on.
    pub current: Individual,
    pub steps: usize,
}

/// Runs up to `steps` annealing steps from the evaluated `start`, cooling the
/// shared schedule once per step and stopping early at the floor. Budget and
/// oracle errors propagate after the schedule has been advanced for every
/// completed step.
pub fn anneal<R: Rng + ?Sized>(
    start: &Individual,
    schedule: &mut Schedule,
    steps: usize,
    sigma_sa: f64,
    evaluator: &Evaluator<'_>,
    repairer: &Repairer<'_>,
    rng: &mut R,
) -> Result<Annealed> {
    let mut current = start.clone();
    let mut best = start.clone();
    let mut done = 0;
    while done < steps && !schedule.is_frozen() {
        let temp = schedule.temperature();
        let mut cand = propose(&current.points, sigma_sa, repairer, rng)?;
        evaluator.evaluate(&mut cand)?;
        let df = cand.fitness() - current.fitness();
        if metropolis_accept(df, temp, rng) {
            current = cand;
            if rank_cmp(&current, &best).is_gt() {
                best = current.clone();
            }
        }
        schedule.cool();
        done += 1;
    }
    Ok(Annealed {
        best,
        current,
        steps: done,
    })
}
