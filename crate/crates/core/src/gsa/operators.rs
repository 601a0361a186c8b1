use rand::seq::index;
use rand::Rng;

use super::chromosome::Chromosome;
use super::population::{individual_from_chromosome, ranked_indices, Individual, Repairer};
use crate::error::{Error, Result};

/// Lower bound applied to fitness values before roulette selection.
pub const FITNESS_FLOOR: f64 = 1e-9;

pub const MIN_MUTATION_FLIPS: usize = 2;
pub const MAX_MUTATION_FLIPS: usize = 6;

/// Fitness-proportional selection over cumulative intervals. Returns the
/// chosen index.
pub fn roulette_select<R: Rng + ?Sized>(fitness: &[f64], rng: &mut R) -> Result<usize> {
    if fitness.is_empty() {
        return Err(Error::arg("roulette selection needs a non-empty population"));
    }
    if let Some(f) = fitness.iter().find(|f| !f.is_finite() || **f < 0.0) {
        return Err(Error::Numeric(format!("fitness {f} is not a finite non-negative value")));
    }
    let total: f64 = fitness.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::Numeric(format!("total fitness {total} is not positive")));
    }
    let r = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &f) in fitness.iter().enumerate() {
        if f > 0.0 {
            acc += f;
            last = i;
            if r < acc {
                return Ok(i);
            }
        }
    }
    // rounding left r at or past the final boundary
    Ok(last)
}

/// Relative gap below which `f_max` and `f_avg` count as equal: the mean of
/// identical values can miss them by an ulp.
const DEGENERATE_GAP: f64 = 1e-12;

fn adaptive(f: f64, f_max: f64, f_avg: f64, k: f64) -> f64 {
    if f < f_avg || f_max - f_avg <= DEGENERATE_GAP * f_max.abs().max(f64::MIN_POSITIVE) {
        return k;
    }
    (k * ((f_max - f) / (f_max - f_avg))).clamp(0.0, k)
}

/// Adaptive crossover rate for a pair whose larger fitness is `f_prime`.
pub fn adaptive_pc(f_prime: f64, f_max: f64, f_avg: f64, k_c: f64) -> f64 {
    adaptive(f_prime, f_max, f_avg, k_c)
}

/// Adaptive mutation rate for an individual of fitness `f`.
pub fn adaptive_pm(f: f64, f_max: f64, f_avg: f64, k_m: f64) -> f64 {
    adaptive(f, f_max, f_avg, k_m)
}

/// Single-point crossover on raw bitstrings. With probability `pc` a cut in
/// `[1, L-1]` is drawn and suffixes from bit `cut` on are swapped; the cut is
/// returned so callers can check the construction.
pub fn crossover_chromosomes<R: Rng + ?Sized>(
    a: &Chromosome,
    b: &Chromosome,
    pc: f64,
    rng: &mut R,
) -> Result<(Chromosome, Chromosome, Option<usize>)> {
    if a.len() != b.len() {
        return Err(Error::arg(format!(
            "chromosome lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let l = a.len();
    if l < 2 || !rng.random_bool(pc.clamp(0.0, 1.0)) {
        return Ok((a.clone(), b.clone(), None));
    }
    let cut = rng.random_range(1..l);
    Ok((a.splice(b, cut), b.splice(a, cut), Some(cut)))
}

/// Flips between two and six distinct bits; returns the flipped positions.
pub fn mutate_chromosome<R: Rng + ?Sized>(c: &mut Chromosome, rng: &mut R) -> Vec<usize> {
    let l = c.len();
    let k = rng.random_range(MIN_MUTATION_FLIPS..=MAX_MUTATION_FLIPS).min(l);
    let mut pos = index::sample(rng, l, k).into_vec();
    pos.sort_unstable();
    for &p in &pos {
        c.flip(p);
    }
    pos
}

/// Crossover on individuals. Children identical to a parent come back as that
/// parent (cached evaluation included); new ones are repaired and unevaluated.
pub fn crossover<R: Rng + ?Sized>(
    a: &Individual,
    b: &Individual,
    pc: f64,
    repairer: &Repairer<'_>,
    n0: usize,
    rng: &mut R,
) -> Result<(Individual, Individual)> {
    let (ca, cb, _) = crossover_chromosomes(&a.chromosome, &b.chromosome, pc, rng)?;
    let mut child = |c: Chromosome| -> Result<Individual> {
        // a child equal to a parent keeps the parent's evaluation
        match [a, b].into_iter().find(|p| p.chromosome == c) {
            Some(p) => Ok(p.clone()),
            None => individual_from_chromosome(&c, n0, repairer, rng),
        }
    };
    Ok((child(ca)?, child(cb)?))
}

/// Multipoint mutation with probability `pm`, followed by repair.
pub fn mutate<R: Rng + ?Sized>(
    ind: Individual,
    pm: f64,
    repairer: &Repairer<'_>,
    n0: usize,
    rng: &mut R,
) -> Result<Individual> {
    if !rng.random_bool(pm.clamp(0.0, 1.0)) {
        return Ok(ind);
    }
    let mut c = ind.chromosome;
    mutate_chromosome(&mut c, rng);
    individual_from_chromosome(&c, n0, repairer, rng)
}

/// Best `elite_count` parents followed by the best remaining offspring, so the
/// result has the size of `parents`.
pub fn elite_update(parents: &[Individual], offspring: &[Individual], elite_count: usize) -> Result<Vec<Individual>> {
    let n = parents.len();
    if elite_count >= n {
        return Err(Error::arg("elite count must be smaller than the population"));
    }
    if offspring.len() < n - elite_count {
        return Err(Error::arg("not enough offspring to refill the population"));
    }
    let mut next: Vec<Individual> = ranked_indices(parents)
        .into_iter()
        .take(elite_count)
        .map(|i| parents[i].clone())
        .collect();
    next.extend(
        ranked_indices(offspring)
            .into_iter()
            .take(n - elite_count)
            .map(|i| offspring[i].clone()),
    );
    Ok(next)
}
