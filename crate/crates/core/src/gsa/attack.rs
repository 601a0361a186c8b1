use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::anneal::{anneal, Schedule};
use super::config::AttackConfig;
use super::fitness::Evaluator;
use super::operators::{adaptive_pc, adaptive_pm, crossover, elite_update, mutate, roulette_select, FITNESS_FLOOR};
use super::population::{best_index, init_population, rank_cmp, Individual, Repairer};
use crate::error::{Error, Result};
use crate::oracle::{Detector, OracleVerdict, VerdictCase};
use crate::pointcloud::PointCloud;
use crate::scene::Scene;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StopReason {
    /// All generations ran.
    Completed,
    /// Cooling finished and the best individual stayed successful long enough.
    EarlyStop,
    BudgetExhausted,
    /// The oracle failed mid-run; everything up to the failure is kept.
    OracleError { message: String },
}

/// Population statistics after one generation (generation 0 is the initial
/// population).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub best_case: VerdictCase,
    pub best_success: bool,
    pub temperature: f64,
    pub oracle_calls: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackResult {
    pub seed: u64,
    pub success: bool,
    pub verdict: OracleVerdict,
    pub fitness: f64,
    pub d1: f64,
    pub d2: f64,
    /// Perturbation points of the best individual.
    pub best_points: PointCloud,
    pub chromosome_hex: String,
    /// Simulated returns from the best perturbation object.
    pub scanned: PointCloud,
    /// Per-generation statistics; entry 0 is the initial population.
    pub trace: Vec<GenerationStats>,
    pub oracle_calls: u64,
    pub generations_run: usize,
    pub anneal_steps: usize,
    pub stop_reason: StopReason,
    /// Not serialized so that result files stay reproducible.
    #[serde(skip)]
    pub wall_time: Duration,
}

impl AttackResult {
    /// Scene cloud with the perturbation returns appended.
    pub fn adversarial_cloud(&self, scene: &Scene) -> PointCloud {
        scene.cloud().merged(&self.scanned)
    }
}

fn stop_for(e: Error) -> Result<StopReason> {
    match e {
        Error::BudgetExhausted { .. } => Ok(StopReason::BudgetExhausted),
        e if e.is_oracle_failure() => Ok(StopReason::OracleError { message: e.to_string() }),
        e => Err(e),
    }
}

fn stats(generation: usize, pop: &[Individual], temp: f64, calls: u64) -> Option<GenerationStats> {
    let best = &pop[best_index(pop)?];
    let eval = best.eval.as_ref()?;
    let evaluated: Vec<f64> = pop.iter().filter(|i| i.eval.is_some()).map(|i| i.fitness()).collect();
    Some(GenerationStats {
        generation,
        best_fitness: eval.fitness,
        mean_fitness: evaluated.iter().sum::<f64>() / evaluated.len() as f64,
        best_case: eval.verdict.case,
        best_success: best.is_success(),
        temperature: temp,
        oracle_calls: calls,
    })
}

fn consider(best: &mut Option<Individual>, cands: &[Individual]) {
    for c in cands.iter().filter(|c| c.eval.is_some()) {
        if best.as_ref().is_none_or(|b| rank_cmp(c, b).is_gt()) {
            *best = Some(c.clone());
        }
    }
}

/// Runs the hybrid genetic / annealing search against `oracle` and returns
/// the highest-ranked individual found.
///
/// Errors are returned only when nothing could be evaluated at all; later
/// budget or oracle failures end the run early and are reported through
/// [`AttackResult::stop_reason`].
pub fn run_attack(scene: &Scene, oracle: &dyn Detector, config: &AttackConfig) -> Result<AttackResult> {
    config.validate()?;
    scene.validate()?;
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let evaluator = Evaluator::new(scene, oracle, config)?;
    let repairer = Repairer::new(&scene.target, evaluator.target_index(), config.shell_distance);
    let mut schedule = Schedule::new(config.temp0, config.lambda, config.temp_min);

    let mut pop = init_population(&scene.target, config, &repairer, &mut rng)?;
    let mut stop = None;
    if let Err(e) = evaluator.evaluate_batch(&mut pop) {
        pop.retain(|i| i.eval.is_some());
        if pop.is_empty() {
            return Err(e);
        }
        stop = Some(stop_for(e)?);
    }
    let mut best = None;
    consider(&mut best, &pop);
    let mut trace: Vec<GenerationStats> = stats(0, &pop, schedule.temperature(), evaluator.calls())
        .into_iter()
        .collect();

    let n = config.population;
    let mut generation = 0;
    let mut credit = 0usize;
    let mut streak = usize::from(best.as_ref().is_some_and(Individual::is_success));

    while stop.is_none() && generation < config.generations {
        generation += 1;
        let fit: Vec<f64> = pop.iter().map(|i| i.fitness().max(FITNESS_FLOOR)).collect();
        let f_max = fit.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let f_avg = fit.iter().sum::<f64>() / fit.len() as f64;

        let mut offspring = Vec::with_capacity(n + 1);
        while offspring.len() < n {
            let i = roulette_select(&fit, &mut rng)?;
            let j = roulette_select(&fit, &mut rng)?;
            let pc = adaptive_pc(fit[i].max(fit[j]), f_max, f_avg, config.k_c);
            let (a, b) = crossover(&pop[i], &pop[j], pc, &repairer, config.n0, &mut rng)?;
            for (child, f) in [(a, fit[i]), (b, fit[j])] {
                let pm = adaptive_pm(f, f_max, f_avg, config.k_m);
                offspring.push(mutate(child, pm, &repairer, config.n0, &mut rng)?);
            }
        }
        offspring.truncate(n);

        if let Err(e) = evaluator.evaluate_batch(&mut offspring) {
            consider(&mut best, &offspring);
            stop = Some(stop_for(e)?);
            break;
        }
        pop = elite_update(&pop, &offspring, config.elite_count)?;

        credit += config.anneal_steps;
        let due = (credit / config.generations).min(config.anneal_steps - schedule.steps_taken().min(config.anneal_steps));
        credit %= config.generations;
        if due > 0 && !schedule.is_frozen() {
            let bi = best_index(&pop).expect("non-empty population");
            match anneal(&pop[bi], &mut schedule, due, config.sigma_sa, &evaluator, &repairer, &mut rng) {
                Ok(a) => pop[bi] = a.best,
                Err(e) => stop = Some(stop_for(e)?),
            }
        }

        consider(&mut best, &pop);
        trace.extend(stats(generation, &pop, schedule.temperature(), evaluator.calls()));

        let success = best.as_ref().is_some_and(Individual::is_success);
        streak = if success { streak + 1 } else { 0 };
        let cooled = schedule.is_frozen() || schedule.steps_taken() >= config.anneal_steps;
        if stop.is_none() && cooled && success && streak >= config.patience {
            stop = Some(StopReason::EarlyStop);
        }
    }

    let best = best.expect("at least one evaluated individual");
    let eval = best.eval.clone().expect("evaluated");
    let scanned = evaluator.perturbation_scan(&best.points)?;
    Ok(AttackResult {
        seed: config.seed,
        success: eval.verdict.is_success(),
        verdict: eval.verdict,
        fitness: eval.fitness,
        d1: eval.d1,
        d2: eval.d2,
        chromosome_hex: best.chromosome.to_hex(),
        best_points: best.points,
        scanned,
        trace,
        oracle_calls: evaluator.calls(),
        generations_run: generation,
        anneal_steps: schedule.steps_taken(),
        stop_reason: stop.unwrap_or(StopReason::Completed),
        wall_time: started.elapsed(),
    })
}
