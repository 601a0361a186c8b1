//! Hybrid genetic algorithm with simulated annealing over binary-encoded
//! perturbation points.

mod anneal;
mod attack;
mod chromosome;
mod config;
mod fitness;
mod operators;
mod population;

pub use anneal::{acceptance_probability, anneal, metropolis_accept, propose, Annealed, Schedule};
pub use attack::{run_attack, AttackResult, GenerationStats, StopReason};
pub use chromosome::{decode, encode, Chromosome, Decoded, BITS_PER_COORD, BITS_PER_POINT};
pub use config::AttackConfig;
pub use fitness::{fitness_value, Evaluator, FitnessWeights};
pub use operators::{
    adaptive_pc, adaptive_pm, crossover, crossover_chromosomes, elite_update, mutate, mutate_chromosome,
    roulette_select, FITNESS_FLOOR, MAX_MUTATION_FLIPS, MIN_MUTATION_FLIPS,
};
pub use population::{
    best_index, individual_from_chromosome, init_population, rank_cmp, ranked_indices, repair, Evaluation,
    Individual, Repairer,
};
