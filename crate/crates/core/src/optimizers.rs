//! Black-box discrete optimizers used by the attacks.
//!
//! Both searches are deterministic under their budget seed, never evaluate a
//! distinct candidate twice (fitness is cached by candidate key), and never
//! exceed `max_objective_calls`. They return the best candidate seen, which
//! on exhausted budgets is simply the best so far.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Search budget shared by both optimizers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchBudget {
    pub population_size: usize,
    pub iterations: usize,
    pub seed: u64,
    pub max_objective_calls: usize,
}

impl SearchBudget {
    pub fn new(population_size: usize, iterations: usize, seed: u64, max_objective_calls: usize) -> Self {
        SearchBudget { population_size, iterations, seed, max_objective_calls }
    }
}

/// Result of one search run.
#[derive(Debug, Clone)]
pub struct SearchOutcome<S> {
    pub best: S,
    /// Fitness (GA, maximized) or objective (DE, minimized) of `best`.
    pub best_value: f64,
    pub objective_calls: usize,
}

/// Candidate state for the genetic search. Crossover semantics belong to the
/// state representation; the substitution-map states used by the attacks mix
/// per position uniformly.
pub trait GeneticState: Clone {
    fn crossover(&self, other: &Self, rng: &mut ChaCha8Rng) -> Self;
    /// Key for fitness caching; distinct decoded candidates get distinct keys.
    fn cache_key(&self) -> String;
}

/// Population search maximizing `fitness`. Selection is fitness-softmax,
/// children are crossovers of sampled parents mutated through `neighbors`,
/// and the best state seen is always returned (ties keep the earliest, so a
/// constant fitness returns `initial`). Stops early once `target` is reached.
pub fn genetic_search<S, N, F>(
    initial: S,
    mut neighbors: N,
    mut fitness: F,
    budget: &SearchBudget,
    target: Option<f64>,
) -> SearchOutcome<S>
where
    S: GeneticState,
    N: FnMut(&S) -> Vec<S>,
    F: FnMut(&S) -> f64,
{
    fn evaluate<S: GeneticState, F: FnMut(&S) -> f64>(
        state: &S,
        fitness: &mut F,
        cache: &mut HashMap<String, f64>,
        calls: &mut usize,
        max_calls: usize,
    ) -> Option<f64> {
        let key = state.cache_key();
        if let Some(&v) = cache.get(&key) {
            return Some(v);
        }
        if *calls >= max_calls {
            return None;
        }
        *calls += 1;
        let v = fitness(state);
        cache.insert(key, v);
        Some(v)
    }

    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let mut total_calls = 0usize;
    let mut cache: HashMap<String, f64> = HashMap::new();
    let max_calls = budget.max_objective_calls;

    let mut best = initial.clone();
    let mut best_value =
        match evaluate(&initial, &mut fitness, &mut cache, &mut total_calls, max_calls) {
            Some(v) => v,
            None => {
                return SearchOutcome { best, best_value: f64::NEG_INFINITY, objective_calls: total_calls }
            }
        };
    if target.is_some_and(|t| best_value >= t) {
        return SearchOutcome { best, best_value, objective_calls: total_calls };
    }

    let seed_neighbors = neighbors(&initial);
    if seed_neighbors.is_empty() {
        return SearchOutcome { best, best_value, objective_calls: total_calls };
    }
    let mut population: Vec<S> = Vec::with_capacity(budget.population_size);
    population.push(initial.clone());
    for i in 0..budget.population_size.saturating_sub(1) {
        population.push(seed_neighbors[i % seed_neighbors.len()].clone());
    }

    'generations: for _ in 0..budget.iterations {
        let mut fitnesses: Vec<f64> = Vec::with_capacity(population.len());
        for member in &population {
            let Some(v) = evaluate(member, &mut fitness, &mut cache, &mut total_calls, max_calls)
            else {
                break 'generations;
            };
            if v > best_value {
                best_value = v;
                best = member.clone();
            }
            fitnesses.push(v);
        }
        if target.is_some_and(|t| best_value >= t) {
            break;
        }

        // Softmax selection weights, temperature 1.
        let max_f = fitnesses.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = fitnesses.iter().map(|f| (f - max_f).exp()).collect();
        let total_w: f64 = weights.iter().sum();
        let sample = |rng: &mut ChaCha8Rng| -> usize {
            let mut r = rng.gen::<f64>() * total_w;
            for (i, w) in weights.iter().enumerate() {
                r -= w;
                if r <= 0.0 {
                    return i;
                }
            }
            weights.len() - 1
        };

        let mut next: Vec<S> = Vec::with_capacity(population.len());
        next.push(best.clone());
        while next.len() < budget.population_size {
            let a = &population[sample(&mut rng)];
            let b = &population[sample(&mut rng)];
            let mut child = a.crossover(b, &mut rng);
            let options = neighbors(&child);
            if !options.is_empty() {
                // Prefer a mutation we have not paid for yet.
                let mut picked = options[rng.gen_range(0..options.len())].clone();
                for _ in 0..8 {
                    if !cache.contains_key(&picked.cache_key()) {
                        break;
                    }
                    picked = options[rng.gen_range(0..options.len())].clone();
                }
                child = picked;
            }
            next.push(child);
        }
        population = next;
    }

    SearchOutcome { best, best_value, objective_calls: total_calls }
}

/// One character-level edit: which eligible position, which variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PerturbationGene {
    pub position: usize,
    pub choice: usize,
}

/// Fixed-length vector of edits, one gene per unit of the budget.
pub type PerturbationGenome = Vec<PerturbationGene>;

/// Discrete search space for a genome: `length` genes, each picking one of
/// the eligible positions and one of that position's choices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenomeSpace {
    pub length: usize,
    pub choice_counts: Vec<usize>,
}

impl GenomeSpace {
    pub fn new(length: usize, choice_counts: Vec<usize>) -> Result<Self> {
        if length == 0 {
            return Err(Error::Config("genome length must be at least 1".into()));
        }
        if choice_counts.is_empty() || choice_counts.iter().any(|&c| c == 0) {
            return Err(Error::Config("every position needs at least one choice".into()));
        }
        Ok(GenomeSpace { length, choice_counts })
    }

    fn decode(&self, vector: &[f64]) -> PerturbationGenome {
        let n_pos = self.choice_counts.len();
        (0..self.length)
            .map(|g| {
                let pos = vector[2 * g].round().clamp(0.0, (n_pos - 1) as f64) as usize;
                let max_choice = (self.choice_counts[pos] - 1) as f64;
                let choice = vector[2 * g + 1].round().clamp(0.0, max_choice) as usize;
                PerturbationGene { position: pos, choice }
            })
            .collect()
    }
}

fn genome_key(genome: &PerturbationGenome) -> String {
    genome.iter().map(|g| format!("{}:{}", g.position, g.choice)).collect::<Vec<_>>().join(",")
}

/// Default evolutionary budget for the character-level attacks.
pub const DEFAULT_DE_ITERATIONS: usize = 3;
pub const DEFAULT_DE_POPULATION: usize = 32;
pub const DE_MUTATION_FACTOR: f64 = 0.8;
pub const DE_CROSSOVER_RATE: f64 = 0.9;

/// Classic rand/1/bin differential evolution minimizing `objective` over a
/// continuous relaxation of the genome space (genes round to the nearest
/// valid integer on decoding). Returns the best genome among all evaluated.
pub fn differential_evolution<F>(
    space: &GenomeSpace,
    mut objective: F,
    budget: &SearchBudget,
) -> SearchOutcome<PerturbationGenome>
where
    F: FnMut(&PerturbationGenome) -> f64,
{
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let dim = 2 * space.length;
    let n_pos = space.choice_counts.len();
    let max_choice = *space.choice_counts.iter().max().unwrap();
    let pop_size = budget.population_size.max(4);

    let mut cache: HashMap<String, f64> = HashMap::new();
    let mut calls = 0usize;
    let mut best: Option<(PerturbationGenome, f64)> = None;
    let evaluate = |vector: &[f64],
                        objective: &mut F,
                        calls: &mut usize,
                        cache: &mut HashMap<String, f64>,
                        best: &mut Option<(PerturbationGenome, f64)>|
     -> Option<f64> {
        let genome = space.decode(vector);
        let key = genome_key(&genome);
        if let Some(&v) = cache.get(&key) {
            return Some(v);
        }
        if *calls >= budget.max_objective_calls {
            return None;
        }
        *calls += 1;
        let v = objective(&genome);
        cache.insert(key, v);
        match best {
            Some((_, b)) if v >= *b => {}
            _ => *best = Some((genome, v)),
        }
        Some(v)
    };

    let bound = |d: usize| -> f64 {
        if d % 2 == 0 {
            (n_pos - 1) as f64
        } else {
            (max_choice - 1) as f64
        }
    };

    // Initialize uniformly over decoded grid cells; sampling the continuous
    // box and rounding would give the boundary cells half the mass.
    let mut population: Vec<Vec<f64>> = (0..pop_size)
        .map(|_| (0..dim).map(|d| rng.gen_range(0..=bound(d) as usize) as f64).collect())
        .collect();
    let mut pop_values: Vec<f64> = Vec::with_capacity(pop_size);
    for member in &population {
        match evaluate(member, &mut objective, &mut calls, &mut cache, &mut best) {
            Some(v) => pop_values.push(v),
            None => break,
        }
    }

    if pop_values.len() == pop_size {
        'iterations: for _ in 0..budget.iterations {
            for i in 0..pop_size {
                let mut pick = || loop {
                    let j = rng.gen_range(0..pop_size);
                    if j != i {
                        return j;
                    }
                };
                let (a, b, c) = {
                    let a = pick();
                    let mut b = pick();
                    while b == a {
                        b = pick();
                    }
                    let mut c = pick();
                    while c == a || c == b {
                        c = pick();
                    }
                    (a, b, c)
                };
                let j_rand = rng.gen_range(0..dim);
                let mut trial = population[i].clone();
                for d in 0..dim {
                    if d == j_rand || rng.gen::<f64>() < DE_CROSSOVER_RATE {
                        let v = population[a][d]
                            + DE_MUTATION_FACTOR * (population[b][d] - population[c][d]);
                        trial[d] = v.clamp(0.0, bound(d));
                    }
                }
                let Some(trial_value) =
                    evaluate(&trial, &mut objective, &mut calls, &mut cache, &mut best)
                else {
                    break 'iterations;
                };
                if trial_value <= pop_values[i] {
                    population[i] = trial;
                    pop_values[i] = trial_value;
                }
            }
        }
    }

    match best {
        Some((genome, value)) => SearchOutcome { best: genome, best_value: value, objective_calls: calls },
        // Zero budget: decode the first member unevaluated.
        None => SearchOutcome {
            best: space.decode(&population[0]),
            best_value: f64::INFINITY,
            objective_calls: calls,
        },
    }
}
