//! Generational genetic algorithm over policy tables.
//!
//! A generation evaluates the whole population, checks for stagnation,
//! reshapes the values into fitnesses (outliers below `mean - 2 sd` are
//! dropped, those above `mean + 2 sd` are capped), refills the pool by
//! fitness-proportional sampling, then applies crossover and mutation.

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::eval::{EvalCounter, Evaluator};
use crate::model::Pomdp;
use crate::policy::{Decision, FiniteMemoryPolicy};

use super::{check_search_args, random_policy, rng_from_seed, SearchResult, Step};

#[derive(Debug, Clone, PartialEq)]
pub struct GaConfig {
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    /// Generations the same best policy may lead before the run stops.
    pub stagnation_limit: u32,
    /// Population value spread below which half the stagnation limit suffices.
    pub stdev_threshold: f64,
    pub population_override: Option<usize>,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            crossover_rate: 0.5,
            mutation_rate: 0.005,
            stagnation_limit: 10,
            stdev_threshold: 0.0001,
            population_override: None,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, rate) in [("crossover", self.crossover_rate), ("mutation", self.mutation_rate)] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::Config(format!("{name} rate {rate} outside [0, 1]")));
            }
        }
        if self.stagnation_limit < 2 {
            return Err(Error::Config("stagnation limit must be at least 2".into()));
        }
        if self.stdev_threshold.is_nan() || self.stdev_threshold <= 0.0 {
            return Err(Error::Config("stdev threshold must be positive".into()));
        }
        if self.population_override.is_some_and(|p| p < 2) {
            return Err(Error::Config("population must have at least 2 members".into()));
        }
        Ok(())
    }
}

/// `max(30, ceil(|O| * log2(|A| * k)))` unless overridden.
pub fn population_size(
    num_observations: usize,
    num_actions: usize,
    memory_count: usize,
    population_override: Option<usize>,
) -> usize {
    if let Some(p) = population_override {
        return p;
    }
    let scaled = (num_observations as f64 * ((num_actions * memory_count) as f64).log2()).ceil();
    (scaled as usize).max(30)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitnessTransform {
    pub mean: f64,
    pub stdev: f64,
    /// Values after capping at `mean + 2 sd`.
    pub clamped: Vec<f64>,
    /// Capped values shifted by `-(mean - 2 sd)`; 0 for discarded members.
    pub fitness: Vec<f64>,
    /// Members strictly below `mean - 2 sd`, ascending.
    pub discarded: Vec<usize>,
}

pub fn fitness_transform(values: &[f64]) -> Result<FitnessTransform> {
    if values.len() < 2 {
        return Err(Error::TooFewValues { needed: 2, got: values.len() });
    }
    let (mean, stdev) = mean_stdev(values);
    let lower = mean - 2.0 * stdev;
    let upper = mean + 2.0 * stdev;
    let mut discarded = Vec::new();
    let mut clamped = Vec::with_capacity(values.len());
    let mut fitness = Vec::with_capacity(values.len());
    for (i, &v) in values.iter().enumerate() {
        let c = v.min(upper);
        clamped.push(c);
        if v < lower {
            discarded.push(i);
            fitness.push(0.0);
        } else {
            fitness.push((c - lower).max(0.0));
        }
    }
    Ok(FitnessTransform { mean, stdev, clamped, fitness, discarded })
}

/// Population mean and standard deviation (divisor n).
fn mean_stdev(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Exchanges every decision except the one at `cell` between the parents.
///
/// This is extensionally the same as swapping only `cell`, but the
/// operation is carried out as stated: each child takes the other parent's
/// decisions before and after `cell` and keeps its own at `cell`.
pub fn crossover(
    parent_a: &FiniteMemoryPolicy,
    parent_b: &FiniteMemoryPolicy,
    cell: usize,
) -> Result<(FiniteMemoryPolicy, FiniteMemoryPolicy)> {
    if !parent_a.same_shape(parent_b) {
        return Err(Error::ShapeMismatch {
            left_obs: parent_a.num_observations(),
            left_mem: parent_a.memory_count(),
            right_obs: parent_b.num_observations(),
            right_mem: parent_b.memory_count(),
        });
    }
    if cell >= parent_a.num_cells() {
        return Err(Error::IndexOutOfRange { index: cell, limit: parent_a.num_cells() });
    }
    let mut child_a = parent_a.clone();
    let mut child_b = parent_b.clone();
    let (a, b) = (child_a.cells_mut(), child_b.cells_mut());
    a[..cell].swap_with_slice(&mut b[..cell]);
    a[cell + 1..].swap_with_slice(&mut b[cell + 1..]);
    Ok((child_a, child_b))
}

/// Reassigns one uniformly chosen cell to a different, uniformly chosen
/// decision. With a single possible decision the policy is returned as is.
pub fn mutate<R: Rng + ?Sized>(policy: &FiniteMemoryPolicy, num_actions: usize, rng: &mut R) -> FiniteMemoryPolicy {
    let mut out = policy.clone();
    mutate_in_place(&mut out, num_actions, rng);
    out
}

fn mutate_in_place<R: Rng + ?Sized>(policy: &mut FiniteMemoryPolicy, num_actions: usize, rng: &mut R) {
    let k = policy.memory_count();
    let pairs = num_actions * k;
    if pairs < 2 {
        log::warn!("mutation skipped: only one action/memory pair exists");
        return;
    }
    let cell = rng.gen_range(0..policy.num_cells());
    let current = policy.cell(cell).pair_index(k);
    let mut pair = rng.gen_range(0..pairs - 1);
    if pair >= current {
        pair += 1;
    }
    policy.cells_mut()[cell] = Decision::from_pair_index(pair, k);
}

pub fn genetic_search(
    pomdp: &Pomdp,
    memory_count: usize,
    horizon: usize,
    seed: u64,
    cfg: &GaConfig,
    counter: &EvalCounter,
) -> Result<SearchResult> {
    check_search_args(pomdp, memory_count, horizon)?;
    cfg.validate()?;
    let (no, na) = (pomdp.num_observations(), pomdp.num_actions());
    let size = population_size(no, na, memory_count, cfg.population_override);
    let mut rng = rng_from_seed(seed);
    let mut eval = Evaluator::new(pomdp, horizon);

    let mut population: Vec<FiniteMemoryPolicy> =
        (0..size).map(|_| random_policy(no, na, memory_count, &mut rng)).collect();
    let mut best: Option<(FiniteMemoryPolicy, f64)> = None;
    let mut leader: Option<FiniteMemoryPolicy> = None;
    let mut streak = 0u32;
    let mut trace = Vec::new();
    let mut generations = 0u64;
    let short_limit = cfg.stagnation_limit.div_ceil(2);
    let pairs = ((size as f64 * cfg.crossover_rate).floor() as usize).min(size / 2);
    let mutations = if cfg.mutation_rate > 0.0 && na * memory_count >= 2 {
        ((size as f64 * cfg.mutation_rate).ceil() as usize).clamp(1, size)
    } else {
        0
    };

    loop {
        generations += 1;
        let values: Vec<f64> = population.iter().map(|p| eval.value(p)).collect();

        // Lowest index wins ties.
        let mut top = 0;
        for (i, &v) in values.iter().enumerate().skip(1) {
            if v > values[top] {
                top = i;
            }
        }
        if best.as_ref().is_none_or(|(_, v)| values[top] > *v) {
            best = Some((population[top].clone(), values[top]));
        }
        if leader.as_ref() == Some(&population[top]) {
            streak += 1;
        } else {
            leader = Some(population[top].clone());
            streak = 1;
        }
        trace.push(Step::Generation { best_value: values[top] });

        let transform = fitness_transform(&values)?;
        if streak >= cfg.stagnation_limit || (streak >= short_limit && transform.stdev < cfg.stdev_threshold) {
            break;
        }

        let mut survivors: Vec<usize> = (0..size).filter(|i| transform.discarded.binary_search(i).is_err()).collect();
        if survivors.is_empty() {
            log::warn!("every policy fell below the fitness cutoff; selecting from the whole population");
            survivors = (0..size).collect();
        }
        let weights: Vec<f64> = survivors.iter().map(|&i| transform.fitness[i]).collect();
        let mut pool: Vec<FiniteMemoryPolicy> = match WeightedIndex::new(&weights) {
            Ok(dist) => (0..size).map(|_| population[survivors[dist.sample(&mut rng)]].clone()).collect(),
            // All fitnesses zero: every survivor is equally fit.
            Err(_) => (0..size)
                .map(|_| population[survivors[rng.gen_range(0..survivors.len())]].clone())
                .collect(),
        };

        let mut order: Vec<usize> = (0..size).collect();
        order.shuffle(&mut rng);
        for pair in order.chunks_exact(2).take(pairs) {
            let cell = rng.gen_range(0..pool[pair[0]].num_cells());
            let (a, b) = crossover(&pool[pair[0]], &pool[pair[1]], cell)?;
            pool[pair[0]] = a;
            pool[pair[1]] = b;
        }

        for i in rand::seq::index::sample(&mut rng, size, mutations) {
            mutate_in_place(&mut pool[i], na, &mut rng);
        }
        population = pool;
    }

    let evaluations = eval.evaluations();
    counter.add(evaluations);
    let (best_policy, best_value) = best.expect("at least one generation");
    Ok(SearchResult { best_policy, best_value, evaluations, iterations: generations, seed, trace })
}
