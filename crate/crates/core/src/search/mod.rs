//! Policy-space search: randomized first-improvement local search,
//! simulated annealing on top of it, and a genetic algorithm.
//!
//! Every search is driven by a ChaCha8 generator seeded from a `u64`, so a
//! run is reproducible on any platform from `(instance, k, H, seed, config)`.

mod anneal;
mod genetic;
mod local;

pub use anneal::{simulated_annealing, SaConfig};
pub use genetic::{crossover, fitness_transform, genetic_search, mutate, population_size, FitnessTransform, GaConfig};
pub use local::local_search;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::eval::{EvalCounter, Evaluator};
use crate::model::Pomdp;
use crate::policy::{Decision, FiniteMemoryPolicy};

/// The generator behind every seeded search.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// What one search iteration did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Step {
    /// Moved to the first strictly better neighbor in the wrapped scan.
    Improve { neighbor: usize, value: f64 },
    /// Annealing jump to a uniformly drawn neighbor.
    Jump { neighbor: usize, value: f64 },
    /// A full scan found nothing better while the temperature was positive.
    Stay,
    /// A full scan found nothing better; the search stops.
    Converged,
    /// Best value of one genetic-algorithm generation.
    Generation { best_value: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub best_policy: FiniteMemoryPolicy,
    pub best_value: f64,
    pub evaluations: u64,
    pub iterations: u64,
    pub seed: u64,
    pub trace: Vec<Step>,
}

/// Uniform random policy: each cell independently uniform over the
/// `|A| * k` decisions.
pub fn random_policy<R: Rng + ?Sized>(
    num_observations: usize,
    num_actions: usize,
    memory_count: usize,
    rng: &mut R,
) -> FiniteMemoryPolicy {
    let pairs = num_actions * memory_count;
    let cells = (0..num_observations * memory_count)
        .map(|_| Decision::from_pair_index(rng.gen_range(0..pairs), memory_count))
        .collect();
    FiniteMemoryPolicy::new(num_observations, memory_count, cells).expect("dimensions are positive")
}

/// Single-cell neighborhood in a fixed lexicographic order.
///
/// Neighbor `i` changes cell `i / (|A|k - 1)` (cells in o-major, m-minor
/// order) to the `i % (|A|k - 1)`-th decision in (a, m') order, skipping
/// the cell's current decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Neighborhood {
    pub num_observations: usize,
    pub num_actions: usize,
    pub memory_count: usize,
}

impl Neighborhood {
    pub fn new(num_observations: usize, num_actions: usize, memory_count: usize) -> Self {
        Neighborhood { num_observations, num_actions, memory_count }
    }

    pub fn for_policy(policy: &FiniteMemoryPolicy, num_actions: usize) -> Self {
        Self::new(policy.num_observations(), num_actions, policy.memory_count())
    }

    pub fn count(&self) -> usize {
        neighbor_count(self.num_observations, self.num_actions, self.memory_count)
    }

    /// Cell index and replacement decision of neighbor `index`.
    pub fn change(&self, policy: &FiniteMemoryPolicy, index: usize) -> (usize, Decision) {
        let per_cell = self.num_actions * self.memory_count - 1;
        let cell = index / per_cell;
        let offset = index % per_cell;
        let current = policy.cell(cell).pair_index(self.memory_count);
        let pair = if offset < current { offset } else { offset + 1 };
        (cell, Decision::from_pair_index(pair, self.memory_count))
    }

    pub fn at(&self, policy: &FiniteMemoryPolicy, index: usize) -> Result<FiniteMemoryPolicy> {
        let count = self.count();
        if index >= count {
            return Err(Error::IndexOutOfRange { index, limit: count });
        }
        let mut out = policy.clone();
        let (cell, decision) = self.change(policy, index);
        out.set_cell(cell, decision);
        Ok(out)
    }

    /// Applies neighbor `index` in place and returns the undo information.
    fn apply(&self, policy: &mut FiniteMemoryPolicy, index: usize) -> (usize, Decision) {
        let (cell, decision) = self.change(policy, index);
        let old = policy.cell(cell);
        policy.cells_mut()[cell] = decision;
        (cell, old)
    }
}

pub fn neighbor_count(num_observations: usize, num_actions: usize, memory_count: usize) -> usize {
    num_observations * memory_count * (num_actions * memory_count - 1)
}

/// Neighbor `index` of `policy` for a POMDP with `num_actions` actions.
pub fn neighbor_at(policy: &FiniteMemoryPolicy, num_actions: usize, index: usize) -> Result<FiniteMemoryPolicy> {
    Neighborhood::for_policy(policy, num_actions).at(policy, index)
}

pub(crate) fn check_search_args(pomdp: &Pomdp, memory_count: usize, horizon: usize) -> Result<()> {
    if memory_count == 0 {
        return Err(Error::ZeroMemory);
    }
    if horizon == 0 {
        return Err(Error::Config("horizon must be at least 1".into()));
    }
    if pomdp.num_actions() == 0 || pomdp.num_observations() == 0 {
        return Err(Error::Config("POMDP has no actions or observations".into()));
    }
    Ok(())
}

/// Current point of a single-trajectory search plus the best policy seen.
pub(crate) struct Climber<'a> {
    pub eval: Evaluator<'a>,
    pub hood: Neighborhood,
    pub current: FiniteMemoryPolicy,
    pub current_value: f64,
    pub best: FiniteMemoryPolicy,
    pub best_value: f64,
}

impl<'a> Climber<'a> {
    pub fn start<R: Rng + ?Sized>(pomdp: &'a Pomdp, memory_count: usize, horizon: usize, rng: &mut R) -> Self {
        let mut eval = Evaluator::new(pomdp, horizon);
        let current = random_policy(pomdp.num_observations(), pomdp.num_actions(), memory_count, rng);
        let current_value = eval.value(&current);
        Climber {
            eval,
            hood: Neighborhood::new(pomdp.num_observations(), pomdp.num_actions(), memory_count),
            best: current.clone(),
            best_value: current_value,
            current,
            current_value,
        }
    }

    fn observe_current(&mut self) {
        if self.current_value > self.best_value {
            self.best_value = self.current_value;
            self.best.clone_from(&self.current);
        }
    }

    /// One randomized-first-improvement step: scan all neighbors from a
    /// uniformly drawn origin, wrapping around, and take the first strictly
    /// better one.
    pub fn improve<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<Step> {
        let n = self.hood.count();
        if n == 0 {
            return None;
        }
        let origin = rng.gen_range(0..n);
        for offset in 0..n {
            let index = (origin + offset) % n;
            let (cell, old) = self.hood.apply(&mut self.current, index);
            let value = self.eval.value(&self.current);
            if value > self.current_value {
                self.current_value = value;
                self.observe_current();
                return Some(Step::Improve { neighbor: index, value });
            }
            self.current.cells_mut()[cell] = old;
        }
        None
    }

    /// Unconditional move to a uniformly drawn neighbor.
    pub fn jump<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<Step> {
        let n = self.hood.count();
        if n == 0 {
            return None;
        }
        let index = rng.gen_range(0..n);
        self.hood.apply(&mut self.current, index);
        self.current_value = self.eval.value(&self.current);
        self.observe_current();
        Some(Step::Jump { neighbor: index, value: self.current_value })
    }

    pub fn finish(self, iterations: u64, seed: u64, trace: Vec<Step>, counter: &EvalCounter) -> SearchResult {
        let evaluations = self.eval.evaluations();
        counter.add(evaluations);
        SearchResult {
            best_policy: self.best,
            best_value: self.best_value,
            evaluations,
            iterations,
            seed,
            trace,
        }
    }
}

/// A search algorithm with its configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum Algorithm {
    Local,
    Anneal(SaConfig),
    Genetic(GaConfig),
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Local => "local",
            Algorithm::Anneal(_) => "anneal",
            Algorithm::Genetic(_) => "genetic",
        }
    }

    /// Default-configured algorithm by name (`local`, `anneal`, `genetic`).
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "local" => Some(Algorithm::Local),
            "anneal" => Some(Algorithm::Anneal(SaConfig::default())),
            "genetic" => Some(Algorithm::Genetic(GaConfig::default())),
            _ => None,
        }
    }

    pub fn run(
        &self,
        pomdp: &Pomdp,
        memory_count: usize,
        horizon: usize,
        seed: u64,
        counter: &EvalCounter,
    ) -> Result<SearchResult> {
        match self {
            Algorithm::Local => local_search(pomdp, memory_count, horizon, seed, counter),
            Algorithm::Anneal(cfg) => simulated_annealing(pomdp, memory_count, horizon, seed, cfg, counter),
            Algorithm::Genetic(cfg) => genetic_search(pomdp, memory_count, horizon, seed, cfg, counter),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neighbor_counts() {
        assert_eq!(neighbor_count(2, 2, 1), 2);
        assert_eq!(neighbor_count(2, 2, 2), 12);
        assert_eq!(neighbor_count(3, 1, 1), 0);
    }

    #[test]
    fn neighbors_are_ordered_and_single_cell() {
        let mut rng = rng_from_seed(3);
        let pi = random_policy(2, 3, 2, &mut rng);
        let hood = Neighborhood::for_policy(&pi, 3);
        let mut seen = std::collections::HashSet::new();
        for i in 0..hood.count() {
            let n = hood.at(&pi, i).unwrap();
            let diff: Vec<usize> = (0..pi.num_cells()).filter(|&c| pi.cell(c) != n.cell(c)).collect();
            assert_eq!(diff.len(), 1);
            assert_eq!(diff[0], i / 5);
            assert!(seen.insert(n));
        }
        assert!(hood.at(&pi, hood.count()).is_err());
    }

    #[test]
    fn within_cell_order_skips_current() {
        let pi = FiniteMemoryPolicy::uniform(1, 2, Decision::new(1, 0)).unwrap();
        let hood = Neighborhood::for_policy(&pi, 2);
        // Cell 0 is currently pair 2 = (1, 0).
        let pairs: Vec<Decision> = (0..3).map(|i| hood.change(&pi, i).1).collect();
        assert_eq!(pairs, vec![Decision::new(0, 0), Decision::new(0, 1), Decision::new(1, 1)]);
    }

    #[test]
    fn random_policy_singleton_and_determinism() {
        let mut rng = rng_from_seed(1);
        let p = random_policy(4, 1, 1, &mut rng);
        assert!(p.cells().iter().all(|d| *d == Decision::new(0, 0)));
        let a = random_policy(3, 4, 3, &mut rng_from_seed(99));
        let b = random_policy(3, 4, 3, &mut rng_from_seed(99));
        assert_eq!(a, b);
    }

    #[test]
    fn random_policy_cells_are_uniform() {
        // 12 decisions per cell, 10^4 draws of cell 0; chi-square at alpha = 0.01.
        // Upper 1% point of chi-square with 11 degrees of freedom.
        const CRITICAL: f64 = 24.725;
        let (na, k) = (3, 4);
        let mut counts = vec![0u32; na * k];
        let mut rng = rng_from_seed(2024);
        let draws = 10_000;
        for _ in 0..draws {
            let p = random_policy(1, na, k, &mut rng);
            counts[p.cell(0).pair_index(k)] += 1;
        }
        let expected = draws as f64 / counts.len() as f64;
        let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        assert_eq!(counts.len() - 1, 11);
        assert!(stat < CRITICAL, "chi2 {stat} >= {CRITICAL}");
    }
}
