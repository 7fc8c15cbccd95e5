//! Finite-horizon, undiscounted total-reward evaluation.
//!
//! The exact route runs backward induction on the state x memory product:
//!
//! ```text
//! V_0(s, m) = 0
//! V_j(s, m) = r[s][a] + sum_{s'} t[s][a][s'] * V_{j-1}(s', m'),  (a, m') = pi(o(s), m)
//! value     = sum_s b0[s] * V_H(s, 0)
//! ```
//!
//! `simulate` samples trajectories and is the independent check on it.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::Pomdp;
use crate::policy::FiniteMemoryPolicy;

/// Number of exact evaluations performed. Safe to share between threads.
#[derive(Debug, Default)]
pub struct EvalCounter(AtomicU64);

impl EvalCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }

    pub fn add(&self, n: u64) {
        self.0.fetch_add(n, Ordering::Relaxed);
    }
}

/// Checks that `policy` can run on `pomdp`.
pub fn check_dimensions(pomdp: &Pomdp, policy: &FiniteMemoryPolicy) -> Result<()> {
    if policy.num_observations() != pomdp.num_observations() {
        return Err(Error::ObservationMismatch {
            policy: policy.num_observations(),
            pomdp: pomdp.num_observations(),
        });
    }
    let k = policy.memory_count();
    let na = pomdp.num_actions();
    if let Some((i, d)) = policy.cells().iter().enumerate().find(|(_, d)| d.action >= na) {
        return Err(Error::ActionOutOfRange {
            observation: i / k,
            memory: i % k,
            action: d.action,
            actions: na,
        });
    }
    Ok(())
}

/// Exact value of `policy` over `horizon` steps. Counts one evaluation.
pub fn evaluate_exact(
    pomdp: &Pomdp,
    policy: &FiniteMemoryPolicy,
    horizon: usize,
    counter: &EvalCounter,
) -> Result<f64> {
    check_dimensions(pomdp, policy)?;
    let mut evaluator = Evaluator::new(pomdp, horizon);
    let value = evaluator.value(policy);
    counter.add(1);
    Ok(value)
}

/// Reusable exact evaluator holding scratch buffers and a local count.
///
/// Callers are responsible for passing policies that fit the POMDP; see
/// [`check_dimensions`].
#[derive(Debug, Clone)]
pub struct Evaluator<'a> {
    pomdp: &'a Pomdp,
    horizon: usize,
    evaluations: u64,
    current: Vec<f64>,
    previous: Vec<f64>,
}

impl<'a> Evaluator<'a> {
    pub fn new(pomdp: &'a Pomdp, horizon: usize) -> Self {
        Evaluator { pomdp, horizon, evaluations: 0, current: Vec::new(), previous: Vec::new() }
    }

    pub fn pomdp(&self) -> &'a Pomdp {
        self.pomdp
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn value(&mut self, policy: &FiniteMemoryPolicy) -> f64 {
        self.evaluations += 1;
        let p = self.pomdp;
        let k = policy.memory_count();
        let n = p.num_states() * k;
        self.previous.clear();
        self.previous.resize(n, 0.0);
        self.current.clear();
        self.current.resize(n, 0.0);
        for _ in 0..self.horizon {
            for s in 0..p.num_states() {
                let o = p.observation_of(s);
                for m in 0..k {
                    let d = policy.decide(o, m);
                    let mut future = 0.0;
                    for &(next, prob) in p.successors(s, d.action) {
                        future += prob * self.previous[next * k + d.memory];
                    }
                    self.current[s * k + m] = p.reward(s, d.action) + future;
                }
            }
            std::mem::swap(&mut self.current, &mut self.previous);
        }
        start_value(p, &self.previous, k)
    }
}

/// `sum_s b0[s] * values[(s, 0)]`.
pub(crate) fn start_value(p: &Pomdp, values: &[f64], k: usize) -> f64 {
    let mut total = 0.0;
    for (s, &b) in p.start_belief().iter().enumerate() {
        total += b * values[s * k];
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationStats {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(episodes)`; 0 for a single episode.
    pub stderr: f64,
    pub episodes: usize,
}

/// Monte Carlo estimate of the policy value from `episodes` seeded rollouts.
pub fn simulate(
    pomdp: &Pomdp,
    policy: &FiniteMemoryPolicy,
    horizon: usize,
    episodes: usize,
    seed: u64,
) -> Result<SimulationStats> {
    check_dimensions(pomdp, policy)?;
    if episodes == 0 {
        return Err(Error::NoEpisodes);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start: Vec<(usize, f64)> = pomdp
        .start_belief()
        .iter()
        .copied()
        .enumerate()
        .filter(|&(_, p)| p > 0.0)
        .collect();
    let mut rewards = Vec::with_capacity(horizon);
    let mut totals = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let mut state = sample(&start, &mut rng);
        let mut memory = 0;
        rewards.clear();
        for _ in 0..horizon {
            let d = policy.decide(pomdp.observation_of(state), memory);
            rewards.push(pomdp.reward(state, d.action));
            state = sample(pomdp.successors(state, d.action), &mut rng);
            memory = d.memory;
        }
        // Summed back to front, the same association as the backward recursion.
        let total = rewards.iter().rev().fold(0.0, |acc, &r| r + acc);
        totals.push(total);
    }

    // Shifted by the first sample so identical samples give an exact mean.
    let shift = totals[0];
    let n = episodes as f64;
    let dev_sum: f64 = totals.iter().map(|x| x - shift).sum();
    let mean_dev = dev_sum / n;
    let mean = shift + mean_dev;
    let stderr = if episodes < 2 {
        0.0
    } else {
        let ss: f64 = totals.iter().map(|x| (x - shift - mean_dev).powi(2)).sum();
        (ss / (n - 1.0)).sqrt() / n.sqrt()
    };
    Ok(SimulationStats { mean, stderr, episodes })
}

fn sample<R: Rng>(entries: &[(usize, f64)], rng: &mut R) -> usize {
    if entries.len() == 1 {
        return entries[0].0;
    }
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for &(s, p) in entries {
        acc += p;
        if u < acc {
            return s;
        }
    }
    entries.last().expect("nonempty distribution").0
}
