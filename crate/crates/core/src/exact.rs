//! Ground-truth optimal finite-memory policies for small instances.
//!
//! Two routes: plain enumeration of the whole policy space, and a
//! depth-first branch-and-bound over cells in lexicographic order. The
//! bound lets every unassigned cell pick its decision separately for each
//! `(state, memory, stage)`, i.e. it solves the fully observable MDP on the
//! state x memory product restricted to the decisions already fixed. Any
//! completion of the partial policy is one such choice, so the bound is
//! admissible, and it is exact when every cell is assigned.

use std::fmt;

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::eval::{check_dimensions, start_value, EvalCounter, Evaluator};
use crate::model::Pomdp;
use crate::policy::{Decision, FiniteMemoryPolicy};
use crate::search::{check_search_args, local_search};

/// Default refusal threshold for [`exhaustive_optimal`].
pub const DEFAULT_ENUMERATION_LIMIT: u64 = 2_000_000;

/// `(|A| k)^(|O| k)`.
pub fn policy_space_size(num_observations: usize, num_actions: usize, memory_count: usize) -> BigUint {
    BigUint::from(num_actions * memory_count).pow((num_observations * memory_count) as u32)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExactMethod {
    Enumeration,
    BranchAndBound,
}

impl fmt::Display for ExactMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExactMethod::Enumeration => "enumeration",
            ExactMethod::BranchAndBound => "branch-and-bound",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactResult {
    pub optimal_policy: FiniteMemoryPolicy,
    pub optimal_value: f64,
    /// Policies evaluated (enumeration) or internal nodes expanded (B&B).
    pub nodes_expanded: u64,
    pub method: ExactMethod,
}

/// A policy table with some cells still open.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialPolicy {
    num_observations: usize,
    memory_count: usize,
    cells: Vec<Option<Decision>>,
}

impl PartialPolicy {
    pub fn unassigned(num_observations: usize, memory_count: usize) -> Self {
        PartialPolicy { num_observations, memory_count, cells: vec![None; num_observations * memory_count] }
    }

    pub fn from_policy(policy: &FiniteMemoryPolicy) -> Self {
        PartialPolicy {
            num_observations: policy.num_observations(),
            memory_count: policy.memory_count(),
            cells: policy.cells().iter().copied().map(Some).collect(),
        }
    }

    pub fn num_observations(&self) -> usize {
        self.num_observations
    }

    pub fn memory_count(&self) -> usize {
        self.memory_count
    }

    pub fn cells(&self) -> &[Option<Decision>] {
        &self.cells
    }

    pub fn assign(&mut self, cell: usize, decision: Option<Decision>) {
        if let Some(d) = decision {
            assert!(d.memory < self.memory_count, "memory index out of range");
        }
        self.cells[cell] = decision;
    }

    pub fn is_complete(&self) -> bool {
        self.cells.iter().all(Option::is_some)
    }

    pub fn to_policy(&self) -> Option<FiniteMemoryPolicy> {
        let cells = self.cells.iter().copied().collect::<Option<Vec<_>>>()?;
        FiniteMemoryPolicy::new(self.num_observations, self.memory_count, cells).ok()
    }
}

/// Reusable buffers for the relaxation bound.
struct Bounder<'a> {
    pomdp: &'a Pomdp,
    horizon: usize,
    current: Vec<f64>,
    previous: Vec<f64>,
}

impl<'a> Bounder<'a> {
    fn new(pomdp: &'a Pomdp, horizon: usize) -> Self {
        Bounder { pomdp, horizon, current: Vec::new(), previous: Vec::new() }
    }

    fn bound(&mut self, partial: &PartialPolicy) -> f64 {
        let p = self.pomdp;
        let k = partial.memory_count;
        let n = p.num_states() * k;
        self.previous.clear();
        self.previous.resize(n, 0.0);
        self.current.clear();
        self.current.resize(n, 0.0);
        for _ in 0..self.horizon {
            for s in 0..p.num_states() {
                let o = p.observation_of(s);
                for m in 0..k {
                    let backup = |d: Decision, prev: &[f64]| {
                        let mut future = 0.0;
                        for &(next, prob) in p.successors(s, d.action) {
                            future += prob * prev[next * k + d.memory];
                        }
                        p.reward(s, d.action) + future
                    };
                    self.current[s * k + m] = match partial.cells[o * k + m] {
                        Some(d) => backup(d, &self.previous),
                        None => (0..p.num_actions() * k)
                            .map(|i| backup(Decision::from_pair_index(i, k), &self.previous))
                            .fold(f64::NEG_INFINITY, f64::max),
                    };
                }
            }
            std::mem::swap(&mut self.current, &mut self.previous);
        }
        start_value(p, &self.previous, k)
    }
}

fn check_partial(pomdp: &Pomdp, partial: &PartialPolicy) -> Result<()> {
    if partial.num_observations != pomdp.num_observations() {
        return Err(Error::ObservationMismatch {
            policy: partial.num_observations,
            pomdp: pomdp.num_observations(),
        });
    }
    let k = partial.memory_count;
    for (i, d) in partial.cells.iter().enumerate() {
        if let Some(d) = d {
            if d.action >= pomdp.num_actions() {
                return Err(Error::ActionOutOfRange {
                    observation: i / k,
                    memory: i % k,
                    action: d.action,
                    actions: pomdp.num_actions(),
                });
            }
        }
    }
    Ok(())
}

/// Upper bound on the value of every completion of `partial`.
pub fn relaxed_upper_bound(pomdp: &Pomdp, partial: &PartialPolicy, horizon: usize) -> Result<f64> {
    check_partial(pomdp, partial)?;
    Ok(Bounder::new(pomdp, horizon).bound(partial))
}

/// Evaluates every policy in lexicographic order (cell 0 most significant,
/// decisions in (a, m') order) and returns the first one attaining the
/// maximum.
pub fn exhaustive_optimal(pomdp: &Pomdp, memory_count: usize, horizon: usize, limit: u64) -> Result<ExactResult> {
    if memory_count == 0 {
        return Err(Error::ZeroMemory);
    }
    let (no, na) = (pomdp.num_observations(), pomdp.num_actions());
    let size = policy_space_size(no, na, memory_count);
    if size > BigUint::from(limit) {
        return Err(Error::SpaceTooLarge { size, limit });
    }
    let pairs = na * memory_count;
    let mut digits = vec![0usize; no * memory_count];
    let mut policy = FiniteMemoryPolicy::uniform(no, memory_count, Decision::new(0, 0))?;
    let mut eval = Evaluator::new(pomdp, horizon);
    let mut best = (policy.clone(), f64::NEG_INFINITY);
    loop {
        let value = eval.value(&policy);
        if value > best.1 {
            best = (policy.clone(), value);
        }
        // Odometer step, last cell fastest.
        let mut i = digits.len();
        loop {
            if i == 0 {
                return Ok(ExactResult {
                    optimal_policy: best.0,
                    optimal_value: best.1,
                    nodes_expanded: eval.evaluations(),
                    method: ExactMethod::Enumeration,
                });
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < pairs {
                policy.cells_mut()[i] = Decision::from_pair_index(digits[i], memory_count);
                break;
            }
            digits[i] = 0;
            policy.cells_mut()[i] = Decision::new(0, 0);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BnbOptions {
    /// Seed of the local search that provides the first incumbent.
    pub seed: u64,
    /// Skip decisions that only rename memory states not yet in use.
    pub symmetry_breaking: bool,
}

/// Depth-first branch-and-bound over cells in lexicographic order.
///
/// Children are explored by decreasing bound and pruned when their bound
/// does not exceed the incumbent, so the first optimum found is kept.
pub fn branch_and_bound(pomdp: &Pomdp, memory_count: usize, horizon: usize, options: BnbOptions) -> Result<ExactResult> {
    check_search_args(pomdp, memory_count, horizon)?;
    let seed_run = local_search(pomdp, memory_count, horizon, options.seed, &EvalCounter::new())?;
    check_dimensions(pomdp, &seed_run.best_policy)?;
    let mut search = BranchAndBound {
        pomdp,
        memory_count,
        symmetry_breaking: options.symmetry_breaking,
        bounder: Bounder::new(pomdp, horizon),
        eval: Evaluator::new(pomdp, horizon),
        partial: PartialPolicy::unassigned(pomdp.num_observations(), memory_count),
        incumbent: seed_run.best_policy,
        incumbent_value: seed_run.best_value,
        nodes: 0,
    };
    search.expand(0);
    Ok(ExactResult {
        optimal_policy: search.incumbent,
        optimal_value: search.incumbent_value,
        nodes_expanded: search.nodes,
        method: ExactMethod::BranchAndBound,
    })
}

struct BranchAndBound<'a> {
    pomdp: &'a Pomdp,
    memory_count: usize,
    symmetry_breaking: bool,
    bounder: Bounder<'a>,
    eval: Evaluator<'a>,
    partial: PartialPolicy,
    incumbent: FiniteMemoryPolicy,
    incumbent_value: f64,
    nodes: u64,
}

impl BranchAndBound<'_> {
    fn expand(&mut self, cell: usize) {
        self.nodes += 1;
        if self.nodes.is_multiple_of(100_000) {
            log::debug!("branch-and-bound: {} nodes, incumbent {}", self.nodes, self.incumbent_value);
        }
        let k = self.memory_count;
        let leaf = cell + 1 == self.partial.cells.len();
        let allowed = self.allowed_memory(cell);
        let mut children: Vec<(f64, Decision)> = Vec::new();
        for a in 0..self.pomdp.num_actions() {
            for m in 0..k {
                if !allowed[m] {
                    continue;
                }
                let d = Decision::new(a, m);
                self.partial.cells[cell] = Some(d);
                let bound = if leaf {
                    let policy = self.partial.to_policy().expect("complete");
                    self.eval.value(&policy)
                } else {
                    self.bounder.bound(&self.partial)
                };
                children.push((bound, d));
            }
        }
        // Stable: equal bounds keep (a, m') order.
        children.sort_by(|x, y| y.0.total_cmp(&x.0));
        for (bound, d) in children {
            if bound <= self.incumbent_value {
                break;
            }
            self.partial.cells[cell] = Some(d);
            if leaf {
                self.incumbent = self.partial.to_policy().expect("complete");
                self.incumbent_value = bound;
            } else {
                self.expand(cell + 1);
            }
        }
        self.partial.cells[cell] = None;
    }

    /// Memory targets worth trying at `cell`. With symmetry breaking, labels
    /// not yet mentioned are interchangeable, so only the smallest is kept.
    fn allowed_memory(&self, cell: usize) -> Vec<bool> {
        let k = self.memory_count;
        if !self.symmetry_breaking {
            return vec![true; k];
        }
        let mut touched = vec![false; k];
        touched[0] = true;
        for c in 0..=cell {
            touched[c % k] = true;
        }
        for d in self.partial.cells[..cell].iter().flatten() {
            touched[d.memory] = true;
        }
        if let Some(fresh) = touched.iter().position(|t| !t) {
            touched[fresh] = true;
        }
        touched
    }
}
