//! POMDP data model with deterministic, state-dependent observations.
//!
//! Tables are stored flat. `transition` is indexed `[(s * |A| + a) * |S| + s']`,
//! `reward` is indexed `[s * |A| + a]`. A sparse copy of every transition row
//! is kept next to the dense table; it lists the successors with nonzero
//! probability in increasing state order, so sums over it are bit-identical
//! to sums over the dense row.

use std::fmt;

/// Tolerance for the post-normalization probability invariants.
pub const PROB_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Pomdp {
    state_names: Vec<String>,
    action_names: Vec<String>,
    observation_names: Vec<String>,
    transition: Vec<f64>,
    observation_of: Vec<usize>,
    reward: Vec<f64>,
    start_belief: Vec<f64>,
    discount: f64,
    successors: Vec<Vec<(usize, f64)>>,
}

/// A broken invariant, naming the offending indices.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NoStates,
    NoActions,
    NoObservations,
    TableShape { table: &'static str, expected: usize, actual: usize },
    TransitionEntry { state: usize, action: usize, next: usize, value: f64 },
    TransitionRowSum { state: usize, action: usize, sum: f64 },
    StartEntry { state: usize, value: f64 },
    StartSum { sum: f64 },
    ObservationIndex { state: usize, observation: usize },
    RewardNotFinite { state: usize, action: usize },
    Discount { value: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoStates => write!(f, "no states"),
            Violation::NoActions => write!(f, "no actions"),
            Violation::NoObservations => write!(f, "no observations"),
            Violation::TableShape { table, expected, actual } => {
                write!(f, "{table} table has {actual} entries, expected {expected}")
            }
            Violation::TransitionEntry { state, action, next, value } => write!(
                f,
                "transition ({state}, {action}, {next}) = {value} is not a probability"
            ),
            Violation::TransitionRowSum { state, action, sum } => {
                write!(f, "transition row ({state}, {action}) sums to {sum}")
            }
            Violation::StartEntry { state, value } => {
                write!(f, "start belief entry {state} = {value} is not a probability")
            }
            Violation::StartSum { sum } => write!(f, "start belief sums to {sum}"),
            Violation::ObservationIndex { state, observation } => {
                write!(f, "state {state} emits unknown observation {observation}")
            }
            Violation::RewardNotFinite { state, action } => {
                write!(f, "reward ({state}, {action}) is not finite")
            }
            Violation::Discount { value } => write!(f, "discount {value} outside (0, 1]"),
        }
    }
}

/// Raw tables for building a [`Pomdp`].
#[derive(Debug, Clone, PartialEq)]
pub struct PomdpParts {
    pub state_names: Vec<String>,
    pub action_names: Vec<String>,
    pub observation_names: Vec<String>,
    pub transition: Vec<f64>,
    pub observation_of: Vec<usize>,
    pub reward: Vec<f64>,
    pub start_belief: Vec<f64>,
    pub discount: f64,
}

impl Pomdp {
    /// Builds a validated POMDP.
    pub fn new(parts: PomdpParts) -> Result<Self, Vec<Violation>> {
        let pomdp = Self::new_unchecked(parts);
        let violations = validate_pomdp(&pomdp);
        if violations.is_empty() {
            Ok(pomdp)
        } else {
            Err(violations)
        }
    }

    /// Builds a POMDP without checking invariants. Table shapes must still
    /// match the name lists or accessors will panic.
    pub fn new_unchecked(parts: PomdpParts) -> Self {
        let ns = parts.state_names.len();
        let na = parts.action_names.len();
        let mut successors = Vec::with_capacity(ns * na);
        if parts.transition.len() == ns * na * ns {
            for row in parts.transition.chunks(ns.max(1)) {
                successors.push(
                    row.iter()
                        .enumerate()
                        .filter(|(_, &p)| p != 0.0)
                        .map(|(s, &p)| (s, p))
                        .collect(),
                );
            }
        }
        Pomdp {
            state_names: parts.state_names,
            action_names: parts.action_names,
            observation_names: parts.observation_names,
            transition: parts.transition,
            observation_of: parts.observation_of,
            reward: parts.reward,
            start_belief: parts.start_belief,
            discount: parts.discount,
            successors,
        }
    }

    pub fn into_parts(self) -> PomdpParts {
        PomdpParts {
            state_names: self.state_names,
            action_names: self.action_names,
            observation_names: self.observation_names,
            transition: self.transition,
            observation_of: self.observation_of,
            reward: self.reward,
            start_belief: self.start_belief,
            discount: self.discount,
        }
    }

    pub fn num_states(&self) -> usize {
        self.state_names.len()
    }

    pub fn num_actions(&self) -> usize {
        self.action_names.len()
    }

    pub fn num_observations(&self) -> usize {
        self.observation_names.len()
    }

    pub fn state_names(&self) -> &[String] {
        &self.state_names
    }

    pub fn action_names(&self) -> &[String] {
        &self.action_names
    }

    pub fn observation_names(&self) -> &[String] {
        &self.observation_names
    }

    #[inline]
    pub fn transition(&self, state: usize, action: usize, next: usize) -> f64 {
        let ns = self.num_states();
        self.transition[(state * self.num_actions() + action) * ns + next]
    }

    /// Dense row `t[s][a][·]`.
    pub fn transition_row(&self, state: usize, action: usize) -> &[f64] {
        let ns = self.num_states();
        let start = (state * self.num_actions() + action) * ns;
        &self.transition[start..start + ns]
    }

    /// Nonzero entries of `t[s][a][·]` in increasing successor order.
    #[inline]
    pub fn successors(&self, state: usize, action: usize) -> &[(usize, f64)] {
        &self.successors[state * self.num_actions() + action]
    }

    #[inline]
    pub fn observation_of(&self, state: usize) -> usize {
        self.observation_of[state]
    }

    #[inline]
    pub fn reward(&self, state: usize, action: usize) -> f64 {
        self.reward[state * self.num_actions() + action]
    }

    pub fn start_belief(&self) -> &[f64] {
        &self.start_belief
    }

    /// Retained from the input; evaluation is undiscounted.
    pub fn discount(&self) -> f64 {
        self.discount
    }

    /// True when every transition row and the start belief are point masses.
    pub fn is_deterministic(&self) -> bool {
        self.successors.iter().all(|row| row.len() == 1 && row[0].1 == 1.0)
            && self.start_belief.iter().filter(|&&p| p != 0.0).count() == 1
            && self.start_belief.contains(&1.0)
    }
}

/// Lists every broken invariant; empty iff the POMDP is well formed.
pub fn validate_pomdp(p: &Pomdp) -> Vec<Violation> {
    let mut out = Vec::new();
    let (ns, na, no) = (p.num_states(), p.num_actions(), p.num_observations());
    if ns == 0 {
        out.push(Violation::NoStates);
    }
    if na == 0 {
        out.push(Violation::NoActions);
    }
    if no == 0 {
        out.push(Violation::NoObservations);
    }
    let shapes = [
        ("transition", ns * na * ns, p.transition.len()),
        ("observation", ns, p.observation_of.len()),
        ("reward", ns * na, p.reward.len()),
        ("start", ns, p.start_belief.len()),
    ];
    let mut shaped = true;
    for (table, expected, actual) in shapes {
        if expected != actual {
            out.push(Violation::TableShape { table, expected, actual });
            shaped = false;
        }
    }
    if !shaped {
        return out;
    }

    for s in 0..ns {
        for a in 0..na {
            let row = p.transition_row(s, a);
            let mut sum = 0.0;
            for (next, &value) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&value) {
                    out.push(Violation::TransitionEntry { state: s, action: a, next, value });
                }
                sum += value;
            }
            if sum.is_nan() || (sum - 1.0).abs() > PROB_TOLERANCE {
                out.push(Violation::TransitionRowSum { state: s, action: a, sum });
            }
            if !p.reward(s, a).is_finite() {
                out.push(Violation::RewardNotFinite { state: s, action: a });
            }
        }
    }

    let mut sum = 0.0;
    for (state, &value) in p.start_belief.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            out.push(Violation::StartEntry { state, value });
        }
        sum += value;
    }
    if sum.is_nan() || (sum - 1.0).abs() > PROB_TOLERANCE {
        out.push(Violation::StartSum { sum });
    }

    for (state, &observation) in p.observation_of.iter().enumerate() {
        if observation >= no {
            out.push(Violation::ObservationIndex { state, observation });
        }
    }
    if !(p.discount > 0.0 && p.discount <= 1.0) {
        out.push(Violation::Discount { value: p.discount });
    }
    out
}

/// The POMDP over world state x policy memory, on which a `k`-memory policy
/// acts as a memoryless one.
///
/// Product state `(s, m)` has index `s * k + m`, observation `(o, m)` has
/// index `o * k + m` and action `(a, m')` has index `a * k + m'`. The start
/// belief places `b0[s]` on `(s, 0)`.
pub fn cross_product(p: &Pomdp, k: usize) -> crate::Result<Pomdp> {
    if k == 0 {
        return Err(crate::Error::ZeroMemory);
    }
    let (ns, na) = (p.num_states(), p.num_actions());
    let pair_names = |names: &[String]| -> Vec<String> {
        names
            .iter()
            .flat_map(|n| (0..k).map(move |m| format!("{n}_m{m}")))
            .collect()
    };
    let nsx = ns * k;
    let nax = na * k;
    let mut transition = vec![0.0; nsx * nax * nsx];
    let mut reward = vec![0.0; nsx * nax];
    let mut observation_of = vec![0; nsx];
    let mut start_belief = vec![0.0; nsx];
    for s in 0..ns {
        for m in 0..k {
            let sx = s * k + m;
            observation_of[sx] = p.observation_of(s) * k + m;
            for a in 0..na {
                for m_next in 0..k {
                    let ax = a * k + m_next;
                    reward[sx * nax + ax] = p.reward(s, a);
                    let base = (sx * nax + ax) * nsx;
                    for (s_next, prob) in p.transition_row(s, a).iter().enumerate() {
                        transition[base + s_next * k + m_next] = *prob;
                    }
                }
            }
        }
        start_belief[s * k] = p.start_belief()[s];
    }
    Ok(Pomdp::new_unchecked(PomdpParts {
        state_names: pair_names(&p.state_names),
        action_names: pair_names(&p.action_names),
        observation_names: pair_names(&p.observation_names),
        transition,
        observation_of,
        reward,
        start_belief,
        discount: p.discount,
    }))
}
