#![allow(dead_code)]

use fmp_core::{FiniteMemoryPolicy, Pomdp, PomdpParts};
use rand::Rng;

/// Value of `policy` by enumerating every state trajectory of length
/// `horizon` and weighting its summed reward by its probability. Shares no
/// code with the backward recursion.
pub fn brute_force_value(p: &Pomdp, policy: &FiniteMemoryPolicy, horizon: usize) -> f64 {
    fn walk(p: &Pomdp, policy: &FiniteMemoryPolicy, state: usize, memory: usize, steps: usize, prob: f64, acc: f64) -> f64 {
        if steps == 0 || prob == 0.0 {
            return prob * acc;
        }
        let d = policy.decide(p.observation_of(state), memory);
        let acc = acc + p.reward(state, d.action);
        (0..p.num_states())
            .map(|next| {
                let t = p.transition(state, d.action, next);
                if t == 0.0 {
                    0.0
                } else {
                    walk(p, policy, next, d.memory, steps - 1, prob * t, acc)
                }
            })
            .sum()
    }
    (0..p.num_states())
        .map(|s| walk(p, policy, s, 0, horizon, p.start_belief()[s], 0.0))
        .sum()
}

/// Random POMDP with `ns` states, `na` actions and `no` observations.
/// Transition rows are random and sparse-ish; rewards are in [-1, 2].
pub fn random_pomdp<R: Rng>(rng: &mut R, ns: usize, na: usize, no: usize) -> Pomdp {
    let mut transition = vec![0.0; ns * na * ns];
    for row in transition.chunks_mut(ns) {
        let mut total = 0.0;
        for v in row.iter_mut() {
            if rng.gen_bool(0.6) {
                *v = rng.gen_range(0.05..1.0);
                total += *v;
            }
        }
        if total == 0.0 {
            row[rng.gen_range(0..ns)] = 1.0;
        } else {
            row.iter_mut().for_each(|v| *v /= total);
        }
    }
    let mut start: Vec<f64> = (0..ns).map(|_| rng.gen_range(0.0..1.0)).collect();
    let total: f64 = start.iter().sum();
    start.iter_mut().for_each(|v| *v /= total);
    Pomdp::new(PomdpParts {
        state_names: (0..ns).map(|i| format!("s{i}")).collect(),
        action_names: (0..na).map(|i| format!("a{i}")).collect(),
        observation_names: (0..no).map(|i| format!("o{i}")).collect(),
        transition,
        observation_of: (0..ns).map(|_| rng.gen_range(0..no)).collect(),
        reward: (0..ns * na).map(|_| rng.gen_range(-1.0..2.0)).collect(),
        start_belief: start,
        discount: 1.0,
    })
    .expect("random POMDP is well formed")
}
