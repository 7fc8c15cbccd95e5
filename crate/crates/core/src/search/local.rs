use crate::error::Result;
use crate::eval::EvalCounter;
use crate::model::Pomdp;

use super::{check_search_args, rng_from_seed, Climber, SearchResult, Step};

/// Randomized first-improvement hill climbing from a random policy.
///
/// Each iteration scans every neighbor starting at a freshly drawn origin
/// and moves to the first one with a strictly greater value. The search
/// stops after a full scan without improvement, so the result is a local
/// maximum of the single-cell neighborhood.
pub fn local_search(
    pomdp: &Pomdp,
    memory_count: usize,
    horizon: usize,
    seed: u64,
    counter: &EvalCounter,
) -> Result<SearchResult> {
    check_search_args(pomdp, memory_count, horizon)?;
    let mut rng = rng_from_seed(seed);
    let mut climber = Climber::start(pomdp, memory_count, horizon, &mut rng);
    let mut trace = Vec::new();
    let mut iterations = 0;
    loop {
        iterations += 1;
        match climber.improve(&mut rng) {
            Some(step) => trace.push(step),
            None => {
                trace.push(Step::Converged);
                break;
            }
        }
    }
    Ok(climber.finish(iterations, seed, trace, counter))
}
