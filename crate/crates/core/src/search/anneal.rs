use rand::Rng;

use crate::error::{Error, Result};
use crate::eval::EvalCounter;
use crate::model::Pomdp;

use super::{check_search_args, rng_from_seed, Climber, SearchResult, Step};

/// Linear cooling schedule in integer percent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SaConfig {
    /// Percent chance of a random jump in the first iteration.
    pub initial_temperature: u32,
    /// Degrees removed after every iteration.
    pub decrement: u32,
}

impl Default for SaConfig {
    fn default() -> Self {
        SaConfig { initial_temperature: 95, decrement: 1 }
    }
}

impl SaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.initial_temperature > 100 {
            return Err(Error::Config(format!(
                "initial temperature {} above 100",
                self.initial_temperature
            )));
        }
        if self.decrement == 0 {
            return Err(Error::Config("temperature decrement must be at least 1".into()));
        }
        Ok(())
    }
}

/// Local search with random perturbations that die out linearly.
///
/// While the temperature `T` is positive, each iteration jumps to a uniform
/// random neighbor with probability `T/100` and otherwise takes one
/// first-improvement step (staying put if none exists). Once `T` reaches 0
/// the search is plain local search and stops at a local maximum. The best
/// policy ever evaluated is returned.
pub fn simulated_annealing(
    pomdp: &Pomdp,
    memory_count: usize,
    horizon: usize,
    seed: u64,
    cfg: &SaConfig,
    counter: &EvalCounter,
) -> Result<SearchResult> {
    check_search_args(pomdp, memory_count, horizon)?;
    cfg.validate()?;
    let mut rng = rng_from_seed(seed);
    let mut climber = Climber::start(pomdp, memory_count, horizon, &mut rng);
    let mut temperature = cfg.initial_temperature;
    let mut trace = Vec::new();
    let mut iterations = 0;
    loop {
        iterations += 1;
        if temperature > 0 && rng.gen_range(0..100) < temperature {
            trace.push(climber.jump(&mut rng).unwrap_or(Step::Stay));
        } else {
            match climber.improve(&mut rng) {
                Some(step) => trace.push(step),
                None if temperature == 0 => {
                    trace.push(Step::Converged);
                    break;
                }
                None => trace.push(Step::Stay),
            }
        }
        temperature = temperature.saturating_sub(cfg.decrement);
    }
    Ok(climber.finish(iterations, seed, trace, counter))
}
