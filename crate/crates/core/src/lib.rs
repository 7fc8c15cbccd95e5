//! Search for free finite-memory policies of POMDPs.
//!
//! A free finite-memory policy with `k` memory states maps each
//! `(observation, memory)` pair to an `(action, next memory)` pair. This
//! crate evaluates such policies exactly over a finite horizon, searches
//! for good ones with local search, simulated annealing and a genetic
//! algorithm, finds exact optima on small instances, and runs seeded
//! experiments comparing the three.
//!
//! ```
//! use fmp_core::{gen_clockwork, local_search, EvalCounter};
//!
//! let pomdp = gen_clockwork();
//! let result = local_search(&pomdp, 2, 2, 7, &EvalCounter::new()).unwrap();
//! assert!(result.best_value <= 1.0);
//! ```

pub mod error;
pub mod eval;
pub mod exact;
pub mod harness;
pub mod model;
pub mod parser;
pub mod policy;
pub mod search;

pub use error::{Error, Result};
pub use eval::{check_dimensions, evaluate_exact, simulate, EvalCounter, Evaluator, SimulationStats};
pub use exact::{
    branch_and_bound, exhaustive_optimal, policy_space_size, relaxed_upper_bound, BnbOptions, ExactMethod,
    ExactResult, PartialPolicy, DEFAULT_ENUMERATION_LIMIT,
};
pub use harness::{
    emit_csv, emit_plot_data, gen_clockwork, gen_signal_corridor, run_experiment, ExperimentOutput, ExperimentSpec,
    Generator, OptimumSource, Report, RunRecord,
};
pub use model::{cross_product, validate_pomdp, Pomdp, PomdpParts, Violation};
pub use parser::{parse_pomdp, write_pomdp, Diagnostic, ParseDiagnostics, ParsedPomdp, Severity};
pub use policy::{parse_policy, Decision, FiniteMemoryPolicy, PolicyParseError};
pub use search::{
    crossover, fitness_transform, genetic_search, local_search, mutate, neighbor_at, neighbor_count,
    population_size, random_policy, rng_from_seed, simulated_annealing, Algorithm, GaConfig, Neighborhood,
    SaConfig, SearchResult, Step,
};
