use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::eval::EvalCounter;
use crate::exact::{branch_and_bound, exhaustive_optimal, BnbOptions};
use crate::model::Pomdp;
use crate::search::Algorithm;

/// Values within this distance of the optimum count as optimal.
pub const OPTIMUM_TOLERANCE: f64 = 1e-9;

/// Where the per-k optimum comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimumSource {
    BranchAndBound,
    Enumeration { limit: u64 },
    Value(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub instance_id: String,
    pub algorithms: Vec<Algorithm>,
    /// Nonempty, strictly ascending.
    pub memory_sizes: Vec<usize>,
    pub horizon: usize,
    pub runs: usize,
    pub base_seed: u64,
    pub optimum: OptimumSource,
    /// Worker threads; 0 lets rayon decide.
    pub parallelism: usize,
    /// Record wall-clock time per run. Off makes the CSV byte-reproducible.
    pub record_timing: bool,
}

impl ExperimentSpec {
    pub fn new(instance_id: impl Into<String>, algorithms: Vec<Algorithm>, memory_sizes: Vec<usize>, horizon: usize) -> Self {
        ExperimentSpec {
            instance_id: instance_id.into(),
            algorithms,
            memory_sizes,
            horizon,
            runs: 100,
            base_seed: 0,
            optimum: OptimumSource::BranchAndBound,
            parallelism: 0,
            record_timing: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Config("no algorithms selected".into()));
        }
        if self.memory_sizes.is_empty() || self.memory_sizes[0] == 0 {
            return Err(Error::Config("memory sizes must be nonempty and positive".into()));
        }
        if self.memory_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("memory sizes must be strictly ascending".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub instance: String,
    pub algorithm: String,
    pub memory_states: usize,
    pub horizon: usize,
    pub run: usize,
    pub seed: u64,
    pub value: f64,
    pub evaluations: u64,
    pub wall_ms: f64,
    /// `None` when no optimum is known for this memory size.
    pub reached_optimal: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub algorithm: String,
    pub memory_states: usize,
    pub runs: usize,
    pub successes: Option<usize>,
    pub success_fraction: Option<f64>,
    pub mean_evaluations: f64,
    pub stdev_evaluations: f64,
    pub mean_wall_ms: f64,
    pub stdev_wall_ms: f64,
    pub best_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub instance: String,
    pub horizon: usize,
    /// `(k, optimum)` for every memory size, ascending.
    pub optima: Vec<(usize, Option<f64>)>,
    /// Whether the known optima are nondecreasing in `k`.
    pub optimum_monotone: bool,
    /// One entry per (algorithm, k), algorithms in the order given.
    pub cells: Vec<CellSummary>,
}

impl Report {
    pub fn cell(&self, algorithm: &str, memory_states: usize) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.algorithm == algorithm && c.memory_states == memory_states)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub records: Vec<RunRecord>,
    pub report: Report,
}

/// Seed of one (algorithm, k, run) cell: independent of every other cell.
pub fn run_seed(base_seed: u64, algorithm: &str, memory_states: usize, run: usize) -> u64 {
    base_seed ^ stable_hash(algorithm, memory_states, run)
}

/// FNV-1a over the name and both indices, finished with a splitmix64 mix.
pub fn stable_hash(name: &str, a: usize, b: usize) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let bytes = name
        .bytes()
        .chain([0xff])
        .chain((a as u64).to_le_bytes())
        .chain((b as u64).to_le_bytes());
    for byte in bytes {
        h ^= u64::from(byte);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}

/// Exact optimum for one memory size, or `None` if the method refuses.
pub fn optimum_for(pomdp: &Pomdp, spec: &ExperimentSpec, memory_states: usize) -> Result<Option<f64>> {
    match spec.optimum {
        OptimumSource::Value(v) => Ok(Some(v)),
        OptimumSource::BranchAndBound => {
            let options = BnbOptions { seed: run_seed(spec.base_seed, "bnb", memory_states, 0), symmetry_breaking: false };
            Ok(Some(branch_and_bound(pomdp, memory_states, spec.horizon, options)?.optimal_value))
        }
        OptimumSource::Enumeration { limit } => match exhaustive_optimal(pomdp, memory_states, spec.horizon, limit) {
            Ok(r) => Ok(Some(r.optimal_value)),
            Err(Error::SpaceTooLarge { size, limit }) => {
                log::warn!("k = {memory_states}: {size} policies exceed the enumeration limit {limit}; success is unknown");
                Ok(None)
            }
            Err(e) => Err(e),
        },
    }
}

pub fn run_experiment(pomdp: &Pomdp, spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    spec.validate()?;

    let optima: Vec<(usize, Option<f64>)> = spec
        .memory_sizes
        .iter()
        .map(|&k| optimum_for(pomdp, spec, k).map(|o| (k, o)))
        .collect::<Result<_>>()?;
    let known: Vec<f64> = optima.iter().filter_map(|(_, o)| *o).collect();
    let optimum_monotone = known.windows(2).all(|w| w[0] <= w[1] + OPTIMUM_TOLERANCE);
    if !optimum_monotone {
        log::warn!("exact optimum decreases with memory: {optima:?}");
    }

    let tasks: Vec<(usize, usize, usize)> = (0..spec.algorithms.len())
        .flat_map(|a| {
            optima
                .iter()
                .enumerate()
                .flat_map(move |(ki, _)| (0..spec.runs).map(move |run| (a, ki, run)))
        })
        .collect();

    let execute = |&(a, ki, run): &(usize, usize, usize)| -> Result<(usize, RunRecord)> {
        let algorithm = &spec.algorithms[a];
        let (k, optimum) = optima[ki];
        let seed = run_seed(spec.base_seed, algorithm.name(), k, run);
        let started = Instant::now();
        let result = algorithm.run(pomdp, k, spec.horizon, seed, &EvalCounter::new())?;
        let wall_ms = if spec.record_timing { started.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
        if let Some(opt) = optimum {
            if result.best_value > opt + OPTIMUM_TOLERANCE {
                return Err(Error::Config(format!(
                    "{} found value {} above the exact optimum {opt} at k = {k}",
                    algorithm.name(),
                    result.best_value
                )));
            }
        }
        Ok((
            a,
            RunRecord {
                instance: spec.instance_id.clone(),
                algorithm: algorithm.name().to_string(),
                memory_states: k,
                horizon: spec.horizon,
                run,
                seed,
                value: result.best_value,
                evaluations: result.evaluations,
                wall_ms,
                reached_optimal: optimum.map(|opt| (result.best_value - opt).abs() <= OPTIMUM_TOLERANCE),
            },
        ))
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.parallelism)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let mut tagged: Vec<(usize, RunRecord)> =
        pool.install(|| tasks.par_iter().map(execute).collect::<Result<Vec<_>>>())?;
    tagged.sort_by(|(a, x), (b, y)| (a, x.memory_states, x.run).cmp(&(b, y.memory_states, y.run)));
    let records: Vec<RunRecord> = tagged.into_iter().map(|(_, r)| r).collect();

    let report = summarize(spec, &records, optima, optimum_monotone);
    Ok(ExperimentOutput { records, report })
}

fn summarize(spec: &ExperimentSpec, records: &[RunRecord], optima: Vec<(usize, Option<f64>)>, optimum_monotone: bool) -> Report {
    let mut cells = Vec::new();
    for algorithm in &spec.algorithms {
        for &(k, _) in &optima {
            let rows: Vec<&RunRecord> = records
                .iter()
                .filter(|r| r.algorithm == algorithm.name() && r.memory_states == k)
                .collect();
            let successes = rows
                .iter()
                .map(|r| r.reached_optimal.map(usize::from))
                .sum::<Option<usize>>();
            let evals: Vec<f64> = rows.iter().map(|r| r.evaluations as f64).collect();
            let walls: Vec<f64> = rows.iter().map(|r| r.wall_ms).collect();
            let (mean_evaluations, stdev_evaluations) = sample_mean_stdev(&evals);
            let (mean_wall_ms, stdev_wall_ms) = sample_mean_stdev(&walls);
            cells.push(CellSummary {
                algorithm: algorithm.name().to_string(),
                memory_states: k,
                runs: rows.len(),
                successes,
                success_fraction: successes.map(|s| s as f64 / rows.len() as f64),
                mean_evaluations,
                stdev_evaluations,
                mean_wall_ms,
                stdev_wall_ms,
                best_value: rows.iter().map(|r| r.value).fold(f64::NEG_INFINITY, f64::max),
            });
        }
    }
    Report {
        instance: spec.instance_id.clone(),
        horizon: spec.horizon,
        optima,
        optimum_monotone,
        cells,
    }
}

/// Mean and sample standard deviation (0 for fewer than two values).
fn sample_mean_stdev(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
