//! `fmp`: search, solve exactly, evaluate and benchmark free finite-memory
//! policies of POMDPs.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fmp_core::harness::format_significant;
use fmp_core::{
    branch_and_bound, emit_csv, emit_plot_data, evaluate_exact, exhaustive_optimal, parse_policy, parse_pomdp,
    run_experiment, simulate, write_pomdp, Algorithm, BnbOptions, EvalCounter, ExperimentSpec, GaConfig, Generator,
    OptimumSource, Pomdp, SaConfig, DEFAULT_ENUMERATION_LIMIT,
};

#[derive(Parser)]
#[command(name = "fmp", version, about = "Free finite-memory policy search for POMDPs")]
struct Cli {
    /// More log output (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for a policy with one heuristic.
    Solve(SolveArgs),
    /// Find an optimal policy by enumeration or branch-and-bound.
    Exact(ExactArgs),
    /// Evaluate a saved policy exactly and optionally by simulation.
    Eval(EvalArgs),
    /// Run every algorithm many times per memory size and tabulate.
    Experiment(ExperimentArgs),
    /// Write a built-in instance in POMDP file format.
    Gen(GenArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// POMDP file in Cassandra format.
    #[arg(long, value_name = "FILE")]
    pomdp: Option<PathBuf>,
    /// Built-in instance: `clockwork` or `signal-corridor[:n]`.
    #[arg(long = "gen", value_name = "NAME[:n]")]
    generator: Option<Generator>,
}

#[derive(Args)]
struct AlgoFlags {
    /// Initial annealing temperature.
    #[arg(long, default_value_t = SaConfig::default().initial_temperature)]
    temp: u32,
    /// Temperature decrease per annealing iteration.
    #[arg(long, default_value_t = SaConfig::default().decrement)]
    decrement: u32,
    #[arg(long, default_value_t = GaConfig::default().crossover_rate)]
    crossover_rate: f64,
    #[arg(long, default_value_t = GaConfig::default().mutation_rate)]
    mutation_rate: f64,
    /// Generations with an unchanged best policy before stopping.
    #[arg(long, default_value_t = GaConfig::default().stagnation_limit)]
    stagnation: u32,
    #[arg(long, default_value_t = GaConfig::default().stdev_threshold)]
    stdev_threshold: f64,
    /// Override the computed population size.
    #[arg(long)]
    population: Option<usize>,
}

impl AlgoFlags {
    /// Rejects bad values even for algorithms that would not use them.
    fn validate(&self) -> Outcome {
        for name in [AlgoName::Anneal, AlgoName::Genetic] {
            match self.build(name) {
                Algorithm::Anneal(c) => c.validate()?,
                Algorithm::Genetic(c) => c.validate()?,
                Algorithm::Local => {}
            }
        }
        Ok(())
    }

    fn build(&self, name: AlgoName) -> Algorithm {
        match name {
            AlgoName::Local => Algorithm::Local,
            AlgoName::Anneal => Algorithm::Anneal(SaConfig { initial_temperature: self.temp, decrement: self.decrement }),
            AlgoName::Genetic => Algorithm::Genetic(GaConfig {
                crossover_rate: self.crossover_rate,
                mutation_rate: self.mutation_rate,
                stagnation_limit: self.stagnation,
                stdev_threshold: self.stdev_threshold,
                population_override: self.population,
            }),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoName {
    Local,
    Anneal,
    Genetic,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Enum,
    Bnb,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    memory: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    horizon: u64,
    #[arg(long, value_enum)]
    algo: AlgoName,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the policy here instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[command(flatten)]
    flags: AlgoFlags,
}

#[derive(Args)]
struct ExactArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    memory: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    horizon: u64,
    #[arg(long, value_enum, default_value = "bnb")]
    method: Method,
    /// Largest policy space enumeration will accept.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_LIMIT)]
    limit: u64,
    /// Prune branches that only rename unused memory states.
    #[arg(long)]
    symmetry: bool,
    /// Seed of the local search that supplies the first incumbent.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, value_name = "FILE")]
    policy: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    horizon: u64,
    /// Also estimate the value from this many simulated episodes.
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    simulate: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    source: Source,
    /// Comma-separated memory sizes, ascending.
    #[arg(long, value_delimiter = ',', required = true, value_parser = clap::value_parser!(u64).range(1..))]
    memory: Vec<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    horizon: u64,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "local,anneal,genetic")]
    algos: Vec<AlgoName>,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    runs: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-run CSV; printed to stdout when omitted.
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
    /// Plot data: one block per algorithm.
    #[arg(long, value_name = "FILE")]
    plot: Option<PathBuf>,
    /// `bnb`, `enum` or `value:X`.
    #[arg(long, default_value = "bnb", value_parser = parse_optimum)]
    optimum: OptimumArg,
    /// Largest policy space `--optimum enum` will accept.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_LIMIT)]
    limit: u64,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Write 0 for wall time so the CSV is reproducible byte for byte.
    #[arg(long)]
    no_timing: bool,
    #[command(flatten)]
    flags: AlgoFlags,
}

#[derive(Clone, Copy)]
enum OptimumArg {
    Bnb,
    Enum,
    Value(f64),
}

fn parse_optimum(s: &str) -> Result<OptimumArg, String> {
    match s {
        "bnb" => Ok(OptimumArg::Bnb),
        "enum" => Ok(OptimumArg::Enum),
        _ => match s.strip_prefix("value:").map(str::parse::<f64>) {
            Some(Ok(v)) if v.is_finite() => Ok(OptimumArg::Value(v)),
            _ => Err(format!("expected `bnb`, `enum` or `value:X`, found `{s}`")),
        },
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Clockwork,
    SignalCorridor,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    family: Family,
    /// Corridor length (signal-corridor only).
    #[arg(long, default_value_t = 0)]
    n: usize,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

/// A failure with its exit code.
enum Failure {
    Invalid(String),
    Refused(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 2,
            Failure::Refused(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Invalid(m) | Failure::Refused(m) => f.write_str(m),
        }
    }
}

impl From<fmp_core::Error> for Failure {
    fn from(e: fmp_core::Error) -> Self {
        match e {
            fmp_core::Error::SpaceTooLarge { .. } => Failure::Refused(e.to_string()),
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let outcome = match &cli.command {
        Command::Solve(a) => solve(a),
        Command::Exact(a) => exact(a),
        Command::Eval(a) => eval(a),
        Command::Experiment(a) => experiment(a),
        Command::Gen(a) => generate(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Invalid(format!("cannot read {}: {e}", path.display())))
}

fn write_or_print(path: Option<&Path>, text: &str) -> Outcome {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Invalid(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            let _ = out.write_all(text.as_bytes());
            Ok(())
        }
    }
}

fn load(source: &Source) -> Result<(Pomdp, String), Failure> {
    if let Some(g) = source.generator {
        return Ok((g.build(), g.to_string()));
    }
    let path = source.pomdp.as_ref().expect("clap requires one source");
    let parsed = parse_pomdp(&read(path)?).map_err(|d| Failure::Invalid(format!("{}:\n{d}", path.display())))?;
    for w in parsed.diagnostics.warnings() {
        log::warn!("{}: {w}", path.display());
    }
    let id = path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
    Ok((parsed.pomdp, id))
}

fn num(x: f64) -> String {
    format_significant(x, 12)
}

fn solve(a: &SolveArgs) -> Outcome {
    a.flags.validate()?;
    let (p, _) = load(&a.source)?;
    let algorithm = a.flags.build(a.algo);
    let r = algorithm.run(&p, a.memory as usize, a.horizon as usize, a.seed, &EvalCounter::new())?;
    println!("algorithm {}", algorithm.name());
    println!("value {}", num(r.best_value));
    println!("evaluations {}", r.evaluations);
    println!("iterations {}", r.iterations);
    println!("seed {}", r.seed);
    write_or_print(a.out.as_deref(), &r.best_policy.to_text())
}

fn exact(a: &ExactArgs) -> Outcome {
    let (p, _) = load(&a.source)?;
    let (k, h) = (a.memory as usize, a.horizon as usize);
    let r = match a.method {
        Method::Enum => {
            if a.symmetry {
                log::warn!("--symmetry only applies to branch-and-bound");
            }
            exhaustive_optimal(&p, k, h, a.limit)?
        }
        Method::Bnb => branch_and_bound(&p, k, h, BnbOptions { seed: a.seed, symmetry_breaking: a.symmetry })?,
    };
    println!("method {}", r.method);
    println!("value {}", num(r.optimal_value));
    println!("nodes {}", r.nodes_expanded);
    write_or_print(a.out.as_deref(), &r.optimal_policy.to_text())
}

fn eval(a: &EvalArgs) -> Outcome {
    let (p, _) = load(&a.source)?;
    let policy =
        parse_policy(&read(&a.policy)?).map_err(|e| Failure::Invalid(format!("{}: {e}", a.policy.display())))?;
    let h = a.horizon as usize;
    println!("value {}", num(evaluate_exact(&p, &policy, h, &EvalCounter::new())?));
    if let Some(n) = a.simulate {
        let s = simulate(&p, &policy, h, n as usize, a.seed)?;
        println!("simulated_mean {}", num(s.mean));
        println!("simulated_stderr {}", num(s.stderr));
        println!("episodes {}", s.episodes);
    }
    Ok(())
}

fn experiment(a: &ExperimentArgs) -> Outcome {
    a.flags.validate()?;
    let (p, id) = load(&a.source)?;
    let algorithms = a.algos.iter().map(|&n| a.flags.build(n)).collect();
    let memory: Vec<usize> = a.memory.iter().map(|&k| k as usize).collect();
    let mut spec = ExperimentSpec::new(id, algorithms, memory, a.horizon as usize);
    spec.runs = a.runs as usize;
    spec.base_seed = a.seed;
    spec.parallelism = a.threads;
    spec.record_timing = !a.no_timing;
    spec.optimum = match a.optimum {
        OptimumArg::Bnb => OptimumSource::BranchAndBound,
        OptimumArg::Enum => OptimumSource::Enumeration { limit: a.limit },
        OptimumArg::Value(v) => OptimumSource::Value(v),
    };
    let out = run_experiment(&p, &spec)?;
    write_or_print(a.csv.as_deref(), &emit_csv(&out.records)?)?;
    if let Some(path) = &a.plot {
        write_or_print(Some(path), &emit_plot_data(&out.report)?)?;
    }

    // Summary table on stderr so stdout stays a clean CSV.
    let fmt_opt = |o: Option<f64>| o.map_or("unknown".to_string(), num);
    for (k, o) in &out.report.optima {
        eprintln!("optimum k={k}: {}", fmt_opt(*o));
    }
    if !out.report.optimum_monotone {
        eprintln!("warning: optimum decreases with memory");
    }
    eprintln!("{:<8} {:>3} {:>9} {:>12}", "algo", "k", "success", "mean_evals");
    for c in &out.report.cells {
        eprintln!("{:<8} {:>3} {:>9} {:>12.1}", c.algorithm, c.memory_states, fmt_opt(c.success_fraction), c.mean_evaluations);
    }
    Ok(())
}

fn generate(a: &GenArgs) -> Outcome {
    let g = match a.family {
        Family::Clockwork => {
            if a.n != 0 {
                log::warn!("--n is ignored for clockwork");
            }
            Generator::Clockwork
        }
        Family::SignalCorridor => Generator::SignalCorridor(a.n),
    };
    write_or_print(a.out.as_deref(), &write_pomdp(&g.build()))
}
