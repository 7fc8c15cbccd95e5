use fmp_core::harness::{run_seed, stable_hash, CSV_HEADER};
use fmp_core::{
    emit_csv, emit_plot_data, gen_clockwork, gen_signal_corridor, run_experiment, Algorithm, ExperimentSpec, GaConfig,
    Generator, OptimumSource, Pomdp, PomdpParts, SaConfig,
};

fn all_algorithms() -> Vec<Algorithm> {
    vec![Algorithm::Local, Algorithm::Anneal(SaConfig::default()), Algorithm::Genetic(GaConfig::default())]
}

fn single_action() -> Pomdp {
    Pomdp::new(PomdpParts {
        state_names: vec!["a".into(), "b".into()],
        action_names: vec!["go".into()],
        observation_names: vec!["o".into()],
        transition: vec![0.5, 0.5, 0.0, 1.0],
        observation_of: vec![0, 0],
        reward: vec![1.0, 0.25],
        start_belief: vec![1.0, 0.0],
        discount: 1.0,
    })
    .unwrap()
}

#[test]
fn single_policy_is_always_found() {
    let mut spec = ExperimentSpec::new("single", all_algorithms(), vec![1], 3);
    spec.runs = 1;
    let out = run_experiment(&single_action(), &spec).unwrap();
    assert_eq!(out.records.len(), 3);
    for cell in &out.report.cells {
        assert_eq!(cell.success_fraction, Some(1.0));
    }
}

#[test]
fn clockwork_without_memory_always_succeeds() {
    let mut spec = ExperimentSpec::new("clockwork", all_algorithms(), vec![1, 2, 3], 2);
    spec.record_timing = false;
    let out = run_experiment(&gen_clockwork(), &spec).unwrap();
    assert_eq!(out.report.optima, vec![(1, Some(0.0)), (2, Some(1.0)), (3, Some(1.0))]);
    assert!(out.report.optimum_monotone);
    for alg in ["local", "anneal", "genetic"] {
        assert_eq!(out.report.cell(alg, 1).unwrap().success_fraction, Some(1.0));
        for k in 1..=3 {
            let cell = out.report.cell(alg, k).unwrap();
            let hits = out
                .records
                .iter()
                .filter(|r| r.algorithm == alg && r.memory_states == k && r.reached_optimal == Some(true))
                .count();
            assert_eq!(cell.successes, Some(hits));
            assert_eq!(cell.success_fraction, Some(hits as f64 / 100.0));
            assert_eq!(cell.runs, 100);
        }
    }
    assert!(out.records.iter().all(|r| r.wall_ms == 0.0));
}

#[test]
fn records_are_sorted_and_seeded() {
    let mut spec = ExperimentSpec::new("corridor", vec![Algorithm::Local, Algorithm::Anneal(SaConfig::default())], vec![1, 2], 2);
    spec.runs = 5;
    spec.base_seed = 77;
    spec.parallelism = 3;
    let out = run_experiment(&gen_signal_corridor(0), &spec).unwrap();
    let keys: Vec<(&str, usize, usize)> =
        out.records.iter().map(|r| (r.algorithm.as_str(), r.memory_states, r.run)).collect();
    let mut expected = Vec::new();
    for alg in ["local", "anneal"] {
        for k in [1, 2] {
            for run in 0..5 {
                expected.push((alg, k, run));
            }
        }
    }
    assert_eq!(keys, expected);
    for r in &out.records {
        assert_eq!(r.seed, run_seed(77, &r.algorithm, r.memory_states, r.run));
    }
}

#[test]
fn adding_a_cell_does_not_perturb_others() {
    let p = gen_signal_corridor(0);
    let mut small = ExperimentSpec::new("c", vec![Algorithm::Local], vec![2], 2);
    small.runs = 10;
    small.record_timing = false;
    let mut large = small.clone();
    large.algorithms.insert(0, Algorithm::Genetic(GaConfig::default()));
    large.memory_sizes = vec![1, 2, 3];
    let a = run_experiment(&p, &small).unwrap().records;
    let b = run_experiment(&p, &large).unwrap().records;
    let b_local: Vec<_> = b.into_iter().filter(|r| r.algorithm == "local" && r.memory_states == 2).collect();
    assert_eq!(a, b_local);
}

#[test]
fn stable_hash_is_fixed() {
    // Pinned so that seeds stay comparable across releases and platforms.
    assert_eq!(stable_hash("local", 2, 0), 0x7cde_9310_0757_7bdd);
    assert_eq!(stable_hash("genetic", 3, 17), 0x2942_31eb_4cac_dafc);
    assert_ne!(stable_hash("local", 2, 0), stable_hash("local", 0, 2));
    assert_ne!(stable_hash("local", 2, 0), stable_hash("anneal", 2, 0));
    assert_eq!(run_seed(0, "local", 2, 0), stable_hash("local", 2, 0));
}

#[test]
fn unknown_optimum_is_flagged() {
    let mut spec = ExperimentSpec::new("corridor3", vec![Algorithm::Local], vec![1, 2], 2);
    spec.runs = 3;
    spec.optimum = OptimumSource::Enumeration { limit: 1000 };
    let out = run_experiment(&gen_signal_corridor(3), &spec).unwrap();
    assert_eq!(out.report.optima[1], (2, None));
    assert_eq!(out.report.cell("local", 2).unwrap().success_fraction, None);
    let csv = emit_csv(&out.records).unwrap();
    assert!(csv.lines().skip(4).all(|l| l.ends_with(",NA")));
    let plot = emit_plot_data(&out.report).unwrap();
    assert!(plot.lines().nth(2).unwrap().contains("NaN"));
}

#[test]
fn provided_optimum_above_reach_is_accepted_and_below_is_an_error() {
    let mut spec = ExperimentSpec::new("clockwork", vec![Algorithm::Local], vec![2], 2);
    spec.runs = 5;
    spec.optimum = OptimumSource::Value(10.0);
    let out = run_experiment(&gen_clockwork(), &spec).unwrap();
    assert_eq!(out.report.cell("local", 2).unwrap().success_fraction, Some(0.0));
    spec.optimum = OptimumSource::Value(-1.0);
    assert!(run_experiment(&gen_clockwork(), &spec).is_err());
}

#[test]
fn invalid_specs_are_rejected() {
    let p = gen_clockwork();
    let base = ExperimentSpec::new("c", vec![Algorithm::Local], vec![1, 2], 2);
    let mut s = base.clone();
    s.runs = 0;
    assert!(run_experiment(&p, &s).is_err());
    let mut s = base.clone();
    s.memory_sizes = vec![2, 1];
    assert!(run_experiment(&p, &s).is_err());
    let mut s = base.clone();
    s.memory_sizes.clear();
    assert!(run_experiment(&p, &s).is_err());
    let mut s = base;
    s.horizon = 0;
    assert!(run_experiment(&p, &s).is_err());
}

#[test]
fn output_shapes() {
    let mut spec = ExperimentSpec::new("clockwork", all_algorithms(), vec![1, 2, 3], 2);
    spec.runs = 1;
    spec.record_timing = false;
    let out = run_experiment(&gen_clockwork(), &spec).unwrap();
    let one = emit_csv(&out.records[..1]).unwrap();
    assert_eq!(one.lines().count(), 2);
    assert_eq!(one.lines().next(), Some(CSV_HEADER));
    let row: Vec<&str> = one.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row.len(), 10);
    assert!(row[9] == "1" || row[9] == "0");
    assert!(emit_csv(&[]).is_err());

    let plot = emit_plot_data(&out.report).unwrap();
    let blocks: Vec<&str> = plot.trim_end().split("\n\n").collect();
    assert_eq!(blocks.len(), 3);
    for (block, alg) in blocks.iter().zip(["local", "anneal", "genetic"]) {
        let lines: Vec<&str> = block.lines().collect();
        assert_eq!(lines[0], format!("# {alg}"));
        assert_eq!(lines.len(), 4);
        for (line, k) in lines[1..].iter().zip(1..) {
            let cols: Vec<&str> = line.split_whitespace().collect();
            assert_eq!(cols.len(), 3);
            assert_eq!(cols[0], k.to_string());
        }
    }
}

#[test]
fn generator_names() {
    assert_eq!("clockwork".parse::<Generator>(), Ok(Generator::Clockwork));
    assert_eq!("signal-corridor".parse::<Generator>(), Ok(Generator::SignalCorridor(0)));
    assert_eq!("signal-corridor:4".parse::<Generator>(), Ok(Generator::SignalCorridor(4)));
    assert!("signal-corridor:x".parse::<Generator>().is_err());
    assert!("maze".parse::<Generator>().is_err());
    assert_eq!(Generator::SignalCorridor(2).to_string(), "signal-corridor:2");
    assert_eq!(Generator::SignalCorridor(2).build().num_states(), 9);
}
