use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fmp(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fmp")).args(args).current_dir(dir).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn field(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} ")))
        .unwrap_or_else(|| panic!("no `{key}` in {text}"))
        .to_string()
}

#[test]
fn gen_then_solve_then_eval() {
    let dir = tempfile::tempdir().unwrap();
    let o = fmp(&["gen", "--family", "signal-corridor", "--n", "0", "--out", "c.pomdp"], dir.path());
    assert!(o.status.success(), "{o:?}");
    assert!(fs::read_to_string(dir.path().join("c.pomdp")).unwrap().contains("states:"));

    let o = fmp(
        &["solve", "--pomdp", "c.pomdp", "--memory", "2", "--horizon", "2", "--algo", "genetic", "--seed", "3", "--out", "p.fmp"],
        dir.path(),
    );
    assert!(o.status.success(), "{o:?}");
    assert!(o.stderr.is_empty(), "{}", String::from_utf8_lossy(&o.stderr));
    let solved = field(&stdout(&o), "value");

    let o = fmp(&["eval", "--pomdp", "c.pomdp", "--policy", "p.fmp", "--horizon", "2", "--simulate", "500"], dir.path());
    assert!(o.status.success(), "{o:?}");
    let out = stdout(&o);
    assert_eq!(field(&out, "value"), solved);
    assert_eq!(field(&out, "episodes"), "500");
}

#[test]
fn solve_is_reproducible_and_prints_policy() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["solve", "--gen", "clockwork", "--memory", "2", "--horizon", "3", "--algo", "anneal", "--seed", "9"];
    let a = fmp(&args, dir.path());
    let b = fmp(&args, dir.path());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).contains("fmp 1 1 2\n"));
}

#[test]
fn exact_methods_agree() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["exact", "--gen", "signal-corridor:0", "--memory", "2", "--horizon", "2"];
    let e = fmp(&[&base[..], &["--method", "enum"]].concat(), dir.path());
    let b = fmp(&[&base[..], &["--method", "bnb", "--symmetry"]].concat(), dir.path());
    assert!(e.status.success() && b.status.success());
    assert_eq!(field(&stdout(&e), "value"), "1");
    assert_eq!(field(&stdout(&b), "value"), "1");
    assert_eq!(field(&stdout(&e), "method"), "enumeration");
}

#[test]
fn enumeration_refusal_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = fmp(&["exact", "--gen", "signal-corridor:2", "--memory", "2", "--horizon", "3", "--method", "enum"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    let o = fmp(
        &["exact", "--gen", "clockwork", "--memory", "2", "--horizon", "2", "--method", "enum", "--limit", "15"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn usage_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["solve", "--memory", "1", "--horizon", "1", "--algo", "local"][..],
        &["solve", "--gen", "clockwork", "--pomdp", "x", "--memory", "1", "--horizon", "1", "--algo", "local"],
        &["solve", "--gen", "clockwork", "--memory", "0", "--horizon", "1", "--algo", "local"],
        &["solve", "--gen", "maze", "--memory", "1", "--horizon", "1", "--algo", "local"],
        &["solve", "--gen", "clockwork", "--memory", "1", "--horizon", "1", "--algo", "tabu"],
        &["experiment", "--gen", "clockwork", "--memory", "1", "--horizon", "1", "--optimum", "best"],
        &["frobnicate"],
        &[],
    ] {
        assert_eq!(fmp(args, dir.path()).status.code(), Some(1), "{args:?}");
    }
    assert_eq!(fmp(&["--help"], dir.path()).status.code(), Some(0));
    assert_eq!(fmp(&["--version"], dir.path()).status.code(), Some(0));
}

#[test]
fn parse_and_validation_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.pomdp"), "states: 2\nactions: 1\nobservations: 1\nT: 0 : 0\n0.3 0.3\n").unwrap();
    fs::write(dir.path().join("bad.fmp"), "fmp 1 1 1\n0 0 0\n").unwrap();
    fs::write(dir.path().join("wide.fmp"), "fmp 1 1 1\n0 0 5 0\n").unwrap();
    let o = fmp(&["solve", "--pomdp", "bad.pomdp", "--memory", "1", "--horizon", "1", "--algo", "local"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 4"));
    for args in [
        &["solve", "--pomdp", "missing.pomdp", "--memory", "1", "--horizon", "1", "--algo", "local"][..],
        &["eval", "--gen", "clockwork", "--policy", "bad.fmp", "--horizon", "2"],
        &["eval", "--gen", "clockwork", "--policy", "wide.fmp", "--horizon", "2"],
        &["solve", "--gen", "clockwork", "--memory", "1", "--horizon", "1", "--algo", "genetic", "--crossover-rate", "2"],
        &["experiment", "--gen", "clockwork", "--memory", "2,1", "--horizon", "2", "--runs", "1"],
        &["experiment", "--gen", "clockwork", "--memory", "2", "--horizon", "2", "--runs", "1", "--optimum", "value:-1"],
    ] {
        assert_eq!(fmp(args, dir.path()).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn experiment_csv_is_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, csv: &str, plot: &str| {
        let o = fmp(
            &[
                "experiment", "--gen", "signal-corridor:0", "--memory", "1,2", "--horizon", "2", "--algos",
                "local,anneal,genetic", "--runs", "8", "--seed", "5", "--csv", csv, "--plot", plot, "--threads",
                threads, "--no-timing",
            ],
            dir.path(),
        );
        assert!(o.status.success(), "{o:?}");
    };
    run("1", "a.csv", "a.dat");
    run("4", "b.csv", "b.dat");
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b.csv")).unwrap());
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 1 + 3 * 2 * 8);
    let plot = fs::read_to_string(dir.path().join("a.dat")).unwrap();
    assert_eq!(plot, fs::read_to_string(dir.path().join("b.dat")).unwrap());
    assert_eq!(plot.lines().filter(|l| l.starts_with("# ")).count(), 3);
}

#[test]
fn experiment_prints_csv_without_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = fmp(
        &["experiment", "--gen", "clockwork", "--memory", "1", "--horizon", "2", "--algos", "local", "--runs", "2", "--optimum", "enum"],
        dir.path(),
    );
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.starts_with("instance,algorithm,"));
    assert_eq!(out.lines().count(), 3);
}
