use std::path::Path;
use std::process::{Command, Output};

const MICRO: [&str; 4] = ["--mdp", "builtin:micro1_mdp", "--automaton", "builtin:micro_automaton"];
const GRID: [&str; 4] = ["--grid", "builtin:gridworld_5x5", "--automaton", "builtin:fig1_automaton"];

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prefplan")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn with<'a>(head: &[&'a str], model: &[&'a str], tail: &[&'a str]) -> Vec<&'a str> {
    head.iter().chain(model).chain(tail).copied().collect()
}

fn field(text: &str, key: &str) -> f64 {
    let line = text.lines().find(|l| l.starts_with(key)).unwrap_or_else(|| panic!("no `{key}` in {text}"));
    line.split_whitespace().last().unwrap().parse().unwrap()
}

fn plan_to(dir: &Path, model: &[&str], extra: &[&str]) -> (Output, String) {
    let path = dir.join("policy.json");
    let p = path.to_str().unwrap().to_owned();
    let out = run(&with(&["plan"], model, &[extra, &["--out", &p]].concat()));
    (out, p)
}

#[test]
fn micro_plan_reports_the_optimum() {
    let out = run(&with(&["plan"], &MICRO, &["--horizon", "2"]));
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("status optimal"));
    assert!(text.contains("objective 0.600000"));
}

#[test]
fn exit_codes() {
    assert_eq!(run(&with(&["plan"], &MICRO, &["--horizon", "1"])).status.code(), Some(2));
    assert_eq!(run(&with(&["plan"], &MICRO, &["--horizon", "0"])).status.code(), Some(1));
    assert_eq!(run(&["plan", "--horizon", "2"]).status.code(), Some(1));
    assert_eq!(run(&with(&["plan"], &MICRO, &["--horizon", "2", "--pref", "nope"])).status.code(), Some(1));
}

#[test]
fn short_gridworld_horizon_cannot_reach_a() {
    let out = run(&with(&["plan"], &GRID, &["--pref", "P1", "--horizon", "5"]));
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("objective 0.000000"));
}

#[test]
fn long_preference_plans_fail_but_evaluate() {
    let out = run(&with(&["plan"], &GRID, &["--pref", "P5", "--horizon", "5"]));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("length"));

    let dir = tempfile::tempdir().unwrap();
    let (out, policy) = plan_to(dir.path(), &GRID, &["--pref", "P4", "--horizon", "8"]);
    assert_eq!(out.status.code(), Some(0));
    let ev = run(&with(&["eval"], &GRID, &["--pref", "P5", "--policy", &policy]));
    assert_eq!(ev.status.code(), Some(0), "{}", String::from_utf8_lossy(&ev.stderr));
    let v = field(&stdout(&ev), "value");
    assert!((0.0..=1.0).contains(&v));
}

#[test]
fn eval_reproduces_the_planned_objective() {
    let dir = tempfile::tempdir().unwrap();
    let (out, policy) = plan_to(dir.path(), &GRID, &["--pref", "P1 | P4", "--horizon", "9"]);
    assert_eq!(out.status.code(), Some(0));
    let planned = field(&stdout(&out), "objective");
    let ev = run(&with(&["eval"], &GRID, &["--pref", "P1 | P4", "--policy", &policy]));
    let evaluated = field(&stdout(&ev), "value");
    assert!((planned - evaluated).abs() < 1e-6, "{planned} vs {evaluated}");
}

#[test]
fn sweep_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = run(&with(&["sweep"], &MICRO, &["--t-min", "1", "--t-max", "3", "--out", path.to_str().unwrap()]));
        assert_eq!(out.status.code(), Some(0));
    }
    let first = std::fs::read(&a).unwrap();
    assert_eq!(first, std::fs::read(&b).unwrap());

    let mut reader = csv::Reader::from_reader(first.as_slice());
    assert_eq!(reader.headers().unwrap().iter().next(), Some("T"));
    let objectives: Vec<f64> = reader.records().map(|r| r.unwrap()[1].parse().unwrap()).collect();
    assert_eq!(objectives, vec![0.0, 0.6, 0.6]);
}

#[test]
fn sweep_rejects_lexicographic_preferences() {
    let out = run(&with(&["sweep"], &MICRO, &["--pref", "lex(p, p)", "--t-min", "1", "--t-max", "2"]));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn single_trajectory_is_a_point_mass() {
    let dir = tempfile::tempdir().unwrap();
    let (_, policy) = plan_to(dir.path(), &MICRO, &["--horizon", "2"]);
    let out = run(&with(&["simulate"], &MICRO, &["--policy", &policy, "--n", "1", "--seed", "5"]));
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let empirical: Vec<f64> = text
        .lines()
        .filter(|l| l.contains("empirical"))
        .map(|l| l.split_whitespace().nth(3).unwrap().parse().unwrap())
        .collect();
    assert_eq!(empirical.iter().filter(|&&f| f == 1.0).count(), 1);
    assert_eq!(empirical.iter().sum::<f64>(), 1.0);
}

#[test]
fn validate_accepts_fixtures_and_rejects_bad_models() {
    let ok = run(&["validate", "--mdp", "builtin:micro1_mdp", "--automaton", "builtin:micro_automaton"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).contains("ok"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"states":["s"],"actions":["a"],"initial":{"s":1.0},
        "transitions":[{"from":"s","action":"a","to":"s","prob":0.5}],
        "propositions":[],"labels":{}}"#,
    )
    .unwrap();
    let out = run(&["validate", "--mdp", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}
