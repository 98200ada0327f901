use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn specden(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_specden")).current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = specden(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn report(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn strip_volatile(mut v: Value) -> Value {
    let obj = v.as_object_mut().unwrap();
    obj.remove("wall_clock_seconds");
    obj.remove("version");
    v
}

#[test]
fn generated_graph_round_trips_through_spectrum() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["gen", "--variant", "rw", "--ell", "5", "--n", "4", "--which", "g1", "--seed", "7", "--out", "g.txt"]);
    let csv = ok(dir.path(), &["spectrum", "--graph", "g.txt"]);
    let rows: Vec<(f64, f64)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    let total: f64 = rows.iter().map(|r| r.1).sum();
    assert!((total - 1.0).abs() < 1e-9);
    let closed = ok(dir.path(), &["spectrum", "--variant", "rw", "--ell", "5", "--n", "4", "--which", "g1"]);
    let closed: Vec<(f64, f64)> = closed
        .lines()
        .skip(1)
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    let mass_near = |xs: &[(f64, f64)], x: f64| xs.iter().filter(|r| (r.0 - x).abs() < 1e-8).map(|r| r.1).sum::<f64>();
    for &(x, _) in &closed {
        assert!((mass_near(&rows, x) - mass_near(&closed, x)).abs() < 1e-9, "atom {x}");
    }
}

#[test]
fn cheb_report_for_triangle() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["cheb", "--ell", "3", "--json", "r.json"]);
    let r = report(&dir.path().join("r.json"));
    let m = &r["measured"];
    assert_eq!(m["c"].as_f64().unwrap(), 4.0);
    assert!((m["bound"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-4);
    assert!((m["W1"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-4);
    assert_eq!(r["experiment"], "cheb");
}

#[test]
fn couple_report_fields() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["couple", "--ell", "5", "--n", "2048", "--m", "4", "--T", "16", "--trials", "5000", "--seed", "1", "--json", "r.json"]);
    let r = report(&dir.path().join("r.json"));
    let p = r["measured"]["p_unequal"].as_f64().unwrap();
    let bound = r["measured"]["tv_bound"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&p));
    assert!(p <= bound);
    assert_eq!(r["measured"]["implication_violations"].as_f64().unwrap(), 0.0);
    assert_eq!(r["seed"], 1);
}

#[test]
fn same_seed_gives_identical_reports() {
    let dir = TempDir::new().unwrap();
    let args = |out: &'static str| ["couple", "--ell", "5", "--n", "256", "--m", "2", "--T", "8", "--trials", "3000", "--seed", "9", "--json", out];
    ok(dir.path(), &args("a.json"));
    ok(dir.path(), &args("b.json"));
    assert_eq!(strip_volatile(report(&dir.path().join("a.json"))), strip_volatile(report(&dir.path().join("b.json"))));
    ok(dir.path(), &["couple", "--ell", "5", "--n", "256", "--m", "2", "--T", "8", "--trials", "3000", "--seed", "10", "--json", "c.json"]);
    assert_ne!(report(&dir.path().join("a.json"))["measured"], report(&dir.path().join("c.json"))["measured"]);
}

#[test]
fn thread_count_never_changes_results() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["gen", "--variant", "mom", "--ell", "5", "--n", "4", "--which", "g2", "--out", "g.txt"]);
    for threads in ["1", "2"] {
        let out = format!("m{threads}.json");
        ok(dir.path(), &["--threads", threads, "moments", "--graph", "g.txt", "--k", "4", "--walks", "20000", "--seed", "3", "--json", &out]);
    }
    assert_eq!(
        strip_volatile(report(&dir.path().join("m1.json")))["measured"],
        strip_volatile(report(&dir.path().join("m2.json")))["measured"]
    );
}

#[test]
fn moments_feed_reconstruction() {
    let dir = TempDir::new().unwrap();
    // moments of the uniform measure on {-1, 0, 1}
    let csv = ok(dir.path(), &["reconstruct", "--moments", "0,0.6666666666666666,0,0.6666666666666666,0", "--grid", "21"]);
    let mass_at = |x: f64| {
        csv.lines()
            .skip(1)
            .filter_map(|l| l.split_once(','))
            .filter(|(a, _)| (a.parse::<f64>().unwrap() - x).abs() < 1e-9)
            .map(|(_, b)| b.parse::<f64>().unwrap())
            .sum::<f64>()
    };
    for x in [-1.0, 0.0, 1.0] {
        assert!((mass_at(x) - 1.0 / 3.0).abs() < 1e-6, "mass at {x}");
    }
}

#[test]
fn exact_difference_spectrum_of_four_vertex_pair() {
    let dir = TempDir::new().unwrap();
    let csv = ok(dir.path(), &["diff", "--exact"]);
    let total: f64 = csv.lines().skip(1).map(|l| l.split_once(',').unwrap().1.parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn usage_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    assert_eq!(specden(dir.path(), &["bogus"]).status.code(), Some(2));
    assert_eq!(specden(dir.path(), &["cheb", "--ell", "3", "--nope"]).status.code(), Some(2));
    assert_eq!(specden(dir.path(), &["spectrum", "--graph", "missing.txt"]).status.code(), Some(2));
    std::fs::write(dir.path().join("bad.txt"), "x y z\n").unwrap();
    assert_eq!(specden(dir.path(), &["spectrum", "--graph", "bad.txt"]).status.code(), Some(2));
    assert_eq!(specden(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn budget_errors_exit_three() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["gen", "--variant", "rw", "--ell", "5", "--n", "4", "--which", "g1", "--out", "g.txt"]);
    let out = specden(dir.path(), &["sde", "--graph", "g.txt", "--eps", "0.25", "--budget", "1000", "--strict"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget"));
    assert_eq!(specden(dir.path(), &["diff", "--k", "4", "--theta", "0.05", "--budget", "1000"]).status.code(), Some(3));
    // without --strict the estimate is truncated instead
    ok(dir.path(), &["sde", "--graph", "g.txt", "--eps", "0.25", "--budget", "1000"]);
}

#[test]
fn verify_subset_passes() {
    let dir = TempDir::new().unwrap();
    let stdout = ok(dir.path(), &["verify", "--only", "1,9,10", "--json", "v.json"]);
    assert_eq!(stdout.lines().filter(|l| l.contains("PASS")).count(), 3, "{stdout}");
    let v = report(&dir.path().join("v.json"));
    assert!(v.to_string().contains("\"passed\""));
}
