use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use pgvrp::format;

fn pgvrp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pgvrp")).args(args).env_remove("RUST_BACKTRACE").output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = pgvrp(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn value(text: &str, key: &str) -> f64 {
    text.lines().find_map(|l| l.strip_prefix(key)).unwrap_or_else(|| panic!("no `{key}` in {text}")).trim().parse().unwrap()
}

fn gen_small(dir: &Path, seed: u64) {
    fs::write(dir.join("rows"), "# n m k\n8 3 1\n9 4 2\n").unwrap();
    let rows = dir.join("rows");
    let seed = seed.to_string();
    ok(&["gen", "--rows", rows.to_str().unwrap(), "--seed", &seed, "--out", dir.join("inst").to_str().unwrap()]);
}

#[test]
fn gen_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    gen_small(a.path(), 11);
    gen_small(b.path(), 11);
    gen_small(c.path(), 12);
    for name in ["001-n8-m3-k1.pgvrp", "002-n9-m4-k2.pgvrp"] {
        let x = fs::read(a.path().join("inst").join(name)).unwrap();
        assert_eq!(x, fs::read(b.path().join("inst").join(name)).unwrap());
        assert_ne!(x, fs::read(c.path().join("inst").join(name)).unwrap());
    }
}

#[test]
fn default_suite_has_sixteen_rows() {
    let d = tempfile::tempdir().unwrap();
    let out = ok(&["gen", "--suite", "default", "--seed", "5", "--out", d.path().to_str().unwrap()]);
    assert_eq!(out.lines().count(), 16);
    let text = fs::read_to_string(d.path().join("016-n300-m150-k30.pgvrp")).unwrap();
    let inst = format::parse_instance(&text).unwrap();
    assert_eq!((inst.n_nodes(), inst.num_clusters(), inst.vehicles()), (300, 150, 30));
}

#[test]
fn solve_then_eval_agree() {
    let d = tempfile::tempdir().unwrap();
    gen_small(d.path(), 3);
    let inst = d.path().join("inst/002-n9-m4-k2.pgvrp");
    let inst = inst.to_str().unwrap();
    for algo in ["MmI", "mmI", "unbounded", "exact", "oracle"] {
        let sol = d.path().join(format!("{algo}.sol"));
        let summary = ok(&["solve", "--instance", inst, "--algo", algo, "--time-limit", "60", "--out", sol.to_str().unwrap()]);
        assert!(summary.starts_with(algo), "{summary}");
        let objective: f64 = summary.split_whitespace().find_map(|w| w.strip_prefix("objective=")).unwrap().parse().unwrap();
        let report = ok(&["eval", "--instance", inst, "--solution", sol.to_str().unwrap()]);
        let (det, exp, rec) = (value(&report, "deterministic_length"), value(&report, "expected_length"), value(&report, "expected_recourse"));
        assert!((det - exp - rec).abs() < 1e-9 * det.max(1.0));
        assert!((exp - objective).abs() < 1e-9 * exp.max(1.0), "{algo}: {exp} vs {objective}");
    }
}

#[test]
fn exact_matches_oracle_through_cli() {
    let d = tempfile::tempdir().unwrap();
    gen_small(d.path(), 8);
    let inst = d.path().join("inst/001-n8-m3-k1.pgvrp");
    let inst = inst.to_str().unwrap();
    let obj = |algo: &str| -> f64 {
        let sol = d.path().join("x.sol");
        let s = ok(&["solve", "--instance", inst, "--algo", algo, "--out", sol.to_str().unwrap()]);
        assert!(s.contains("status=optimal"), "{s}");
        s.split_whitespace().find_map(|w| w.strip_prefix("objective=")).unwrap().parse().unwrap()
    };
    assert!((obj("exact") - obj("oracle")).abs() < 1e-9);
}

#[test]
fn bounds_lines() {
    let d = tempfile::tempdir().unwrap();
    gen_small(d.path(), 4);
    let inst = d.path().join("inst/001-n8-m3-k1.pgvrp");
    let out = ok(&["bounds", "--instance", inst.to_str().unwrap()]);
    let (l, s, c) = (value(&out, "lower_bound_scaled"), value(&out, "ub_simple"), value(&out, "ub_clustered"));
    assert!(l >= 0.0 && c <= s + 1e-9);
}

#[test]
fn bench_writes_csv() {
    let d = tempfile::tempdir().unwrap();
    gen_small(d.path(), 9);
    let csv = d.path().join("results.csv");
    ok(&["bench", "--dir", d.path().join("inst").to_str().unwrap(), "--algos", "MmI,mmI,oracle", "--time-limit", "30", "--out", csv.to_str().unwrap()]);
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("id,n_nodes,m_clusters,cluster_size,k_vehicles,algo,objective,seconds,status,exact_ref,deviation"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 6);
    for r in &rows {
        assert_eq!(r.len(), 11);
        if r[5] != "oracle" {
            assert!(r[10].parse::<f64>().unwrap() >= -1e-12);
        }
    }
}

#[test]
fn bad_input_fails_cleanly() {
    let d = tempfile::tempdir().unwrap();
    let bad = d.path().join("bad.pgvrp");
    fs::write(&bad, "PGVRP 1\nVEHICLES 1\nMETRIC EUCLID\nNODE 0 0 0\nCLUSTER 1 0.5 7\n").unwrap();
    let out = pgvrp(&["bounds", "--instance", bad.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(!pgvrp(&["solve", "--instance", bad.to_str().unwrap(), "--algo", "nope"]).status.success());
    assert!(!pgvrp(&["gen", "--suite", "other", "--seed", "1", "--out", d.path().to_str().unwrap()]).status.success());
}
