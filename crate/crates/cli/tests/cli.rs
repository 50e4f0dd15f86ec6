use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use globcert::linalg::{C64, ComplexMatrix};
use globcert_cli::mm::{self, Layout};
use proptest::prelude::*;
use serde_json::Value;
use tempfile::TempDir;

fn globcert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_globcert")).args(args).env_remove("GLOBCERT_WORKERS").output().unwrap()
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(dir: &TempDir, name: &str) -> PathBuf {
    let out = path(dir, &format!("{name}.mtx"));
    let o = globcert(&["gen", name, "-o", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

const KEYS: [&str; 8] = ["quantity", "gamma_final", "minimizer", "status", "restarts", "samples_per_round", "notes", "wall_time_s"];

fn check_schema(v: &Value) {
    let obj = v.as_object().unwrap();
    let mut keys: Vec<&str> = obj.keys().map(|k| k.as_str()).collect();
    keys.sort();
    let mut want = KEYS.to_vec();
    want.sort();
    assert_eq!(keys, want);
    assert!(v["status"].is_string());
    assert!(v["restarts"].is_array() && v["samples_per_round"].is_array());
    assert!(v["wall_time_s"].as_f64().unwrap() >= 0.0);
    if !v["minimizer"].is_null() {
        assert!(v["minimizer"]["re"].is_f64() && v["minimizer"]["im"].is_f64());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn matrix_market_round_trip(rows in 1usize..6, cols in 1usize..6, seed in any::<u64>(), coordinate in any::<bool>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let m = ComplexMatrix::from_fn(rows, cols, |_, _| {
            let scale = 10f64.powi(rng.random_range(-8..8));
            C64::new(rng.random_range(-1.0..1.0) * scale, rng.random_range(-1.0..1.0) * scale)
        });
        let layout = if coordinate { Layout::Coordinate } else { Layout::Array };
        let back = mm::parse_matrix(&mm::format_matrix(&m, layout)).unwrap();
        for i in 0..rows {
            for j in 0..cols {
                let (a, b) = (m.get(i, j), back.get(i, j));
                prop_assert!((a - b).norm() <= 1e-15 * a.norm());
            }
        }
    }
}

#[test]
fn kreiss_c_json_and_trace() {
    let dir = TempDir::new().unwrap();
    let a = gen(&dir, "jordan");
    let (json, trace) = (path(&dir, "out.json"), path(&dir, "cert.csv"));
    let o = globcert(&["kreiss-c", s(&a), "--start", "1+1i", "--json", s(&json), "--trace", s(&trace)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&json);
    check_schema(&v);
    assert_eq!(v["status"], "converged");
    assert!((v["quantity"].as_f64().unwrap() - 2.6).abs() < 1e-12);
    let n_restarts = v["restarts"].as_array().unwrap().iter().filter(|r| r["terminal"] == false).count();
    assert_eq!(v["samples_per_round"].as_array().unwrap().len(), n_restarts + 1);

    let csv = std::fs::read_to_string(&trace).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("round,gamma,theta,value,n_candidates,stage"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    let total: u64 = v["samples_per_round"].as_array().unwrap().iter().map(|x| x.as_u64().unwrap()).sum();
    assert!(rows.len() as u64 >= total);
    for r in &rows {
        assert_eq!(r.len(), 6);
        assert!(["probe", "final-min", "root-midpoint"].contains(&r[5]));
        let theta: f64 = r[2].parse().unwrap();
        // Real A: only the upper half of the angle range is sampled.
        assert!((0.0..=std::f64::consts::FRAC_PI_2).contains(&theta), "{theta}");
    }
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("2.6000000000000"), "{stdout}");
}

#[test]
fn exit_codes_follow_status() {
    let dir = TempDir::new().unwrap();
    let normal = path(&dir, "normal.mtx");
    std::fs::write(&normal, "%%MatrixMarket matrix coordinate complex general\n2 2 2\n1 1 -1 0\n2 2 -2 0\n").unwrap();
    let json = path(&dir, "n.json");
    let o = globcert(&["kreiss-c", s(&normal), "--json", s(&json)]);
    assert_eq!(o.status.code(), Some(0));
    let v = read_json(&json);
    check_schema(&v);
    assert_eq!(v["status"], "trivial-normal");
    assert_eq!(v["quantity"], 1.0);
    assert_eq!(v["restarts"], Value::Array(vec![]));

    let unstable = path(&dir, "unstable.mtx");
    std::fs::write(&unstable, "%%MatrixMarket matrix array real general\n2 2\n0.5\n0\n1\n-1\n").unwrap();
    let json = path(&dir, "u.json");
    let o = globcert(&["kreiss-c", s(&unstable), "--json", s(&json)]);
    assert_eq!(o.status.code(), Some(2));
    let v = read_json(&json);
    check_schema(&v);
    assert_eq!(v["status"], "unstable-infinite");
    assert!(v["quantity"].is_null());

    let a = path(&dir, "a.mtx");
    let b = path(&dir, "b.mtx");
    let o = globcert(&["gen", "two-basin-dtu", "-o", s(&a), "--b-out", s(&b)]);
    assert!(o.status.success());
    let o = globcert(&["dtu", s(&a), s(&b), "--start", "0.9", "--max-restarts", "0"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = TempDir::new().unwrap();
    let a = gen(&dir, "coupled-discrete");
    let o = globcert(&["kreiss-d", s(&a), "--start", "0.5"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("--start") && err.contains("infeasible"), "{err}");
    let o = globcert(&["kreiss-d", s(&a), "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--bogus"));
    let o = globcert(&["kreiss-d", s(&a), "--min-samples", "10"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--min-samples"));
    let o = globcert(&["kreiss-d", s(&path(&dir, "missing.mtx"))]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(globcert(&["--help"]).status.code(), Some(0));
    let bad = path(&dir, "bad.mtx");
    std::fs::write(&bad, "%%MatrixMarket matrix array real general\n2 2\n1\n2\nx\n4\n").unwrap();
    let o = globcert(&["kreiss-d", s(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.mtx:5"));
}

#[test]
fn output_is_independent_of_workers() {
    let dir = TempDir::new().unwrap();
    let a = gen(&dir, "two-basin-discrete");
    let run = |w: &str| {
        let json = path(&dir, &format!("w{w}.json"));
        let o = globcert(&["kreiss-d", s(&a), "--start", "2", "--workers", w, "--json", s(&json)]);
        assert!(o.status.success());
        let mut v = read_json(&json);
        v.as_object_mut().unwrap().remove("wall_time_s");
        v
    };
    let base = run("1");
    assert!(!base["restarts"].as_array().unwrap().is_empty());
    for w in ["4", "8"] {
        assert_eq!(run(w), base);
    }
    // The environment variable stands in for the flag.
    let o = Command::new(env!("CARGO_BIN_EXE_globcert"))
        .args(["kreiss-d", s(&a), "--start", "2"])
        .env("GLOBCERT_WORKERS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_against_a_result() {
    let dir = TempDir::new().unwrap();
    let a = gen(&dir, "coupled-discrete");
    let json = path(&dir, "r.json");
    assert!(globcert(&["kreiss-d", s(&a), "--json", s(&json)]).status.success());
    let o = globcert(&["verify", "kreiss-d", s(&a), "--result", s(&json)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("verdict      agree"));
    let o = globcert(&["verify", "kreiss-d", s(&a), "--value", "1.2"]);
    assert_eq!(o.status.code(), Some(4));
    let o = globcert(&["verify", "dtu", s(&a)]);
    assert_eq!(o.status.code(), Some(1));
}
