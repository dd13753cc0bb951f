use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use grasskit_cli::io::{read_json, to_json, write_json, MatrixFile, OracleTableFile};
use serde_json::Value;
use tempfile::TempDir;

fn grasskit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_grasskit")).current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = grasskit(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn value_of(report: &str, key: &str) -> f64 {
    report
        .lines()
        .find_map(|l| l.strip_prefix(key).and_then(|rest| rest.strip_prefix(' ')))
        .unwrap_or_else(|| panic!("no '{key}' in {report}"))
        .parse()
        .unwrap()
}

fn real_matrix(dir: &Path, name: &str, rows: &[&[f64]]) -> PathBuf {
    let file = MatrixFile {
        field: "real".into(),
        rows: rows.len(),
        cols: rows[0].len(),
        data: rows.iter().map(|r| r.iter().map(|&x| grasskit_cli::io::Entry::Real(x)).collect()).collect(),
    };
    let path = dir.join(name);
    write_json(&path, &file).unwrap();
    path
}

/// `S = e₁e₁*` and `T(d)`, the projection onto `(√d, √(1−d))`, padded with
/// `pad` zero rows and columns.
fn s_and_t(dir: &Path, d: f64, pad: usize) -> (PathBuf, PathBuf) {
    let m = (d * (1.0 - d)).sqrt();
    let size = 2 + pad;
    let grid = |top: [[f64; 2]; 2]| -> Vec<Vec<f64>> {
        (0..size).map(|i| (0..size).map(|j| if i < 2 && j < 2 { top[i][j] } else { 0.0 }).collect()).collect()
    };
    let s = grid([[1.0, 0.0], [0.0, 0.0]]);
    let t = grid([[d, m], [m, 1.0 - d]]);
    let s_rows: Vec<&[f64]> = s.iter().map(Vec::as_slice).collect();
    let t_rows: Vec<&[f64]> = t.iter().map(Vec::as_slice).collect();
    (real_matrix(dir, "s.json", &s_rows), real_matrix(dir, "t.json", &t_rows))
}

#[test]
fn gap_and_angles_of_s_and_t() {
    let dir = TempDir::new().unwrap();
    let (s, t) = s_and_t(dir.path(), 0.25, 0);
    let report = ok(dir.path(), &["gap", s.to_str().unwrap(), t.to_str().unwrap()]);
    assert!(report.starts_with("# grasskit gap eq_tol=1e-9 rank_tol=1e-8 cluster_tol=1e-8\n"));
    assert!((value_of(&report, "gap") - 0.75f64.sqrt()).abs() < 1e-12);
    assert!(value_of(&report, "doubling_max_dev") < 1e-12);

    let same = ok(dir.path(), &["angles", s.to_str().unwrap(), s.to_str().unwrap()]);
    assert_eq!(value_of(&same, "gap"), 0.0);
    assert!(same.contains("angles_rad [0.0000000000000000e0]"));
}

#[test]
fn canon_examples() {
    let dir = TempDir::new().unwrap();
    let (s, t) = s_and_t(dir.path(), 0.25, 1);
    let out = ok(dir.path(), &["canon", s.to_str().unwrap(), t.to_str().unwrap(), "--emit-w", "w.json"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!((v["p"].as_u64(), v["r"].as_u64()), (Some(0), Some(0)));
    assert!((v["ds"][0].as_f64().unwrap() - 0.25).abs() < 1e-12);
    let w = read_json::<MatrixFile>(&dir.path().join("w.json")).unwrap().to_matrix().unwrap();
    assert!(w.unitarity_residual() < 1e-12);

    let same: Value =
        serde_json::from_str(&ok(dir.path(), &["canon", s.to_str().unwrap(), s.to_str().unwrap()])).unwrap();
    assert_eq!((same["p"].as_u64(), same["r"].as_u64()), (Some(1), Some(0)));

    ok(
        dir.path(),
        &[
            "gen",
            "pair",
            "--gap-regime",
            "orthogonal",
            "--d",
            "4",
            "--n",
            "2",
            "--out-p",
            "p.json",
            "--out-q",
            "q.json",
        ],
    );
    let orth = ok(dir.path(), &["canon", "p.json", "q.json"]);
    assert!(orth.starts_with(r#"{"p":0,"r":2,"ds":[],"#), "{orth}");
}

#[test]
fn gen_is_deterministic_and_files_round_trip() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let args = ["gen", "pair", "--gap-regime", "adjacent", "--d", "5", "--n", "2", "--seed", "7"];
    ok(d, &[&args[..], &["--out-p", "p1.json", "--out-q", "q1.json"]].concat());
    ok(d, &[&args[..], &["--out-p", "p2.json", "--out-q", "q2.json"]].concat());
    let p1 = std::fs::read(d.join("p1.json")).unwrap();
    assert_eq!(p1, std::fs::read(d.join("p2.json")).unwrap());
    assert_eq!(std::fs::read(d.join("q1.json")).unwrap(), std::fs::read(d.join("q2.json")).unwrap());

    let parsed: MatrixFile = read_json(&d.join("p1.json")).unwrap();
    let rewritten = to_json(&MatrixFile::from_matrix(&parsed.to_matrix().unwrap())).unwrap() + "\n";
    assert_eq!(rewritten.as_bytes(), p1.as_slice());

    let rank = ok(d, &["adjacent", "p1.json", "q1.json"]);
    assert!(rank.contains("adjacent true\nrank_diff 2\n"));
    let tops = ok(d, &["adjacent", "p1.json", "q1.json", "--method", "tops"]);
    assert!(tops.contains("adjacent true\n"));
}

#[test]
fn orthogonal_pair_refuted_by_tops() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "gen",
            "pair",
            "--gap-regime",
            "orthogonal",
            "--d",
            "5",
            "--n",
            "2",
            "--field",
            "real",
            "--out-p",
            "p.json",
            "--out-q",
            "q.json",
        ],
    );
    let tops = ok(d, &["adjacent", "p.json", "q.json", "--method", "tops"]);
    assert!(tops.contains("adjacent false\nwitness infinite\n"), "{tops}");
    let same = ok(d, &["adjacent", "p.json", "p.json"]);
    assert!(same.contains("adjacent false\n"));
}

#[test]
fn mpq_subcommands() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let w = ok(d, &["mpq", "witness", "--d", "0", "--eps", "0.01"]);
    let gap_s: f64 = w.lines().find(|l| l.starts_with("outside ")).unwrap().split(' ').nth(4).unwrap().parse().unwrap();
    assert!(gap_s > std::f64::consts::FRAC_1_SQRT_2);
    assert!(w.contains("outside_s true inside_t true"));

    ok(
        d,
        &[
            "gen",
            "pair",
            "--gap-regime",
            "orthogonal",
            "--d",
            "6",
            "--n",
            "2",
            "--seed",
            "2",
            "--out-p",
            "p.json",
            "--out-q",
            "q.json",
        ],
    );
    ok(d, &["mpq", "sample", "p.json", "q.json", "--seed", "5", "--out", "r.json"]);
    assert!(ok(d, &["mpq", "check", "p.json", "q.json", "r.json"]).contains("member: true"));
    let ex = ok(d, &["mpq", "extract", "p.json", "q.json", "r.json", "--out", "u.json"]);
    assert!(value_of(&ex, "unitarity_residual") < 1e-8);
    assert!(!ok(d, &["mpq", "check", "p.json", "q.json", "q.json"]).contains("member: true"));
}

#[test]
fn recover_from_matrices_and_tables() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(d, &["gen", "unitary", "--d", "4", "--seed", "11", "--out", "u.json"]);
    let json: Value =
        serde_json::from_str(&ok(d, &["recover", "--from-u", "u.json", "--kind", "antiunitary", "--n", "2"])).unwrap();
    assert_eq!(json["kind"], "antiunitary");
    assert_eq!(json["form"], "standard");
    assert!(json["residual"].as_f64().unwrap() < 1e-7);

    let id = real_matrix(
        d,
        "id.json",
        &[&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0], &[0.0, 0.0, 1.0, 0.0], &[0.0, 0.0, 0.0, 1.0]],
    );
    let json: Value =
        serde_json::from_str(&ok(d, &["recover", "--from-u", id.to_str().unwrap(), "--form", "complement"])).unwrap();
    assert_eq!(json["form"], "complement");

    ok(d, &["make-table", "--from-u", "u.json", "--n", "2", "--seed", "3", "--out", "table.json"]);
    let json: Value = serde_json::from_str(&ok(d, &["recover", "--table", "table.json", "--seed", "3"])).unwrap();
    assert_eq!((json["kind"].as_str(), json["form"].as_str()), (Some("unitary"), Some("standard")));

    // A table built for another seed misses the first query and echoes it.
    let miss = grasskit(d, &["recover", "--table", "table.json", "--seed", "4"]);
    assert_eq!(code(&miss), 6);
    let echoed: MatrixFile = serde_json::from_slice(&miss.stdout).unwrap();
    assert_eq!((echoed.rows, echoed.cols), (4, 4));

    // query-set lists exactly what the table was built from.
    ok(d, &["query-set", "--d", "4", "--n", "2", "--seed", "3", "--out", "qs.json"]);
    let qs: Value = read_json(&d.join("qs.json")).unwrap();
    let table: OracleTableFile = read_json(&d.join("table.json")).unwrap();
    assert_eq!(qs["queries"].as_array().unwrap().len(), table.pairs.len());
}

#[test]
fn recover_rejects_a_constant_map() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(d, &["gen", "unitary", "--d", "4", "--seed", "1", "--out", "u.json"]);
    ok(d, &["make-table", "--from-u", "u.json", "--n", "2", "--out", "table.json"]);
    let mut table: OracleTableFile = read_json(&d.join("table.json")).unwrap();
    let fixed = table.pairs[0].output.clone();
    for pair in &mut table.pairs {
        pair.output = fixed.clone();
    }
    write_json(&d.join("constant.json"), &table).unwrap();
    assert_eq!(code(&grasskit(d, &["recover", "--table", "constant.json"])), 5);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    std::fs::write(d.join("garbage.json"), "{not json").unwrap();
    assert_eq!(code(&grasskit(d, &["gap", "garbage.json", "garbage.json"])), 2);
    assert_eq!(code(&grasskit(d, &["gap", "missing.json", "missing.json"])), 2);
    assert_eq!(code(&grasskit(d, &["frobnicate"])), 2);
    std::fs::write(d.join("mixed.json"), r#"{"field":"real","rows":1,"cols":1,"data":[[[1,0]]]}"#).unwrap();
    assert_eq!(code(&grasskit(d, &["gap", "mixed.json", "mixed.json"])), 2);

    let half = real_matrix(d, "half.json", &[&[0.5, 0.0], &[0.0, 0.5]]);
    assert_eq!(code(&grasskit(d, &["gap", half.to_str().unwrap(), half.to_str().unwrap()])), 3);

    let infeasible = grasskit(
        d,
        &["gen", "pair", "--gap-regime", "orthogonal", "--d", "3", "--n", "2", "--out-p", "p", "--out-q", "q"],
    );
    assert_eq!(code(&infeasible), 4);
    ok(d, &["gen", "pair", "--gap-regime", "lt1", "--d", "4", "--n", "2", "--out-p", "p.json", "--out-q", "q.json"]);
    assert_eq!(code(&grasskit(d, &["adjacent", "p.json", "q.json", "--method", "tops"])), 4);
}

#[test]
fn verify_runs_and_detects_faults() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let first = ok(d, &["verify", "--suite", "metric", "--seed", "1", "--trials", "200"]);
    assert!(first.starts_with("grasskit verify suite=metric seed=1 eq_tol=1e-9"));
    assert!(first.contains("SUMMARY passed="));
    assert!(first.contains(" failed=0"));
    assert_eq!(first, ok(d, &["verify", "--suite", "metric", "--seed", "1", "--trials", "200"]));

    let wigner = ok(d, &["verify", "--suite", "wigner", "--trials", "10"]);
    assert!(wigner.contains("  config 00 "));

    let faulty = grasskit(d, &["verify", "--suite", "wigner", "--trials", "10", "--inject-fault"]);
    assert_eq!(code(&faulty), 1);
    assert!(String::from_utf8_lossy(&faulty.stdout).contains("FAIL "));
}
