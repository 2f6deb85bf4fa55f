use std::fs;
use std::process::{Command, Output};

fn selfnorm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_selfnorm")).args(args).output().expect("spawn selfnorm")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn field(line: &str, key: &str) -> f64 {
    line.split_whitespace()
        .find_map(|kv| kv.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in {line}"))
        .parse()
        .unwrap()
}

fn spec_file(dir: &tempfile::TempDir, name: &str, body: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, body).unwrap();
    format!("file:{}", p.display())
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&selfnorm(&["--help"])), 0);
    assert_eq!(code(&selfnorm(&["--version"])), 0);
    assert_eq!(code(&selfnorm(&["tail", "--help"])), 0);
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(code(&selfnorm(&[])), 64);
    assert_eq!(code(&selfnorm(&["frobnicate"])), 64);
    assert_eq!(code(&selfnorm(&["tail", "--dist", "normal"])), 64, "no threshold");
    assert_eq!(code(&selfnorm(&["tail", "--dist", "normal", "--b", "0.5", "--t", "1"])), 64);
    assert_eq!(code(&selfnorm(&["tail", "--dist", "laplace", "--b", "0.5"])), 64);
    assert_eq!(code(&selfnorm(&["tail", "--dist", "normal", "--b", "0.5", "--method", "magic"])), 64);
    assert_eq!(code(&selfnorm(&["tail", "--dist", "normal", "--n", "1", "--b", "0.5"])), 64);
    assert_eq!(code(&selfnorm(&["table", "--dist", "normal", "--b-grid", "0.9:0.1:0.1"])), 64);
    assert_eq!(code(&selfnorm(&["table", "--dist", "normal", "--b-grid", "nonsense"])), 64);
}

#[test]
fn tail_normal_saddle() {
    let out = selfnorm(&["tail", "--dist", "normal", "--n", "5", "--b", "0.5"]);
    assert_eq!(code(&out), 0);
    let p = field(&stdout(&out), "probability");
    assert!((p - 0.1539).abs() < 5e-4, "{p}");
}

#[test]
fn tail_json_has_diagnostics() {
    let out = selfnorm(&["tail", "--dist", "cauchy", "--b", "0.85", "--json"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let p = v["probability"].as_f64().unwrap();
    assert!((p - 0.0052).abs() < 5e-4, "{p}");
    assert!(v["diagnostics"]["t_hat"].as_f64().unwrap() < 0.0);
    assert!(v["diagnostics"]["residual_t"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn domain_errors_exit_2() {
    assert_eq!(code(&selfnorm(&["tail", "--dist", "t2", "--b", "0.5", "--method", "edgeworth"])), 2);
    assert_eq!(code(&selfnorm(&["tail", "--dist", "normal", "--b", "0.999"])), 2);
    assert_eq!(code(&selfnorm(&["tail", "--dist", "normal", "--b", "1.5", "--method", "normal"])), 2);
}

#[test]
fn t_zero_is_half() {
    let out = selfnorm(&["tail", "--dist", "normal", "--t", "0"]);
    assert_eq!(code(&out), 0);
    assert_eq!(field(&stdout(&out), "probability"), 0.5);
}

#[test]
fn nonzero_mean_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = spec_file(&dir, "u.spec", "support: 0 1\ndensity: 1\n");
    assert_eq!(code(&selfnorm(&["tail", "--dist", &d, "--b", "0.5"])), 2);
}

#[test]
fn table_row_counts() {
    let out = selfnorm(&["table", "--dist", "normal", "--b-grid", "0.05:0.95:0.05", "--methods", "saddle,normal"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "b,true_mc,saddle,re_saddle,normal,re_normal,edgeworth,re_edgeworth,ld,re_ld");
    assert_eq!(lines.count(), 19);

    let out = selfnorm(&[
        "table", "--dist", "cauchy", "--b-grid", "0.40:0.90:0.05", "--methods", "mc,saddle", "--reps", "20000",
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).lines().count(), 12);
    let meta = String::from_utf8(out.stderr).unwrap();
    assert!(meta.contains("seed=0") && meta.contains("reps=20000"), "{meta}");
}

#[test]
fn unwritable_out_exits_73() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("missing").join("t.csv");
    let out = selfnorm(&[
        "table", "--dist", "normal", "--b-grid", "0.1:0.2:0.1", "--methods", "normal", "--out", bad.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 73);
}

#[test]
fn csv_and_json_agree() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("t.csv");
    let json_path = dir.path().join("t.json");
    let common = ["table", "--dist", "t2", "--b-grid", "0.2:0.8:0.2", "--methods", "saddle,normal,ld"];
    let mut a: Vec<&str> = common.to_vec();
    a.extend(["--out", csv_path.to_str().unwrap()]);
    assert_eq!(code(&selfnorm(&a)), 0);
    let mut a: Vec<&str> = common.to_vec();
    a.extend(["--format", "json", "--out", json_path.to_str().unwrap()]);
    assert_eq!(code(&selfnorm(&a)), 0);

    let rows: Vec<serde_json::Value> = serde_json::from_str(&fs::read_to_string(&json_path).unwrap()).unwrap();
    let mut rdr = csv::Reader::from_path(&csv_path).unwrap();
    let headers = rdr.headers().unwrap().clone();
    let records: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(records.len(), rows.len());
    for (rec, row) in records.iter().zip(&rows) {
        for (h, cell) in headers.iter().zip(rec.iter()) {
            match row[h].as_f64() {
                None => assert!(cell.is_empty(), "{h}: {cell}"),
                Some(x) => {
                    let y: f64 = cell.parse().unwrap();
                    // one unit in the sixth significant digit
                    let ulp6 = 10f64.powf(x.abs().log10().floor() - 5.0);
                    assert!((x - y).abs() <= ulp6, "{h}: {x} vs {y}");
                }
            }
        }
    }
}

#[test]
fn mc_output_independent_of_workers() {
    let run = |w: &str| selfnorm(&["mc", "--dist", "exp", "--b", "0.3", "--reps", "100000", "--seed", "7", "--workers", w]);
    let (one, eight) = (run("1"), run("8"));
    assert_eq!(code(&one), 0);
    assert_eq!(one.stdout, eight.stdout);
    assert!(stdout(&one).contains("seed=7"));
}

#[test]
fn mc_student_t_threshold() {
    let out = selfnorm(&["mc", "--dist", "normal", "--t", "2.776445", "--reps", "200000", "--json"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let (p, se) = (v["p_hat"].as_f64().unwrap(), v["std_err"].as_f64().unwrap());
    assert!((p - 0.025).abs() < 4.0 * se, "{p} ± {se}");
}

#[test]
fn mc_without_quantile_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = spec_file(&dir, "s.spec", "support: -1 1\ndensity: 0.5\n");
    let out = selfnorm(&["mc", "--dist", &d, "--b", "0.5", "--reps", "1000"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8(out.stderr).unwrap().contains("quantile"));
}

#[test]
fn verify_normal_passes() {
    let out = selfnorm(&["verify", "--dist", "normal"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).lines().filter(|l| l.starts_with("PASS")).count() >= 10);
}

#[test]
fn verify_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = spec_file(&dir, "su.spec", "name: sym_unif\nsupport: -1 1\ndensity: 0.5\nquantile: 2*p - 1\n");
    let out = selfnorm(&["verify", "--dist", &d, "--b-grid", "0.2:0.8:0.3", "--json"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["distribution"], "sym_unif");
}
