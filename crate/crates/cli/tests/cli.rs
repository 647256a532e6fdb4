use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use typebound::bounds::code_achievability_rhs;
use typebound::{build_spectrum, Channel, Functional, InputType};

const HEADER: &str = "n,R,Gamma,variant,value,raw,gamma_star,type_star,penalty_log2,wall_time_ms";

const BSC01: &str = r#"
input_alphabet = ["0", "1"]
output_alphabet = ["0", "1"]
matrix = [[0.9, 0.1], [0.1, 0.9]]
"#;

const NOISELESS: &str = r#"
input_alphabet = ["0", "1"]
output_alphabet = ["0", "1"]
matrix = [[1.0, 0.0], [0.0, 1.0]]
cost = [0.0, 1.0]
"#;

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("bsc01.toml"), BSC01).unwrap();
        std::fs::write(dir.path().join("noiseless.toml"), NOISELESS).unwrap();
        Self { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write(&self, name: &str, text: &str) -> PathBuf {
        let p = self.path(name);
        std::fs::write(&p, text).unwrap();
        p
    }
}

fn run(channel: Option<&Path>, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_typebound"));
    if let Some(c) = channel {
        cmd.arg("--channel").arg(c);
    }
    cmd.args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<csv::StringRecord> {
    csv::Reader::from_reader(text.as_bytes())
        .records()
        .map(Result::unwrap)
        .collect()
}

fn num(rec: &csv::StringRecord, i: usize) -> f64 {
    rec[i].parse().unwrap()
}

#[test]
fn capacity_of_bsc() {
    let f = Fixture::new();
    let o = run(Some(&f.path("bsc01.toml")), &["capacity"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("0.531004"));
    assert_eq!(lines.next(), Some("0=0.500000 1=0.500000"));
}

#[test]
fn capacity_of_noiseless_and_infeasible_budget() {
    let f = Fixture::new();
    let o = run(Some(&f.path("noiseless.toml")), &["capacity"]);
    assert_eq!(stdout(&o).lines().next(), Some("1.000000"));
    let o = run(Some(&f.path("noiseless.toml")), &["capacity", "--budget=-1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("infeasible cost budget"));
}

#[test]
fn bounds_hand_formula_row() {
    let f = Fixture::new();
    let o = run(
        Some(&f.path("noiseless.toml")),
        &["bounds", "--n", "100", "--rate", "1.1", "--variants", "converse_underline"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some(HEADER));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][3], "converse_underline");
    assert!((num(&rows[0], 4) - 0.9014).abs() < 1e-4);
    assert_eq!(&rows[0][2], "inf");
    assert_eq!(&rows[0][7], "50,50");
}

#[test]
fn bounds_sandwich_and_formats_agree() {
    let f = Fixture::new();
    let ch = f.path("bsc01.toml");
    let csv_out = run(Some(&ch), &["bounds", "--n", "40", "--rate", "0.5"]);
    let rows = csv_rows(&stdout(&csv_out));
    assert_eq!(rows.len(), 4);
    let value = |name: &str| num(rows.iter().find(|r| &r[3] == name).unwrap(), 4);
    let conv = value("converse_underline").max(value("converse_J"));
    assert!(conv <= value("achievability_J").min(value("achievability_I")));

    let json_out = run(Some(&ch), &["bounds", "--n", "40", "--rate", "0.5", "--format", "jsonl"]);
    let lines: Vec<serde_json::Value> = stdout(&json_out)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 4);
    for (rec, js) in rows.iter().zip(&lines) {
        assert!(js["Gamma"].is_null());
        assert_eq!(js["variant"].as_str().unwrap(), &rec[3]);
        // CSV text round-trips to the same doubles
        for (i, key) in [(1, "R"), (4, "value"), (5, "raw"), (6, "gamma_star"), (8, "penalty_log2")] {
            assert_eq!(num(rec, i), js[key].as_f64().unwrap(), "{key}");
        }
        assert_eq!(js["type_star"].as_str().unwrap(), &rec[7]);
    }
}

#[test]
fn unknown_variant_is_usage_error() {
    let f = Fixture::new();
    let o = run(
        Some(&f.path("bsc01.toml")),
        &["bounds", "--n", "10", "--rate", "0.5", "--variants", "converse_K"],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_rates() {
    let f = Fixture::new();
    let o = run(Some(&f.path("bsc01.toml")), &["sweep", "--grid", "R=0.1:0.9:0.1", "--n", "50"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 36);
    assert_eq!(&rows[0][3], "converse_underline");
    assert_eq!(&rows[1][3], "converse_J");
    for variant in ["converse_underline", "converse_J", "achievability_J", "achievability_I"] {
        let col: Vec<&csv::StringRecord> = rows.iter().filter(|r| &r[3] == variant).collect();
        assert_eq!(col.len(), 9);
        assert!(col.windows(2).all(|w| num(w[0], 1) < num(w[1], 1)));
        if variant.starts_with("converse") {
            assert!(col.windows(2).all(|w| num(w[0], 4) <= num(w[1], 4)));
        }
    }
}

#[test]
fn sweep_blocklengths_to_file() {
    let f = Fixture::new();
    let out = f.path("sweep.csv");
    let o = run(
        Some(&f.path("bsc01.toml")),
        &[
            "--output",
            out.to_str().unwrap(),
            "sweep",
            "--grid",
            "n=20:40:10",
            "--rate",
            "0.8",
            "--variants",
            "converse_underline",
        ],
    );
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let rows = csv_rows(&std::fs::read_to_string(out).unwrap());
    let ns: Vec<u32> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(ns, vec![20, 30, 40]);
}

#[test]
fn malformed_grid_is_usage_error() {
    let f = Fixture::new();
    for grid in ["R=0.1:0.9", "q=1:2:1", "R=a:b:c"] {
        let o = run(Some(&f.path("bsc01.toml")), &["sweep", "--grid", grid, "--n", "10"]);
        assert_eq!(o.status.code(), Some(2), "{grid}");
    }
}

#[test]
fn simulate_is_deterministic_and_within_bound() {
    let f = Fixture::new();
    let args = [
        "simulate",
        "--n",
        "16",
        "--composition",
        "8,8",
        "--rate",
        "0.2",
        "--gamma",
        "0.15",
        "--decoder",
        "threshold-j",
        "--trials",
        "5000",
        "--seed",
        "7",
    ];
    let a = run(Some(&f.path("bsc01.toml")), &args);
    let b = run(Some(&f.path("bsc01.toml")), &args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let records: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(records.len(), 5);
    let last = records.last().unwrap();
    for key in ["trials", "errors", "estimate", "wilson_upper_95", "decoder", "gamma"] {
        assert!(last.get(key).is_some(), "{key}");
    }
    assert_eq!(last["trials"].as_u64(), Some(5000));
    assert_eq!(last["decoder"].as_str(), Some("threshold_J"));

    let p = InputType::new(vec![8, 8]);
    let bound = code_achievability_rhs(&build_spectrum(&p, &Channel::bsc(0.1)), Functional::J, 3.0 / 16.0, 0.15);
    let est = last["estimate"].as_f64().unwrap();
    let sigma = (est * (1.0 - est) / 5000.0).sqrt();
    assert!(est <= bound + 3.0 * sigma, "{est} vs {bound}");
}

#[test]
fn simulate_rejects_bad_composition() {
    let f = Fixture::new();
    for comp in ["8,7", "16", "x,y"] {
        let o = run(
            Some(&f.path("bsc01.toml")),
            &["simulate", "--n", "16", "--composition", comp, "--rate", "0.2"],
        );
        assert_eq!(o.status.code(), Some(2), "{comp}");
    }
}

#[test]
fn input_errors_exit_two() {
    let f = Fixture::new();
    let o = run(None, &["capacity"]);
    assert_eq!(o.status.code(), Some(2));
    let bad = f.write(
        "bad.toml",
        "input_alphabet=[\"0\",\"1\"]\noutput_alphabet=[\"0\",\"1\"]\nmatrix=[[0.9,0.2],[0.1,0.9]]\n",
    );
    let o = run(Some(&bad), &["capacity"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 0 sums to 1.1"));
    let o = run(Some(&f.path("missing.toml")), &["capacity"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(Some(&f.path("bsc01.toml")), &["bounds", "--rate", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn selftest_passes_and_detects_fault() {
    let o = run(None, &["selftest"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("selftest: passed"));
    let o = run(None, &["selftest", "--inject-fault"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("types"));
}
