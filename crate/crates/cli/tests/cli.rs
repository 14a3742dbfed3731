use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn balancelab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_balancelab"))
        .args(args)
        .env("BALANCELAB_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn run_fixture(out: &Path) -> Output {
    let config = fixtures().join("config.json");
    balancelab(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ])
}

fn artifact_files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_dir() {
            out.extend(artifact_files(&p));
        } else if matches!(
            p.extension().and_then(|e| e.to_str()),
            Some("csv" | "json" | "svg")
        ) {
            out.push(p);
        }
    }
    out.sort();
    out
}

#[test]
fn bundled_fixture_matches_generator() {
    let dir = tempfile::tempdir().unwrap();
    let status = balancelab(&["fixture", dir.path().to_str().unwrap()]);
    assert!(status.status.success());
    for name in ["prices.csv", "sectors.csv", "epu.csv"] {
        let fresh = std::fs::read(dir.path().join(name)).unwrap();
        let bundled = std::fs::read(fixtures().join(name)).unwrap();
        assert!(fresh == bundled, "{name} differs from the generator output");
    }
}

#[test]
fn fixture_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_fixture(dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for name in [
        "balance.csv",
        "dcs.csv",
        "report.json",
        "balance.svg",
        "dcs.svg",
        "degrees.svg",
    ] {
        assert!(dir.path().join(name).is_file(), "{name}");
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["tickers"].as_array().unwrap().len(), 10);
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(run_fixture(a.path()).status.success());
    assert!(run_fixture(b.path()).status.success());
    let fa = artifact_files(a.path());
    let fb = artifact_files(b.path());
    assert_eq!(fa.len(), fb.len());
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(
            x.strip_prefix(a.path()).unwrap(),
            y.strip_prefix(b.path()).unwrap()
        );
        assert!(
            std::fs::read(x).unwrap() == std::fs::read(y).unwrap(),
            "{}",
            x.display()
        );
    }
}

#[test]
fn bad_epsilon_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixtures().join("config.json");
    let out = balancelab(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--epsilon",
        "1.5",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        std::fs::read_dir(dir.path()).unwrap().next().is_none(),
        "nothing computed"
    );
}

#[test]
fn missing_prices_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let out = balancelab(&[
        "ingest",
        "--prices",
        missing.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_prices_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let prices = dir.path().join("prices.csv");
    std::fs::write(&prices, "when,what\n1,2\n").unwrap();
    let out = balancelab(&[
        "ingest",
        "--prices",
        prices.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("ingest"));
}

#[test]
fn simulate_writes_requested_edges() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("net.csv");
    let out = balancelab(&[
        "simulate",
        "--n",
        "50",
        "--m-neg",
        "500",
        "--m-pos",
        "100",
        "--s",
        "10",
        "--seed",
        "1",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&path).unwrap();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers().unwrap().clone();
    let wcol = headers.iter().position(|h| h == "weight").unwrap();
    let weights: Vec<f64> = reader
        .records()
        .map(|r| r.unwrap())
        .filter(|r| !r[wcol].is_empty())
        .map(|r| r[wcol].parse().unwrap())
        .collect();
    assert_eq!(weights.len(), 600);
    assert_eq!(weights.iter().filter(|w| **w < 0.0).count(), 500);
    let infeasible = balancelab(&[
        "simulate", "--n", "10", "--m-neg", "5", "--m-pos", "0", "--s", "5",
    ]);
    assert_eq!(infeasible.status.code(), Some(3));
}

#[test]
fn constant_balance_is_not_a_transition() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("balance.csv");
    let mut text = String::from("date,K,beta_rel,m_pos,m_neg\n");
    for w in 0..120u64 {
        let d = chrono::NaiveDate::from_ymd_opt(2001, 1, 5).unwrap() + chrono::Days::new(7 * w);
        text.push_str(&format!("{d},0.9,1,10,5\n"));
    }
    std::fs::write(&input, text).unwrap();
    let out = balancelab(&[
        "detect-but",
        "--input",
        input.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let but: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("but.json")).unwrap())
            .unwrap();
    assert_eq!(but["detected"], serde_json::Value::Bool(false));
}

#[test]
fn single_date_tau_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixtures().join("config.json");
    let common = [
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ];
    for stage in ["ingest", "returns"] {
        let out = balancelab(&[&[stage], &common[..]].concat());
        assert!(
            out.status.success(),
            "{stage}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let out = balancelab(&[&["tau", "--date", "2011-09-30"], &common[..]].concat());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let files: Vec<_> = std::fs::read_dir(dir.path().join("tau")).unwrap().collect();
    assert_eq!(files.len(), 1);
    let snap = dir.path().join("tau").join("2011-09-30.csv");
    let rows = std::fs::read_to_string(snap).unwrap().lines().count();
    assert_eq!(rows, 1 + 45);
}

#[test]
fn stages_compose_and_rerun_identically() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_fixture(dir.path()).status.success());
    let config = fixtures().join("config.json");
    let common = [
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ];
    for (stage, file) in [
        ("degrees", "degrees.csv"),
        ("dcs", "dcs.csv"),
        ("balance", "balance_cross.csv"),
    ] {
        let path = dir.path().join(file);
        let before = std::fs::read(&path).unwrap();
        std::fs::remove_file(&path).unwrap();
        let out = balancelab(&[&[stage], &common[..]].concat());
        assert!(out.status.success(), "{stage}");
        assert!(std::fs::read(&path).unwrap() == before, "{stage}");
    }
}
