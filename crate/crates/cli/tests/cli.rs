//! End-to-end runs of the `nashgrid` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BUNDLED_CONFIG: &str = include_str!("../../core/data/pjm5.toml");
const BUNDLED_SCENARIOS: &str = include_str!("../../core/data/pjm5_scenarios.tsv");

fn nashgrid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nashgrid"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn text(out: &Output) -> String {
    format!(
        "{}{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    )
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn solve_bundled(dir: &TempDir) -> PathBuf {
    let out = dir.path().join("solve");
    let run = nashgrid(&["solve", "--out", path(&out)]);
    assert_eq!(run.status.code(), Some(0), "{}", text(&run));
    out
}

#[test]
fn solve_then_verify_passes() {
    let dir = TempDir::new().unwrap();
    let out = solve_bundled(&dir);
    for table in ["producers.tsv", "suppliers.tsv", "forward_ratios.tsv", "area_prices.tsv", "line_loadings.tsv", "price_comparison.tsv"] {
        assert!(out.join(table).exists(), "missing {table}");
    }
    let run = nashgrid(&["verify", path(&out.join("solution.json"))]);
    assert_eq!(run.status.code(), Some(0), "{}", text(&run));
    assert!(text(&run).contains("all checks passed"));
}

#[test]
fn edited_primal_fails_verification_and_names_the_block() {
    let dir = TempDir::new().unwrap();
    let out = solve_bundled(&dir);
    let file = out.join("solution.json");
    let mut doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&file).unwrap()).unwrap();
    let q = &mut doc["producers"][0]["q_dp"][0];
    *q = serde_json::json!(q.as_f64().unwrap() + 25.0);
    fs::write(&file, serde_json::to_string_pretty(&doc).unwrap()).unwrap();
    let run = nashgrid(&["verify", path(&file)]);
    assert_eq!(run.status.code(), Some(4), "{}", text(&run));
    assert!(text(&run).contains("producer_dispatch"), "{}", text(&run));
}

#[test]
fn stale_config_is_a_hash_mismatch() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("market.toml");
    fs::write(&cfg, BUNDLED_CONFIG).unwrap();
    let out = dir.path().join("solve");
    let run = nashgrid(&["solve", "--config", path(&cfg), "--out", path(&out)]);
    assert_eq!(run.status.code(), Some(0), "{}", text(&run));
    fs::write(&cfg, BUNDLED_CONFIG.replacen("a = 20.0", "a = 21.0", 1)).unwrap();
    let run = nashgrid(&["verify", path(&out.join("solution.json")), "--config", path(&cfg)]);
    assert_eq!(run.status.code(), Some(4), "{}", text(&run));
    assert!(text(&run).contains("config hash mismatch"), "{}", text(&run));
}

#[test]
fn malformed_config_exits_with_schema_status() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("broken.toml");
    fs::write(&cfg, "name = \"broken\"\n[[areas]]\nid = 3\n").unwrap();
    let run = nashgrid(&["solve", "--config", path(&cfg), "--out", path(&dir.path().join("o"))]);
    assert_eq!(run.status.code(), Some(2), "{}", text(&run));
}

#[test]
fn scenario_generation_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a.tsv"), dir.path().join("b.tsv"));
    for f in [&a, &b] {
        let run = nashgrid(&["scenarios", "--seed", "1", "--out", path(f)]);
        assert_eq!(run.status.code(), Some(0), "{}", text(&run));
    }
    let first = fs::read_to_string(&a).unwrap();
    assert_eq!(first, fs::read_to_string(&b).unwrap());
    assert_eq!(first, BUNDLED_SCENARIOS);
}

fn experiment(dir: &TempDir, scale: &str) -> String {
    let out = dir.path().join(format!("exp{scale}"));
    let run = nashgrid(&["congestion-experiment", "--scale", scale, "--out", path(&out)]);
    assert_eq!(run.status.code(), Some(0), "{}", text(&run));
    assert!(out.join("base").join("solution.json").exists());
    assert!(out.join("scaled").join("solution.json").exists());
    fs::read_to_string(out.join("congestion.tsv")).unwrap()
}

fn column(table: &str, name: &str) -> Vec<f64> {
    let mut lines = table.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap().split('\t').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split('\t').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn unit_scale_experiment_changes_nothing() {
    let dir = TempDir::new().unwrap();
    let table = experiment(&dir, "1.0");
    for name in ["ratio_delta", "price_delta"] {
        assert!(column(&table, name).iter().all(|d| d.abs() < 1e-4), "{table}");
    }
}

#[test]
fn ample_lines_collapse_area_prices() {
    let dir = TempDir::new().unwrap();
    experiment(&dir, "10");
    let prices = fs::read_to_string(dir.path().join("exp10").join("scaled").join("area_prices.tsv")).unwrap();
    for row in prices.lines().skip(1) {
        let v: Vec<f64> = row.split('\t').skip(2).map(|x| x.parse().unwrap()).collect();
        assert!(v.iter().all(|p| (p - v[0]).abs() < 1e-4), "{row}");
    }
}
