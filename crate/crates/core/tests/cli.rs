use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

fn elliptest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_elliptest"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn loads_wide_fixture() {
    let loaded = elliptest::load_panel(&fixture("returns_2006.csv"), elliptest::PanelFormat::ReturnsCsv).unwrap();
    assert_eq!(loaded.panel.n_stocks(), 100);
    assert_eq!(loaded.panel.n_dates(), 250);
    assert_eq!(loaded.dropped_rows, 0);
}

#[test]
fn year_command_writes_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let input = fixture("returns_2006.csv");
    let out = elliptest(&[
        "year",
        "--input",
        input.to_str().unwrap(),
        "--alpha",
        "0.05",
        "--alpha",
        "0.5",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let summary = std::fs::read_to_string(tmp.path().join("summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines[0], "year,alpha,rejected");
    assert_eq!(lines.len(), 3);
    for line in &lines[1..] {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells.len(), 3);
        assert_eq!(cells[0], "2006");
        assert!(cells[2].parse::<usize>().is_ok(), "{line}");
    }
    let pairs = std::fs::read_to_string(tmp.path().join("pairs_2006_alpha_0.05.csv")).unwrap();
    assert_eq!(pairs.lines().count(), 1 + 100 * 99 / 2);
    let dot = std::fs::read_to_string(tmp.path().join("graph_2006_alpha_0.05.dot")).unwrap();
    assert!(dot.starts_with("graph rejection {"));
}

#[test]
fn period_meta_json_has_both_modes() {
    let tmp = tempfile::tempdir().unwrap();
    let inputs = fixture("period/*.csv");
    let out = elliptest(&[
        "period",
        "--inputs",
        inputs.to_str().unwrap(),
        "--meta-mode",
        "exclusive",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("meta.json")).unwrap()).unwrap();
    let m = &meta[0];
    assert_eq!(m["n_years"], 5);
    assert_eq!(m["mode"], "exclusive");
    assert_eq!(m["p_value"], m["p_value_exclusive"]);
    assert!(m["p_value_inclusive"].as_f64().unwrap() >= m["p_value_exclusive"].as_f64().unwrap());
    let table = std::fs::read_to_string(tmp.path().join("table.csv")).unwrap();
    assert_eq!(table.lines().next().unwrap(), "year,alpha=0.05");
    assert_eq!(table.lines().count(), 6);
}

#[test]
fn disjoint_dates_fail_with_input_error() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("gappy.csv");
    std::fs::write(&csv, "date,A,B\n2020-01-02,0.1,\n2020-01-03,,0.2\n").unwrap();
    let out = elliptest(&["year", "--input", csv.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("no common dates"), "{}", stderr(&out));
}

#[test]
fn bad_usage_and_missing_files_exit_2() {
    assert_eq!(elliptest(&["year"]).status.code(), Some(2));
    assert_eq!(elliptest(&["lab", "--experiment", "speed"]).status.code(), Some(2));
    let out = elliptest(&["year", "--input", "/nonexistent/x.csv", "--out", "/tmp/unused"]);
    assert_eq!(out.status.code(), Some(2));
    let out = elliptest(&["period", "--inputs", "/nonexistent/*.csv", "--out", "/tmp/unused"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("no files match"));
}

#[test]
fn short_year_reports_shortfall() {
    let tmp = tempfile::tempdir().unwrap();
    let input = fixture("returns_2006.csv");
    let out = elliptest(&[
        "year",
        "--input",
        input.to_str().unwrap(),
        "--n",
        "200",
        "--m",
        "100",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("short by 50"), "{}", stderr(&out));
}

#[test]
fn lab_size_writes_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("lab.toml");
    std::fs::write(&cfg, "families = [\"normal\"]\nrhos = [0.5]\nn = 30\nm = 30\nreps = 1000\n").unwrap();
    let csv = tmp.path().join("size.csv");
    let out = elliptest(&[
        "lab",
        "--experiment",
        "size",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "4",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "family,rho,nu,n,m,alpha,reps,seed,rate,se");
    assert!(lines.next().unwrap().starts_with("normal,0.5,,30,30,0.05,1000,4,"));
}
