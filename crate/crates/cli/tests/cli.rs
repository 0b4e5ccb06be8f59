use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn tailcop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tailcop"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(dir: &Path, extra: &[&str]) -> PathBuf {
    let out = dir.join("synth");
    let mut args = vec!["synth", "--out", s(&out), "--assets", "4", "--days", "40", "--seed", "3"];
    args.extend_from_slice(extra);
    let o = tailcop(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out.join("prices.csv")
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .map(|d| d.map(|e| e.unwrap().file_name().into_string().unwrap()).collect())
        .unwrap_or_default();
    names.sort();
    names
}

#[test]
fn dynamics_writes_one_grid_per_window() {
    let tmp = tempfile::tempdir().unwrap();
    let prices = synth(tmp.path(), &[]);
    let out = tmp.path().join("dyn");
    let o = tailcop(&["dynamics", "--input", s(&prices), "--out", s(&out), "--dt", "30", "--grid", "10"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        listing(&out),
        ["manifest.json", "relation.csv", "window_000.csv", "window_001.csv", "window_002.csv", "window_003.csv"]
    );
    let relation = fs::read_to_string(out.join("relation.csv")).unwrap();
    assert_eq!(relation.lines().count(), 1 + 4 * 4);
    assert!(relation.starts_with("window_start,window_end,mean_corr,alpha,lambda_lower,lambda_upper,lambda_gauss\n"));
}

#[test]
fn copula_grid_has_m_squared_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let prices = synth(tmp.path(), &[]);
    let out = tmp.path().join("cop");
    let o = tailcop(&["copula", "--input", s(&prices), "--out", s(&out), "--permille"]);
    assert!(o.status.success());
    let text = fs::read_to_string(out.join("copula_grid.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 2500);
    assert!(text.starts_with("i,j,u_hi,v_hi,density,cumulative,density_permille\n"));
    let total: f64 = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(4).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn diff_and_taildep_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let prices = synth(tmp.path(), &["--corr", "0.6"]);
    let out = tmp.path().join("d");
    assert!(tailcop(&["diff", "--input", s(&prices), "--out", s(&out), "--grid", "5", "--dt", "120"]).status.success());
    let text = fs::read_to_string(out.join("difference_map.csv")).unwrap();
    assert_eq!(text.lines().count(), 26);
    let total: f64 = text.lines().skip(1).map(|l| l.split(',').nth(4).unwrap().parse::<f64>().unwrap()).sum();
    assert!(total.abs() < 1e-9);

    let out = tmp.path().join("t");
    let o = tailcop(&[
        "taildep", "--input", s(&prices), "--out", s(&out), "--alpha", "0.1", "--alpha", "0.25",
        "--upper-tail-convention", "survival",
    ]);
    assert!(o.status.success());
    let text = fs::read_to_string(out.join("tail_curve.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "alpha,lambda_lower,lambda_upper,lambda_gauss");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("0.1,"));
}

#[test]
fn usage_errors_leave_no_files() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x");
    let o = tailcop(&["copula", "--input", "nope.csv", "--out", s(&out), "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
    let o = tailcop(&["copula", "--input", "nope.csv", "--out", s(&out), "--dt", "45"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(listing(&out).is_empty());
}

#[test]
fn input_errors_remove_partial_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.csv");
    fs::write(&bad, "timestamp,symbol,price\n2008-01-02T09:30:00,AAA,100\n2008-01-02T10:00:00,AAA,-1\n").unwrap();
    let out = tmp.path().join("o");
    let o = tailcop(&["copula", "--input", s(&bad), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
    assert!(listing(&out).is_empty());

    let o = tailcop(&["copula", "--input", s(&tmp.path().join("missing.csv")), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(3));

    // Windows longer than the sample fail after nothing has been written.
    let prices = synth(tmp.path(), &[]);
    let o = tailcop(&["dynamics", "--input", s(&prices), "--out", s(&out), "--window-days", "41"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(listing(&out).is_empty());
}

#[test]
fn constant_prices_are_a_numerical_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("flat.csv");
    let mut text = String::from("timestamp,symbol,price\n");
    for h in 0..6 {
        let ts = format!("2008-01-02T{:02}:30:00", 10 + h);
        text += &format!("{ts},AAA,10\n{ts},BBB,{}\n", 20 + h);
    }
    fs::write(&csv, text).unwrap();
    let out = tmp.path().join("o");
    let o = tailcop(&["diff", "--input", s(&csv), "--out", s(&out), "--grid", "2"]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(listing(&out).is_empty());
}

#[test]
fn reruns_threads_and_replay_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let prices = synth(tmp.path(), &["--corr", "0.2", "--corr", "0.7"]);
    let run = |name: &str, threads: &str| {
        let out = tmp.path().join(name);
        let o = tailcop(&["dynamics", "--input", s(&prices), "--out", s(&out), "--grid", "8", "--threads", threads]);
        assert!(o.status.success());
        out
    };
    let a = run("a", "1");
    let b = run("b", "4");
    for name in listing(&a).iter().filter(|n| n.ends_with(".csv")) {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }

    let c = tmp.path().join("c");
    let o = tailcop(&["replay", s(&a.join("manifest.json")), "--out", s(&c)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(a.join("manifest.json")).unwrap()).unwrap();
    for entry in manifest["outputs"].as_array().unwrap() {
        let name = entry["path"].as_str().unwrap();
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(c.join(name)).unwrap());
    }
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 1);
    assert!(manifest.get("threads").is_none());
}

#[test]
fn synthetic_prices_load_back() {
    let tmp = tempfile::tempdir().unwrap();
    let prices = synth(tmp.path(), &["--kind", "comonotone"]);
    let (panel, report) =
        tailcop::load_prices::<f64, _>(fs::File::open(&prices).unwrap(), &tailcop::TradingCalendar::default()).unwrap();
    assert_eq!(report.rows_excluded, 0);
    assert_eq!(panel.assets(), 4);
    assert_eq!(panel.len(), 40 * 14);
}
