use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn stse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stse")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn returns_file(dir: &Path, name: &str, values: &[f64]) -> PathBuf {
    let start = chrono_free_dates(values.len());
    let mut text = String::from("date,return\n");
    for (d, v) in start.iter().zip(values) {
        text.push_str(&format!("{d},{v}\n"));
    }
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

/// Consecutive calendar days from 2000-01-01, formatted without a date crate.
fn chrono_free_dates(n: usize) -> Vec<String> {
    let month_len = |y: i32, m: u32| match m {
        2 if (y % 4 == 0 && y % 100 != 0) || y % 400 == 0 => 29,
        2 => 28,
        4 | 6 | 9 | 11 => 30,
        _ => 31,
    };
    let (mut y, mut m, mut d) = (2000, 1u32, 1u32);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(format!("{y:04}-{m:02}-{d:02}"));
        d += 1;
        if d > month_len(y, m) {
            d = 1;
            m += 1;
            if m > 12 {
                m = 1;
                y += 1;
            }
        }
    }
    out
}

const AFFIRMED: &str = r#"
[checklist]
volume_impact_negligible = { answer = "yes" }
shorting_costs_modeled = { answer = "yes" }
transaction_costs_included = { answer = "yes" }
survivor_bias_criteria_stated = { answer = "yes" }
data_leakage_embargo_applied = { answer = "yes" }
risk_measurement_present = { answer = "yes" }
"#;

#[test]
fn short_record_needs_longer_track_record() {
    let dir = tempfile::tempdir().unwrap();
    let values: Vec<f64> = (0..20).map(|i| if i % 2 == 0 { 0.02 } else { -0.005 }).collect();
    let f = returns_file(dir.path(), "short.csv", &values);
    let o = stse(&["evaluate", "--returns", f.to_str().unwrap()]);
    assert_eq!(code(&o), 10, "{}", stderr(&o));
    assert!(stdout(&o).starts_with("### Scenarios"));
}

#[test]
fn constant_returns_are_probably_bad() {
    let dir = tempfile::tempdir().unwrap();
    let f = returns_file(dir.path(), "flat.csv", &[0.001; 60]);
    let o = stse(&["evaluate", "--returns", f.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(code(&o), 20);
    assert!(stdout(&o).contains("degenerate_returns"));
    assert!(stderr(&o).contains("degenerate_returns"));
}

/// Φ by composite Simpson integration of the density from 0.
fn phi(x: f64) -> f64 {
    let n = 20_000;
    let h = x / n as f64;
    let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = pdf(0.0) + pdf(x);
    for i in 1..n {
        s += pdf(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    0.5 + s * h / 3.0
}

#[test]
fn strong_record_is_skillful() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let normal = Normal::new(0.002, 0.01).unwrap();
    let values: Vec<f64> = (0..500).map(|_| normal.sample(&mut rng)).collect();

    // independent oracle: sample moments and PSR(0) by hand
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m3 = values.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
    let m4 = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    let sr = mean / (m2 * n / (n - 1.0)).sqrt();
    let (g3, g4) = (m3 / m2.powf(1.5), m4 / (m2 * m2));
    let psr = phi(sr * (n - 1.0).sqrt() / (1.0 - g3 * sr + (g4 - 1.0) / 4.0 * sr * sr).sqrt());
    assert!(psr > 0.999, "oracle PSR {psr}");

    let dir = tempfile::tempdir().unwrap();
    let f = returns_file(dir.path(), "strong.csv", &values);
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, AFFIRMED).unwrap();
    let o = stse(&["evaluate", "--returns", f.to_str().unwrap(), "--config", cfg.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let row: Vec<String> = stdout(&o).lines().nth(1).unwrap().split(',').map(str::to_string).collect();
    let reported: f64 = row[8].parse().unwrap();
    assert!((reported - psr).abs() < 1e-9, "{reported} vs {psr}");
}

#[test]
fn unanswered_checklist_blocks_skill() {
    let values: Vec<f64> = (0..400).map(|i| if i % 2 == 0 { 0.012 } else { -0.006 }).collect();
    let dir = tempfile::tempdir().unwrap();
    let f = returns_file(dir.path(), "s.csv", &values);
    let o = stse(&["evaluate", "--returns", f.to_str().unwrap()]);
    assert_eq!(code(&o), 10);
    assert!(stderr(&o).contains("checklist_unanswered"));
}

#[test]
fn equity_input() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("eq.csv");
    let dates = chrono_free_dates(50);
    let mut text = String::from("date,equity\n");
    for (i, d) in dates.iter().enumerate() {
        text.push_str(&format!("{d},{}\n", 1000.0 - i as f64 * 3.0 + if i % 3 == 0 { 2.0 } else { 0.0 }));
    }
    std::fs::write(&path, text).unwrap();
    let o = stse(&["evaluate", "--equity", path.to_str().unwrap()]);
    assert_eq!(code(&o), 20, "{}", stderr(&o));
}

#[test]
fn input_errors_exit_3_usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "date,return\n2020-01-01,0.1\n2020-01-01,0.2\n").unwrap();
    let o = stse(&["evaluate", "--returns", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("line 3"));
    assert!(stdout(&o).is_empty());

    assert_eq!(code(&stse(&["evaluate"])), 2);
    assert_eq!(code(&stse(&["evaluate", "--returns", "a", "--equity", "b"])), 2);
    let out = dir.path().join("o");
    let o = stse(&["backtest", "--strategy", "rfor", "--synthetic", "n_bars=50", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn backtest_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = stse(&[
            "backtest", "--strategy", "random", "--synthetic", "n_bars=300,volatility=0.01", "--seed", "7", "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        (out, stdout(&o))
    };
    let (a, report_a) = run("a");
    let (b, report_b) = run("b");
    assert_eq!(report_a, report_b);
    for f in ["equity.csv", "trades.csv", "returns.csv", "report.md"] {
        let x = std::fs::read(a.join(f)).unwrap();
        assert_eq!(x, std::fs::read(b.join(f)).unwrap(), "{f}");
        assert!(!x.is_empty());
    }
}

#[test]
fn backtest_params_file_and_csv_prices() {
    let dir = tempfile::tempdir().unwrap();
    let params = dir.path().join("p.toml");
    std::fs::write(&params, "ma_period = 5\nma_shift = 0\n").unwrap();
    let out = dir.path().join("synthetic");
    let o = stse(&[
        "backtest", "--strategy", "mama", "--params", params.to_str().unwrap(), "--synthetic", "n_bars=120", "--seed",
        "3", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    // replay the generated equity's dates as OHLC input
    let prices = dir.path().join("ABC.csv");
    let dates = chrono_free_dates(80);
    let mut text = String::from("date,open,high,low,close,volume\n");
    for (i, d) in dates.iter().enumerate() {
        let c = 50.0 + (i as f64 * 0.3).sin() * 5.0;
        text.push_str(&format!("{d},{c},{},{},{c},100\n", c + 0.5, c - 0.5));
    }
    std::fs::write(&prices, text).unwrap();
    let out = dir.path().join("csv");
    let o = stse(&["backtest", "--strategy", "maps", "--prices", prices.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("### ABC"));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "ma_period = 0\n").unwrap();
    let o = stse(&["backtest", "--strategy", "mama", "--params", bad.to_str().unwrap(), "--synthetic", "n_bars=50", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
}

#[test]
fn sweep_writes_25_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let config = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/fx_sweep.toml");
    let o = stse(&["sweep", "--config", config, "--out", dir.path().to_str().unwrap(), "--format", "csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for sub in ["equity", "trades"] {
        assert_eq!(std::fs::read_dir(dir.path().join(sub)).unwrap().count(), 25, "{sub}");
    }
    assert_eq!(stdout(&o).lines().count(), 26);
    assert_eq!(std::fs::read_to_string(dir.path().join("report.csv")).unwrap(), stdout(&o));
    assert!(stderr(&o).contains("25 trials"));

    // re-emit the CSV report as markdown: same as the golden file
    let o = stse(&["report", "--input", dir.path().join("report.csv").to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let golden = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/fx_sweep_report.md")).unwrap();
    assert_eq!(stdout(&o), golden);
}

#[test]
fn mintrack_and_minbtl() {
    let o = stse(&["mintrack", "--sr", "0.1"]);
    assert_eq!(code(&o), 0);
    let line = stdout(&o).lines().nth(1).unwrap().to_string();
    let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
    assert!((cells[0] - 272.907117).abs() < 1e-5);
    assert_eq!(cells[1], 273.0);
    assert!((cells[2] - 273.0 / 252.0).abs() < 1e-12);

    let o = stse(&["mintrack", "--sr", "-0.1"]);
    assert_eq!(code(&o), 3);

    let o = stse(&["minbtl", "--trials", "10", "--emax", "1"]);
    let line = stdout(&o).lines().nth(1).unwrap().to_string();
    let years: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
    assert!((years - 2.0 * 10f64.ln()).abs() < 1e-12);
    assert!(line.contains(",supplied,"));

    let o = stse(&["minbtl", "--trials", "100"]);
    assert!(stdout(&o).contains(",approximation,"));
    assert_eq!(code(&stse(&["minbtl", "--trials", "0", "--emax", "1"])), 3);
}
