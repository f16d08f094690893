//! Acceptance suite. One line per criterion; exits nonzero if any fails.
//!
//! Run with `cargo test -p stse-cli --test acceptance`.

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal, StudentT};

use stse_backtest::audit::{check_accounting, check_prefix_replay};
use stse_backtest::{gbm_prices, run_backtest, BacktestConfig, GbmSpec, StrategySpec, TransactionCost};
use stse_cli::run_sweep;
use stse_core::{
    evaluate, min_backtest_length, min_track_record_observations, moments_of, mtrl, psr, psr_for_length,
    sharpe_from_moments, variance_term, ConditionsChecklist, EvaluationConfig, MomentSummary, Outcome, ReturnSeries,
};
use stse_report::{emit_report, ReportFormat, RunConfig};

const MIDPOINT_TOL: f64 = 1e-12;
const DUALITY_TOL: f64 = 1e-9;
const PIN_PSR: (f64, f64) = (0.8407, 5e-4);
const PIN_NSTAR: (f64, f64) = (272.9, 0.5);
const PIN_MINBTL: (f64, f64) = (4.6052, 1e-4);
const FLOOR: u64 = 30;
const FALSE_POSITIVE: (f64, f64) = (0.05, 0.01);
const RANDOM_TRADER_MAX_SKILLFUL: f64 = 0.06;
const ACCOUNTING_TOL: f64 = 1e-9;

struct Check {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Check, Duration);

fn ok(pass: bool, detail: impl Into<String>) -> Check {
    Check { pass, detail: detail.into() }
}

fn psr_midpoint() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < 1000 {
        let skew = rng.random_range(-3.0..3.0);
        let kurt = rng.random_range(1.0..30.0);
        let sr = rng.random_range(-1.0..1.0);
        if variance_term(skew, kurt, sr) <= 0.0 {
            continue;
        }
        let n = rng.random_range(2..20_000usize);
        let m = MomentSummary::new(n, sr * 0.01, 0.01, skew, kurt).unwrap();
        let p = psr(&m, sr, sr).unwrap();
        worst = worst.max((p - 0.5).abs());
        done += 1;
    }
    ok(worst <= MIDPOINT_TOL, format!("max |psr - 0.5| = {worst:.3e}"))
}

fn duality() -> Check {
    let gaps: Vec<f64> = (0..5).map(|i| 0.02 + 0.07 * i as f64).collect();
    let thresholds = [-0.1, 0.0, 0.05, 0.1, 0.2];
    let alphas = [0.90, 0.95, 0.99];
    let shapes = [(0.0, 3.0), (-0.5, 5.0), (0.5, 8.0)];
    let mut worst = 0.0f64;
    let mut cases = 0;
    for &gap in &gaps {
        for &t in &thresholds {
            for &alpha in &alphas {
                for &(skew, kurt) in &shapes {
                    let sr = t + gap;
                    let n = min_track_record_observations(skew, kurt, sr, t, alpha).unwrap();
                    let p = psr_for_length(n, skew, kurt, sr, t).unwrap();
                    worst = worst.max((p - alpha).abs());
                    cases += 1;
                }
            }
        }
    }
    ok(worst <= DUALITY_TOL, format!("{cases} cases, max |psr(n*) - alpha| = {worst:.3e}"))
}

fn pins() -> Check {
    let m = MomentSummary::new(101, 0.001, 0.01, 0.0, 3.0).unwrap();
    let p = psr(&m, 0.1, 0.0).unwrap();
    let n = min_track_record_observations(0.0, 3.0, 0.1, 0.0, 0.95).unwrap();
    let years = min_backtest_length(10, 1.0).unwrap().min_backtest_years;
    let pass = (p - PIN_PSR.0).abs() <= PIN_PSR.1
        && (n - PIN_NSTAR.0).abs() <= PIN_NSTAR.1
        && (years - PIN_MINBTL.0).abs() <= PIN_MINBTL.1;
    ok(pass, format!("psr {p:.5}, n* {n:.3}, minbtl {years:.5}"))
}

fn observation_floor() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let config = EvaluationConfig { sr_thresholds: vec![0.0, 0.05, 0.1], ..EvaluationConfig::default() };
    let checklist = ConditionsChecklist::affirmed();
    let (mut assessed, mut skillful, mut violations) = (0usize, 0usize, 0usize);
    for _ in 0..10_000 {
        let n = rng.random_range(2..120usize);
        let sr = rng.random_range(-0.2..1.5);
        let sigma: f64 = rng.random_range(0.001..0.03);
        let dof = rng.random_range(3.0..30.0);
        let t = StudentT::new(dof).unwrap();
        let values: Vec<f64> = (0..n).map(|_| (sigma * (sr + t.sample(&mut rng))).max(-0.9)).collect();
        let series = ReturnSeries::new(values, 252.0, "fuzz").unwrap();
        let v = evaluate(&series, &config, &checklist).unwrap();
        for a in v.assessments.iter().chain([&v.primary]).filter_map(|r| r.assessment()) {
            assessed += 1;
            if a.mtrl_floored < FLOOR {
                violations += 1;
            }
        }
        if v.outcome == Outcome::PerhapsSkillful {
            skillful += 1;
            if (v.n_observed as u64) < FLOOR {
                violations += 1;
            }
        }
        // direct assessments from random moments as well
        let skew = rng.random_range(-1.0..1.0);
        let kurt = rng.random_range(2.0..10.0);
        let sr = rng.random_range(0.01..2.0);
        if let Ok(m) = MomentSummary::new(n, sr * 0.01, 0.01, skew, kurt) {
            if let Ok(a) = mtrl(&m, sr, 0.0, 0.95, 252.0) {
                assessed += 1;
                if a.mtrl_floored < FLOOR {
                    violations += 1;
                }
            }
        }
    }
    let pass = violations == 0 && assessed > 0 && skillful > 0;
    ok(pass, format!("{assessed} assessments, {skillful} skillful verdicts, {violations} violations"))
}

fn monte_carlo() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let normal = Normal::new(0.0, 0.01).unwrap();
    let runs = 10_000;
    let mut hits = 0;
    for _ in 0..runs {
        let values: Vec<f64> = (0..300).map(|_| normal.sample(&mut rng)).collect();
        let m = moments_of(&values).unwrap();
        let s = sharpe_from_moments(&m, 252.0, 0.0).per_period;
        if psr(&m, s, 0.0).unwrap() >= 0.95 {
            hits += 1;
        }
    }
    let rate = hits as f64 / runs as f64;
    ok((rate - FALSE_POSITIVE.0).abs() <= FALSE_POSITIVE.1, format!("false-positive rate {rate:.4}"))
}

fn random_trader() -> Check {
    let config = BacktestConfig::default();
    let eval = EvaluationConfig::default();
    let checklist = ConditionsChecklist::affirmed();
    let runs = 1000u64;
    let (mut skillful, mut total_equity, mut errors) = (0usize, 0.0, 0usize);
    for seed in 0..runs {
        let prices = gbm_prices(&GbmSpec::new(10_000 + seed, 756, 0.0, 0.01, 100.0, 0.01), "GBM").unwrap();
        let spec = StrategySpec::from_name("random").unwrap().with_seed(seed);
        let r = match run_backtest(&spec, &prices, &config) {
            Ok(r) => r,
            Err(_) => {
                errors += 1;
                continue;
            }
        };
        total_equity += r.final_equity();
        match evaluate(&r.returns, &eval, &checklist) {
            Ok(v) if v.outcome == Outcome::PerhapsSkillful => skillful += 1,
            Ok(_) => {}
            Err(_) => errors += 1,
        }
    }
    let rate = skillful as f64 / runs as f64;
    let mean = total_equity / (runs as usize - errors).max(1) as f64;
    let pass = errors == 0 && rate < RANDOM_TRADER_MAX_SKILLFUL && mean < config.initial_deposit;
    ok(pass, format!("skillful {rate:.4}, mean final equity {mean:.2}, {errors} errors"))
}

fn backtest_invariants() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut failures = Vec::new();
    for case in 0..200 {
        let name = StrategySpec::NAMES[rng.random_range(0..StrategySpec::NAMES.len())];
        let seed: u64 = rng.random();
        let spec = StrategySpec::from_name(name).unwrap().with_seed(seed);
        let config = BacktestConfig {
            transaction_cost: TransactionCost {
                fixed: rng.random_range(0.0..5.0),
                proportional: rng.random_range(0.0..0.001),
            },
            borrow_cost_per_period: rng.random_range(0.0..0.001),
            ..BacktestConfig::default()
        };
        let z: f64 = StandardNormal.sample(&mut rng);
        let drift = 0.0005 * z;
        let prices = gbm_prices(&GbmSpec::new(seed, 300, drift, 0.01, 100.0, 0.01), "X").unwrap();
        let k = rng.random_range(60..prices.len());
        let check = || -> Result<(), String> {
            let full = run_backtest(&spec, &prices, &config).map_err(|e| e.to_string())?;
            check_accounting(&full, ACCOUNTING_TOL)?;
            let again = run_backtest(&spec, &prices, &config).map_err(|e| e.to_string())?;
            if again.equity.points() != full.equity.points() || again.trades != full.trades {
                return Err("rerun differs".into());
            }
            check_prefix_replay(&spec, &prices, &config, &full, k)
        };
        if let Err(e) = check() {
            failures.push(format!("case {case} ({name}): {e}"));
        }
    }
    let detail = match failures.first() {
        None => "200 combinations".to_string(),
        Some(first) => format!("{} failures, first: {first}", failures.len()),
    };
    ok(failures.is_empty(), detail)
}

fn golden_report() -> Check {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let config = RunConfig::load(root.join("configs/fx_sweep.toml")).unwrap();
    let emit = || -> anyhow::Result<String> {
        let outcome = run_sweep(&config, &root.join("configs"), None)?;
        if !outcome.failures.is_empty() {
            anyhow::bail!("{} scenarios failed", outcome.failures.len());
        }
        Ok(emit_report(&outcome.rows, ReportFormat::Markdown))
    };
    let golden = std::fs::read_to_string(root.join("tests/golden/fx_sweep_report.md")).unwrap();
    match (emit(), emit()) {
        (Ok(a), Ok(b)) => ok(a == b && a == golden, format!("{} bytes, reruns equal: {}", a.len(), a == b)),
        (Err(e), _) | (_, Err(e)) => ok(false, format!("{e:#}")),
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("psr midpoint", psr_midpoint, Duration::from_secs(1)),
        ("psr/mtrl duality", duality, Duration::from_secs(1)),
        ("hand-derived pins", pins, Duration::from_secs(1)),
        ("30-observation floor", observation_floor, Duration::from_secs(10)),
        ("monte carlo calibration", monte_carlo, Duration::from_secs(60)),
        ("random-trader baseline", random_trader, Duration::from_secs(120)),
        ("backtest invariants", backtest_invariants, Duration::from_secs(60)),
        ("golden report", golden_report, Duration::from_secs(120)),
    ];
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let pass = out.pass && elapsed <= *limit;
        if !pass {
            failed += 1;
        }
        let tag = if pass { "PASS" } else { "FAIL" };
        println!(
            "[{tag}] {} {name}: {} ({:.2}s, limit {}s)",
            i + 1,
            out.detail,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
