use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use rayon::prelude::*;
use stse_backtest::{
    gbm_prices, run_backtest, BacktestError, BacktestResult, GbmSpec, PriceSeries, StrategySpec,
};
use stse_core::{
    equity_to_returns, evaluate_matrix, expected_max_sharpe, min_backtest_length, min_track_record_observations,
    Outcome, ReturnConvention, ReturnSeries, SelectionCheck,
};
use stse_report::{
    emit_report, parse_equity_csv, parse_ohlc_csv, parse_report_csv, parse_returns_csv, ReportRow,
    RunConfig,
};

use crate::args::{BacktestArgs, EvaluateArgs, MinbtlArgs, MintrackArgs, ReportArgs, SweepArgs};
use crate::files::{write_equity, write_returns, write_trades};
use crate::{Failure, EXIT_BAD, EXIT_LONGER, EXIT_SKILLFUL};

type CmdResult = Result<i32, Failure>;

fn exit_code(outcome: Outcome) -> i32 {
    match outcome {
        Outcome::PerhapsSkillful => EXIT_SKILLFUL,
        Outcome::LongerTrackRecordRequired => EXIT_LONGER,
        Outcome::ProbablyBad => EXIT_BAD,
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, Failure> {
    match path {
        Some(p) => RunConfig::load(p).map_err(Failure::input),
        None => Ok(RunConfig::default()),
    }
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes()).map_err(Failure::runtime)
}

/// Returns from an equity curve; switches to deposit-relative returns if the
/// account ever reaches zero or below.
fn returns_from_equity(curve: &stse_core::EquityCurve, periodicity: f64) -> anyhow::Result<ReturnSeries> {
    let convention = if curve.min_equity().is_some_and(|m| m <= 0.0) {
        ReturnConvention::DepositRelative
    } else {
        ReturnConvention::Simple
    };
    Ok(equity_to_returns(curve, periodicity, convention)?)
}

pub fn evaluate(a: &EvaluateArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let config = load_config(a.config.as_deref())?;
    let series = match (&a.returns, &a.equity) {
        (Some(p), _) => parse_returns_csv(p, config.periodicity).map_err(Failure::input)?,
        (None, Some(p)) => {
            let curve = parse_equity_csv(p).map_err(Failure::input)?;
            returns_from_equity(&curve, config.periodicity).map_err(Failure::input)?.with_label(stem(p))
        }
        (None, None) => return Err(Failure::usage(anyhow!("one of --returns or --equity is required"))),
    };
    let verdict = stse_core::evaluate(&series, &config.evaluation, &config.checklist).map_err(Failure::input)?;
    let row = ReportRow::from_verdict(&verdict, "", "");
    emit(out, &emit_report(&[row], a.format))?;
    let _ = writeln!(err, "{}: {} [{}]", verdict.label, verdict.outcome, reasons(&verdict.reasons));
    Ok(exit_code(verdict.outcome))
}

fn reasons(codes: &[stse_core::ReasonCode]) -> String {
    codes.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

fn backtest_failure(e: BacktestError) -> Failure {
    match e {
        BacktestError::InsolventAccount { .. } => Failure::runtime(e),
        other => Failure::input(other),
    }
}

/// `key=value` pairs separated by commas; unspecified keys keep defaults.
pub fn parse_synthetic(spec: &str, seed: u64) -> anyhow::Result<GbmSpec> {
    let mut g = GbmSpec::new(seed, 756, 0.0, 0.01, 100.0, 0.01);
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, value) = part.split_once('=').ok_or_else(|| anyhow!("`{part}` is not key=value"))?;
        let key = key.trim();
        let value = value.trim();
        let number = || value.parse::<f64>().with_context(|| format!("{key}: `{value}` is not a number"));
        match key {
            "n_bars" => g.n_bars = value.parse().with_context(|| format!("n_bars: `{value}` is not a count"))?,
            "drift" => g.drift = number()?,
            "volatility" => g.volatility = number()?,
            "start_price" => g.start_price = number()?,
            "tick_size" => g.tick_size = number()?,
            "wick_factor" => g.wick_factor = number()?,
            "start_date" => g.start_date = value.parse().with_context(|| format!("start_date: `{value}`"))?,
            other => return Err(anyhow!("unknown synthetic key `{other}`")),
        }
    }
    Ok(g)
}

fn strategy_spec(name: &str, params: Option<&Path>, seed: u64) -> Result<StrategySpec, Failure> {
    let base = StrategySpec::from_name(name).ok_or_else(|| Failure::usage(anyhow!("unknown strategy `{name}`")))?;
    let Some(path) = params else {
        return Ok(base.with_seed(seed));
    };
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::input)?;
    let mut table: toml::Table = toml::from_str(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(Failure::input)?;
    let explicit_seed = table.contains_key("seed");
    table.insert("strategy".into(), toml::Value::String(base.name().into()));
    let spec: StrategySpec = table
        .try_into()
        .with_context(|| format!("parameters in {}", path.display()))
        .map_err(Failure::input)?;
    spec.validate().map_err(Failure::input)?;
    Ok(if explicit_seed { spec } else { spec.with_seed(seed) })
}

fn write_result(dir: &Path, result: &BacktestResult) -> anyhow::Result<()> {
    write_equity(&dir.join("equity.csv"), result)?;
    write_trades(&dir.join("trades.csv"), result)?;
    write_returns(&dir.join("returns.csv"), result)
}

pub fn backtest(a: &BacktestArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let config = load_config(a.config.as_deref())?;
    let spec = strategy_spec(&a.strategy, a.params.as_deref(), a.seed)?;
    let prices = match (&a.prices, &a.synthetic) {
        (Some(p), _) => {
            let symbol = a.symbol.clone().unwrap_or_else(|| stem(p));
            parse_ohlc_csv(p, &symbol, a.tick_size).map_err(Failure::input)?
        }
        (None, Some(s)) => {
            let g = parse_synthetic(s, a.seed).map_err(Failure::input)?;
            gbm_prices(&g, a.symbol.as_deref().unwrap_or("SYN")).map_err(Failure::input)?
        }
        (None, None) => return Err(Failure::usage(anyhow!("one of --prices or --synthetic is required"))),
    };
    let result = run_backtest(&spec, &prices, &config.backtest).map_err(backtest_failure)?;
    std::fs::create_dir_all(&a.out)
        .with_context(|| format!("creating {}", a.out.display()))
        .map_err(Failure::runtime)?;
    write_result(&a.out, &result).map_err(Failure::runtime)?;

    let verdict =
        stse_core::evaluate(&result.returns, &config.evaluation, &config.checklist).map_err(Failure::input)?;
    let row = ReportRow::from_verdict(&verdict, spec.display_name(), prices.symbol());
    let report = emit_report(&[row], a.format);
    std::fs::write(a.out.join(format!("report.{}", a.format.extension())), &report).map_err(Failure::runtime)?;
    emit(out, &report)?;
    let _ = writeln!(
        err,
        "{}: {} trades, final equity {:.2}, {}",
        result.returns.label(),
        result.trades.len(),
        result.final_equity(),
        verdict.outcome
    );
    Ok(0)
}

/// Everything a sweep produced.
#[derive(Debug)]
pub struct SweepOutcome {
    pub rows: Vec<ReportRow>,
    /// Scenario label and error for runs that did not produce a verdict.
    pub failures: Vec<(String, String)>,
    pub selection: Option<SelectionCheck>,
}

struct Scenario<'a> {
    label: String,
    column: String,
    spec: &'a StrategySpec,
    prices: &'a PriceSeries,
}

/// Backtests every (asset, strategy) pair in parallel, writes per-scenario
/// equity and trade files under `out_dir` when given, and evaluates the batch.
/// Rows come out asset by asset, strategies in configuration order.
pub fn run_sweep(config: &RunConfig, base_dir: &Path, out_dir: Option<&Path>) -> anyhow::Result<SweepOutcome> {
    if config.strategies.is_empty() || config.assets.is_empty() {
        return Err(anyhow!("the sweep needs at least one strategy and one asset"));
    }
    let assets = config
        .assets
        .iter()
        .map(|a| a.load(base_dir))
        .collect::<Result<Vec<_>, _>>()?;

    let names = strategy_columns(&config.strategies);
    let scenarios: Vec<Scenario<'_>> = assets
        .iter()
        .flat_map(|prices| {
            config.strategies.iter().zip(&names).map(move |(spec, (slug, column))| Scenario {
                label: format!("{slug}_{}", prices.symbol()),
                column: column.clone(),
                spec,
                prices,
            })
        })
        .collect();

    if let Some(dir) = out_dir {
        for sub in ["equity", "trades"] {
            std::fs::create_dir_all(dir.join(sub)).with_context(|| format!("creating {}", dir.join(sub).display()))?;
        }
    }

    let results: Vec<anyhow::Result<BacktestResult>> = scenarios
        .par_iter()
        .map(|s| {
            let r = run_backtest(s.spec, s.prices, &config.backtest)?;
            if let Some(dir) = out_dir {
                write_equity(&dir.join("equity").join(format!("{}.csv", s.label)), &r)?;
                write_trades(&dir.join("trades").join(format!("{}.csv", s.label)), &r)?;
            }
            Ok(r)
        })
        .collect();

    let mut failures = Vec::new();
    let mut evaluated = Vec::new();
    let mut series = Vec::new();
    for (s, r) in scenarios.iter().zip(results) {
        match r {
            Ok(r) => {
                series.push(r.returns.with_label(s.label.clone()));
                evaluated.push(s);
            }
            Err(e) => failures.push((s.label.clone(), format!("{e:#}"))),
        }
    }
    if series.is_empty() {
        return Ok(SweepOutcome { rows: Vec::new(), failures, selection: None });
    }
    let matrix = evaluate_matrix(&series, &config.evaluation, &config.checklist, config.expected_max_sharpe)?;
    let mut rows = Vec::new();
    for (s, v) in evaluated.iter().zip(matrix.verdicts) {
        match v {
            Ok(v) => rows.push(ReportRow::from_verdict(&v, &s.column, s.prices.symbol())),
            Err(e) => failures.push((s.label.clone(), e.to_string())),
        }
    }
    Ok(SweepOutcome { rows, failures, selection: matrix.selection })
}

/// File-name slug and table column per strategy; repeated strategies get a suffix.
fn strategy_columns(specs: &[StrategySpec]) -> Vec<(String, String)> {
    specs
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let repeats = specs.iter().filter(|o| o.name() == s.name()).count() > 1;
            if repeats {
                let k = specs[..=i].iter().filter(|o| o.name() == s.name()).count();
                (format!("{}-{k}", s.name()), format!("{}-{k}", s.display_name()))
            } else {
                (s.name().to_string(), s.display_name().to_string())
            }
        })
        .collect()
}

pub fn sweep(a: &SweepArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let config = RunConfig::load(&a.config).map_err(Failure::input)?;
    let base_dir = a.config.parent().map(Path::to_path_buf).unwrap_or_default();
    let out_dir: Option<PathBuf> = a.out.clone().or_else(|| config.output.dir.as_ref().map(|d| base_dir.join(d)));
    let format = a.format.unwrap_or(config.output.format);

    let outcome = run_sweep(&config, &base_dir, out_dir.as_deref()).map_err(Failure::runtime)?;
    for (label, e) in &outcome.failures {
        let _ = writeln!(err, "{label}: {e}");
    }
    if let Some(sel) = &outcome.selection {
        let _ = writeln!(
            err,
            "{} trials, E[max SR] {:.4} ({:?}): minimum backtest length {:.3} years, longest record {:.3} years{}",
            sel.bound.n_trials,
            sel.bound.expected_max_sharpe,
            sel.source,
            sel.bound.min_backtest_years,
            sel.longest_record_years,
            if sel.warning { " -- records are too short for this many trials" } else { "" }
        );
    }
    if outcome.rows.is_empty() {
        return Err(Failure::runtime(anyhow!("no scenario produced a verdict")));
    }
    let report = emit_report(&outcome.rows, format);
    if let Some(dir) = &out_dir {
        std::fs::write(dir.join(format!("report.{}", format.extension())), &report).map_err(Failure::runtime)?;
    }
    emit(out, &report)?;
    Ok(if outcome.failures.is_empty() { 0 } else { crate::EXIT_RUNTIME })
}

pub fn mintrack(a: &MintrackArgs, out: &mut dyn Write) -> CmdResult {
    if !(a.periodicity.is_finite() && a.periodicity > 0.0) {
        return Err(Failure::input(anyhow!("periodicity must be positive")));
    }
    let n_star = min_track_record_observations(a.skew, a.kurt, a.sr, a.threshold, a.alpha).map_err(Failure::input)?;
    let floored = (n_star.ceil() as u64).max(a.floor);
    let years = floored as f64 / a.periodicity;
    emit(out, &format!("n_star,n_floored,years\n{n_star},{floored},{years}\n"))?;
    Ok(0)
}

pub fn minbtl(a: &MinbtlArgs, out: &mut dyn Write) -> CmdResult {
    let (emax, source) = match a.emax {
        Some(e) => (e, "supplied"),
        None => (expected_max_sharpe::<f64>(a.trials).map_err(Failure::input)?, "approximation"),
    };
    let bound = min_backtest_length(a.trials, emax).map_err(Failure::input)?;
    emit(
        out,
        &format!(
            "n_trials,expected_max_sharpe,source,min_backtest_years\n{},{},{source},{}\n",
            bound.n_trials, bound.expected_max_sharpe, bound.min_backtest_years
        ),
    )?;
    Ok(0)
}

pub fn report(a: &ReportArgs, out: &mut dyn Write) -> CmdResult {
    let text = std::fs::read_to_string(&a.input)
        .with_context(|| format!("reading {}", a.input.display()))
        .map_err(Failure::input)?;
    let rows = parse_report_csv(&text).map_err(Failure::input)?;
    if rows.is_empty() {
        return Err(Failure::input(anyhow!("{} has no rows", a.input.display())));
    }
    emit(out, &emit_report(&rows, a.format))?;
    Ok(0)
}
