//! Evaluation reports in the shape of per-asset strategy tables.
//!
//! Undefined quantities are NaN and print as `NaN` in every format. The CSV
//! and JSON outputs keep full precision (shortest round-trip decimal); the
//! Markdown tables use 3 decimals and mark passing PSR/mTRL cells with `PASS`.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use stse_core::{EvaluationVerdict, Outcome, ReturnConvention, ThresholdResult};

use crate::error::ReportError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    #[default]
    Markdown,
    Json,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "markdown" | "md" => Ok(Self::Markdown),
            "json" => Ok(Self::Json),
            other => Err(format!("unknown report format `{other}` (csv, markdown, json)")),
        }
    }
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Markdown => "md",
            Self::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdCell {
    pub threshold: f64,
    pub psr: f64,
    pub mtrl_years: f64,
    /// PSR reached the confidence level and the record is at least the floored mTRL.
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub scenario: String,
    pub strategy: String,
    pub asset: String,
    pub n_obs: usize,
    pub years: f64,
    pub return_pct: f64,
    pub convention: ReturnConvention,
    /// Per-period Sharpe ratio.
    pub sharpe: f64,
    pub thresholds: Vec<ThresholdCell>,
    pub verdict: Outcome,
    /// Reason codes joined with `;`.
    pub reasons: String,
}

impl ReportRow {
    pub fn from_verdict(v: &EvaluationVerdict, strategy: &str, asset: &str) -> Self {
        let thresholds = v
            .assessments
            .iter()
            .map(|t| ThresholdCell {
                threshold: t.sr_threshold(),
                psr: t.psr().unwrap_or(f64::NAN),
                mtrl_years: match t {
                    ThresholdResult::Assessed(a) => a.mtrl_years,
                    _ => f64::NAN,
                },
                pass: t.passed(),
            })
            .collect();
        Self {
            scenario: v.label.clone(),
            strategy: strategy.to_string(),
            asset: asset.to_string(),
            n_obs: v.n_observed,
            years: v.observed_years(),
            return_pct: 100.0 * v.total_return,
            convention: v.convention,
            sharpe: v.sharpe.map_or(f64::NAN, |s| s.per_period),
            thresholds,
            verdict: v.outcome,
            reasons: v.reasons.iter().map(ToString::to_string).collect::<Vec<_>>().join(";"),
        }
    }

    fn column_label(&self) -> &str {
        if self.strategy.is_empty() {
            &self.scenario
        } else {
            &self.strategy
        }
    }
}

pub fn emit_report(rows: &[ReportRow], format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => emit_csv(rows),
        ReportFormat::Markdown => emit_markdown(rows),
        ReportFormat::Json => emit_json(rows),
    }
}

/// Threshold as it appears in column names: `0`, `0.1`.
fn threshold_label(t: f64) -> String {
    format!("{t}")
}

fn csv_header(rows: &[ReportRow]) -> Vec<String> {
    let mut h: Vec<String> = ["scenario", "strategy", "asset", "n_obs", "years", "return_pct", "return_convention", "sharpe"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    if let Some(first) = rows.first() {
        for c in &first.thresholds {
            let t = threshold_label(c.threshold);
            h.push(format!("psr({t})"));
            h.push(format!("mtrl_years({t})"));
            h.push(format!("pass({t})"));
        }
    }
    h.push("verdict".into());
    h.push("reasons".into());
    h
}

fn emit_csv(rows: &[ReportRow]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let write = |w: &mut csv::Writer<Vec<u8>>, rec: Vec<String>| w.write_record(rec).expect("writing to memory");
    write(&mut w, csv_header(rows));
    for r in rows {
        let mut rec = vec![
            r.scenario.clone(),
            r.strategy.clone(),
            r.asset.clone(),
            r.n_obs.to_string(),
            r.years.to_string(),
            r.return_pct.to_string(),
            r.convention.as_str().to_string(),
            r.sharpe.to_string(),
        ];
        for c in &r.thresholds {
            rec.push(c.psr.to_string());
            rec.push(c.mtrl_years.to_string());
            rec.push(c.pass.to_string());
        }
        rec.push(r.verdict.as_str().to_string());
        rec.push(r.reasons.clone());
        write(&mut w, rec);
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv output is UTF-8")
}

/// Reads back what [`emit_report`] wrote in CSV form.
pub fn parse_report_csv(text: &str) -> Result<Vec<ReportRow>, ReportError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| ReportError::MalformedHeader { expected: "report header".into(), found: e.to_string() })?
        .iter()
        .map(str::to_string)
        .collect();
    let fixed = 8;
    if header.len() < fixed + 2 || (header.len() - fixed - 2) % 3 != 0 {
        return Err(ReportError::MalformedHeader { expected: "report header".into(), found: header.join(",") });
    }
    let thresholds = (0..(header.len() - fixed - 2) / 3)
        .map(|k| {
            let name = &header[fixed + 3 * k];
            name.strip_prefix("psr(")
                .and_then(|s| s.strip_suffix(')'))
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| ReportError::MalformedHeader { expected: "psr(<threshold>)".into(), found: name.clone() })
        })
        .collect::<Result<Vec<f64>, _>>()?;

    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| ReportError::row(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |i: usize| rec[i].parse::<f64>().map_err(|_| ReportError::row(line, format!("bad number `{}`", &rec[i])));
        let flag = |i: usize| rec[i].parse::<bool>().map_err(|_| ReportError::row(line, format!("bad flag `{}`", &rec[i])));
        let convention = match &rec[6] {
            "simple" => ReturnConvention::Simple,
            "deposit_relative" => ReturnConvention::DepositRelative,
            other => return Err(ReportError::row(line, format!("unknown convention `{other}`"))),
        };
        let verdict_field = &rec[header.len() - 2];
        let verdict = [Outcome::ProbablyBad, Outcome::LongerTrackRecordRequired, Outcome::PerhapsSkillful]
            .into_iter()
            .find(|o| o.as_str() == verdict_field)
            .ok_or_else(|| ReportError::row(line, format!("unknown verdict `{verdict_field}`")))?;
        let cells = thresholds
            .iter()
            .enumerate()
            .map(|(k, &threshold)| {
                let base = fixed + 3 * k;
                Ok(ThresholdCell { threshold, psr: num(base)?, mtrl_years: num(base + 1)?, pass: flag(base + 2)? })
            })
            .collect::<Result<Vec<_>, ReportError>>()?;
        rows.push(ReportRow {
            scenario: rec[0].to_string(),
            strategy: rec[1].to_string(),
            asset: rec[2].to_string(),
            n_obs: rec[3].parse().map_err(|_| ReportError::row(line, "bad n_obs"))?,
            years: num(4)?,
            return_pct: num(5)?,
            convention,
            sharpe: num(7)?,
            thresholds: cells,
            verdict,
            reasons: rec[header.len() - 1].to_string(),
        });
    }
    Ok(rows)
}

fn fixed3(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    let s = format!("{x:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

fn emit_markdown(rows: &[ReportRow]) -> String {
    let mut groups: Vec<(&str, Vec<&ReportRow>)> = Vec::new();
    for r in rows {
        match groups.iter_mut().find(|(a, _)| *a == r.asset) {
            Some((_, g)) => g.push(r),
            None => groups.push((&r.asset, vec![r])),
        }
    }
    let mut out = String::new();
    for (i, (asset, group)) in groups.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let title = if asset.is_empty() { "Scenarios" } else { asset };
        let _ = writeln!(out, "### {title}\n");
        let mut line = |label: &str, cells: Vec<String>| {
            let _ = writeln!(out, "| {label} | {} |", cells.join(" | "));
        };
        line("", group.iter().map(|r| r.column_label().to_string()).collect());
        line("---", group.iter().map(|_| "---:".to_string()).collect());
        line("Observations", group.iter().map(|r| r.n_obs.to_string()).collect());
        line("Years", group.iter().map(|r| fixed3(r.years)).collect());
        line(
            "Return (%)",
            group
                .iter()
                .map(|r| match r.convention {
                    ReturnConvention::Simple => fixed3(r.return_pct),
                    ReturnConvention::DepositRelative => format!("{} (of deposit)", fixed3(r.return_pct)),
                })
                .collect(),
        );
        line("Sharpe Ratio", group.iter().map(|r| fixed3(r.sharpe)).collect());
        let n_thresholds = group.iter().map(|r| r.thresholds.len()).max().unwrap_or(0);
        for k in 0..n_thresholds {
            let t = group.iter().find_map(|r| r.thresholds.get(k)).map_or(f64::NAN, |c| c.threshold);
            let marked = |value: fn(&ThresholdCell) -> f64| {
                group
                    .iter()
                    .map(|r| match r.thresholds.get(k) {
                        Some(c) if c.pass => format!("{} PASS", fixed3(value(c))),
                        Some(c) => fixed3(value(c)),
                        None => "NaN".into(),
                    })
                    .collect::<Vec<_>>()
            };
            line(&format!("PSR({})", threshold_label(t)), marked(|c| c.psr));
            line(&format!("mTRL({}) (years)", threshold_label(t)), marked(|c| c.mtrl_years));
        }
        line("Verdict", group.iter().map(|r| r.verdict.to_string()).collect());
    }
    out
}

fn number_value(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or_else(|| Value::String(if x.is_nan() { "NaN".into() } else { x.to_string() }), Value::Number)
}

fn emit_json(rows: &[ReportRow]) -> String {
    let list: Vec<Value> = rows
        .iter()
        .map(|r| {
            let mut m = Map::new();
            m.insert("scenario".into(), r.scenario.clone().into());
            m.insert("strategy".into(), r.strategy.clone().into());
            m.insert("asset".into(), r.asset.clone().into());
            m.insert("n_obs".into(), r.n_obs.into());
            m.insert("years".into(), number_value(r.years));
            m.insert("return_pct".into(), number_value(r.return_pct));
            m.insert("return_convention".into(), r.convention.as_str().into());
            m.insert("sharpe".into(), number_value(r.sharpe));
            let cells: Vec<Value> = r
                .thresholds
                .iter()
                .map(|c| {
                    let mut t = Map::new();
                    t.insert("threshold".into(), number_value(c.threshold));
                    t.insert("psr".into(), number_value(c.psr));
                    t.insert("mtrl_years".into(), number_value(c.mtrl_years));
                    t.insert("pass".into(), c.pass.into());
                    Value::Object(t)
                })
                .collect();
            m.insert("thresholds".into(), cells.into());
            m.insert("verdict".into(), r.verdict.as_str().into());
            let reasons: Vec<Value> =
                r.reasons.split(';').filter(|s| !s.is_empty()).map(|s| Value::String(s.into())).collect();
            m.insert("reasons".into(), reasons.into());
            Value::Object(m)
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&Value::Array(list)).expect("JSON values serialize");
    s.push('\n');
    s
}
