//! Strict CSV readers. Every row must parse; errors carry the 1-based line
//! number of the offending row (the header is line 1).

use std::fs::File;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use csv::{ReaderBuilder, StringRecord, Trim};
use stse_backtest::{Bar, PriceSeries};
use stse_core::{EquityCurve, ReturnSeries};

use crate::error::ReportError;

pub const RETURNS_HEADER: [&str; 2] = ["date", "return"];
pub const EQUITY_HEADER: [&str; 2] = ["date", "equity"];
pub const OHLC_HEADER: [&str; 6] = ["date", "open", "high", "low", "close", "volume"];

pub fn parse_returns_csv(path: impl AsRef<Path>, periodicity: f64) -> Result<ReturnSeries, ReportError> {
    let path = path.as_ref();
    let label = stem(path);
    read_returns(open(path)?, periodicity, &label)
}

pub fn parse_equity_csv(path: impl AsRef<Path>) -> Result<EquityCurve, ReportError> {
    read_equity(open(path.as_ref())?)
}

pub fn parse_ohlc_csv(path: impl AsRef<Path>, symbol: &str, tick_size: f64) -> Result<PriceSeries, ReportError> {
    read_ohlc(open(path.as_ref())?, symbol, tick_size)
}

pub fn read_returns(reader: impl Read, periodicity: f64, label: &str) -> Result<ReturnSeries, ReportError> {
    let rows = read_rows(reader, &RETURNS_HEADER)?;
    let mut dates = Vec::with_capacity(rows.len());
    let mut values = Vec::with_capacity(rows.len());
    for (line, record) in &rows {
        let value = number(*line, &record[1], "return")?;
        if value <= -1.0 {
            return Err(ReportError::row(*line, format!("return {value} is not greater than -1")));
        }
        dates.push(date(*line, &record[0])?);
        values.push(value);
    }
    check_increasing(&rows, &dates)?;
    let series = ReturnSeries::new(values, periodicity, label).map_err(|e| ReportError::Config(e.to_string()))?;
    series.with_dates(dates).map_err(|e| ReportError::Config(e.to_string()))
}

pub fn read_equity(reader: impl Read) -> Result<EquityCurve, ReportError> {
    let rows = read_rows(reader, &EQUITY_HEADER)?;
    let mut points = Vec::with_capacity(rows.len());
    for (line, record) in &rows {
        points.push((date(*line, &record[0])?, number(*line, &record[1], "equity")?));
    }
    let dates: Vec<NaiveDate> = points.iter().map(|p| p.0).collect();
    check_increasing(&rows, &dates)?;
    EquityCurve::new(points).map_err(|e| ReportError::Config(e.to_string()))
}

pub fn read_ohlc(reader: impl Read, symbol: &str, tick_size: f64) -> Result<PriceSeries, ReportError> {
    let rows = read_rows(reader, &OHLC_HEADER)?;
    let mut bars = Vec::with_capacity(rows.len());
    for (line, record) in &rows {
        let bar = Bar {
            timestamp: date(*line, &record[0])?,
            open: number(*line, &record[1], "open")?,
            high: number(*line, &record[2], "high")?,
            low: number(*line, &record[3], "low")?,
            close: number(*line, &record[4], "close")?,
            volume: number(*line, &record[5], "volume")?,
        };
        bar.validate().map_err(|reason| ReportError::row(*line, reason))?;
        bars.push(bar);
    }
    let dates: Vec<NaiveDate> = bars.iter().map(|b| b.timestamp).collect();
    check_increasing(&rows, &dates)?;
    PriceSeries::new(bars, symbol, tick_size).map_err(|e| ReportError::Config(e.to_string()))
}

fn open(path: &Path) -> Result<File, ReportError> {
    File::open(path).map_err(|e| ReportError::io(path, e))
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Validates the header and returns every record with its line number.
fn read_rows(reader: impl Read, expected: &[&str]) -> Result<Vec<(u64, StringRecord)>, ReportError> {
    let mut rdr = ReaderBuilder::new().has_headers(true).trim(Trim::All).from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| ReportError::MalformedHeader { expected: expected.join(","), found: e.to_string() })?
        .clone();
    let found: Vec<String> = header.iter().map(str::to_ascii_lowercase).collect();
    if found != expected {
        return Err(ReportError::MalformedHeader { expected: expected.join(","), found: header.iter().collect::<Vec<_>>().join(",") });
    }
    let mut rows = Vec::new();
    for result in rdr.records() {
        let record = result.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            ReportError::row(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        rows.push((line, record));
    }
    if rows.is_empty() {
        return Err(ReportError::Empty);
    }
    Ok(rows)
}

fn date(line: u64, field: &str) -> Result<NaiveDate, ReportError> {
    NaiveDate::parse_from_str(field, "%Y-%m-%d")
        .map_err(|_| ReportError::row(line, format!("`{field}` is not an ISO-8601 date (YYYY-MM-DD)")))
}

fn number(line: u64, field: &str, what: &str) -> Result<f64, ReportError> {
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(ReportError::row(line, format!("{what} `{field}` is not a finite number"))),
    }
}

fn check_increasing(rows: &[(u64, StringRecord)], dates: &[NaiveDate]) -> Result<(), ReportError> {
    match dates.windows(2).position(|w| w[1] <= w[0]) {
        Some(i) => Err(ReportError::NonMonotonicTimestamps { line: rows[i + 1].0 }),
        None => Ok(()),
    }
}
