//! Result files written by `backtest` and `sweep`.

use std::path::Path;

use anyhow::Context;
use stse_backtest::BacktestResult;

pub fn write_equity(path: &Path, result: &BacktestResult) -> anyhow::Result<()> {
    let mut w = writer(path)?;
    w.write_record(["date", "equity"])?;
    for (d, e) in result.equity.points() {
        w.write_record([d.to_string(), e.to_string()])?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))
}

pub fn write_returns(path: &Path, result: &BacktestResult) -> anyhow::Result<()> {
    let mut w = writer(path)?;
    w.write_record(["date", "return"])?;
    let dates = result.returns.dates().unwrap_or_default();
    for (d, r) in dates.iter().zip(result.returns.values()) {
        w.write_record([d.to_string(), r.to_string()])?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))
}

pub fn write_trades(path: &Path, result: &BacktestResult) -> anyhow::Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "side",
        "units",
        "entry_date",
        "entry_price",
        "exit_date",
        "exit_price",
        "exit_reason",
        "gross_pnl",
        "costs",
        "net_pnl",
    ])?;
    for t in &result.trades {
        w.write_record([
            t.side.as_str().to_string(),
            t.units.to_string(),
            t.entry_date.to_string(),
            t.entry_price.to_string(),
            t.exit_date.to_string(),
            t.exit_price.to_string(),
            t.exit_reason.as_str().to_string(),
            t.gross_pnl.to_string(),
            t.costs.to_string(),
            t.net_pnl().to_string(),
        ])?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))
}

fn writer(path: &Path) -> anyhow::Result<csv::Writer<std::fs::File>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .with_context(|| format!("creating {}", path.display()))
}
