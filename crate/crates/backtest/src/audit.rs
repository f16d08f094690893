//! Consistency checks on finished backtests, rebuilt from the trade log.
//! Used by the test suites; cheap enough to run on any result.

use crate::bar::PriceSeries;
use crate::engine::{run_backtest, BacktestConfig, BacktestResult};
use crate::strategy::StrategySpec;

/// Final equity must equal the deposit plus every trade's price P&L minus
/// every trade's costs, to `rel_tol` of the gross amounts involved.
pub fn check_accounting(result: &BacktestResult, rel_tol: f64) -> Result<(), String> {
    let gross: f64 = result.trades.iter().map(|t| t.gross_pnl).sum();
    let costs: f64 = result.trades.iter().map(|t| t.costs).sum();
    let scale = result.initial_deposit.abs()
        + result.trades.iter().map(|t| t.gross_pnl.abs() + t.costs.abs()).sum::<f64>();
    let tol = rel_tol * scale;

    let final_equity = result.final_equity();
    let from_trades = result.initial_deposit + gross - costs;
    if (final_equity - from_trades).abs() > tol {
        return Err(format!("final equity {final_equity} != deposit + trade P&L - costs = {from_trades}"));
    }
    let from_totals = result.initial_deposit + result.realized_pnl + result.unrealized_pnl - result.total_costs;
    if (final_equity - from_totals).abs() > tol {
        return Err(format!("final equity {final_equity} != deposit + realized + unrealized - costs = {from_totals}"));
    }
    if (costs - result.total_costs).abs() > tol {
        return Err(format!("trade costs {costs} != total costs {}", result.total_costs));
    }
    if result.equity.first() != Some(result.initial_deposit) {
        return Err("equity curve does not start at the deposit".into());
    }
    Ok(())
}

/// Re-runs on the first `k` bars: every equity point and every trade closed
/// before the cut must be bit-identical to the full run.
pub fn check_prefix_replay(
    spec: &StrategySpec,
    prices: &PriceSeries,
    config: &BacktestConfig,
    full: &BacktestResult,
    k: usize,
) -> Result<(), String> {
    let prefix = run_backtest(spec, &prices.prefix(k), config).map_err(|e| format!("prefix run failed: {e}"))?;
    let full_points = &full.equity.points()[..k];
    if prefix.equity.points() != full_points {
        let at = prefix.equity.points().iter().zip(full_points).position(|(a, b)| a != b);
        return Err(format!("equity differs after truncating at {k} (first at {at:?})"));
    }
    let closed: Vec<_> = prefix.closed_trades().collect();
    let expected: Vec<_> = full.closed_trades().filter(|t| t.exit_index < k).collect();
    if closed != expected {
        return Err(format!("closed trades differ after truncating at {k}"));
    }
    Ok(())
}
