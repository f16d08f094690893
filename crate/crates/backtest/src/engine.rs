//! Bar-by-bar event loop.
//!
//! Per bar, in order:
//! 1. the decision taken at the previous close is executed at this bar's open;
//! 2. stop-loss / take-profit levels are checked against the bar's range. A
//!    level already crossed at the open fills at the open; otherwise the fill
//!    is at the level. When both levels lie inside the range the stop wins;
//! 3. a short position pays the borrow cost on its value at the close;
//! 4. equity is marked at the close;
//! 5. the strategy observes the closed bar and decides.
//!
//! Costs are charged in cash at the moment they are incurred, so
//! `final equity = deposit + realized + unrealized - costs` holds exactly up to
//! floating-point rounding.

use serde::{Deserialize, Serialize};
use stse_core::{equity_to_returns, EquityCurve, ReturnConvention, ReturnSeries};

use crate::bar::PriceSeries;
use crate::error::BacktestError;
use crate::strategy::{Decision, Intent, MarketView, Side, Strategy, StrategySpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransactionCost {
    /// Charged per execution, in account currency.
    pub fixed: f64,
    /// Charged per execution as a fraction of traded notional.
    pub proportional: f64,
}

impl Default for TransactionCost {
    fn default() -> Self {
        Self { fixed: 0.0, proportional: 0.0001 }
    }
}

impl TransactionCost {
    pub fn of(&self, notional: f64) -> f64 {
        self.fixed + self.proportional * notional.abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "value")]
pub enum PositionSizing {
    /// Notional as a fraction of current equity.
    EquityFraction(f64),
    /// Constant notional in account currency.
    FixedNotional(f64),
}

impl Default for PositionSizing {
    fn default() -> Self {
        PositionSizing::EquityFraction(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BacktestConfig {
    pub initial_deposit: f64,
    pub transaction_cost: TransactionCost,
    /// Charged on short notional at every close the short is held.
    pub borrow_cost_per_period: f64,
    /// Notional may not exceed `leverage * equity`.
    pub leverage: f64,
    pub sizing: PositionSizing,
    /// Keep running (without opening new positions) once equity is not positive.
    pub allow_negative_equity: bool,
    /// Bars per year, for the derived return series.
    pub periodicity: f64,
}

/// Default borrow charge, about 5% a year on daily bars.
pub const DEFAULT_BORROW_COST: f64 = 0.0002;

impl Default for BacktestConfig {
    fn default() -> Self {
        Self {
            initial_deposit: 100_000.0,
            transaction_cost: TransactionCost::default(),
            borrow_cost_per_period: DEFAULT_BORROW_COST,
            leverage: 100.0,
            sizing: PositionSizing::default(),
            allow_negative_equity: false,
            periodicity: 252.0,
        }
    }
}

impl BacktestConfig {
    /// No transaction or borrow costs.
    pub fn frictionless() -> Self {
        Self {
            transaction_cost: TransactionCost { fixed: 0.0, proportional: 0.0 },
            borrow_cost_per_period: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), BacktestError> {
        let bad = |m: &str| Err(BacktestError::InvalidParams(m.to_string()));
        if !(self.initial_deposit.is_finite() && self.initial_deposit > 0.0) {
            return bad("initial_deposit must be positive");
        }
        let c = self.transaction_cost;
        if !(c.fixed >= 0.0 && c.proportional >= 0.0 && self.borrow_cost_per_period >= 0.0)
            || !(c.fixed.is_finite() && c.proportional.is_finite() && self.borrow_cost_per_period.is_finite())
        {
            return bad("costs must be nonnegative and finite");
        }
        if !(self.leverage.is_finite() && self.leverage >= 1.0) {
            return bad("leverage must be at least 1");
        }
        let size = match self.sizing {
            PositionSizing::EquityFraction(f) | PositionSizing::FixedNotional(f) => f,
        };
        if !(size.is_finite() && size > 0.0) {
            return bad("position size must be positive");
        }
        if !(self.periodicity.is_finite() && self.periodicity > 0.0) {
            return bad("periodicity must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitReason {
    Signal,
    Reverse,
    StopLoss,
    TakeProfit,
    TrailingStop,
    /// Still open at the end of the data; marked to the last close.
    EndOfData,
}

impl ExitReason {
    pub fn as_str(self) -> &'static str {
        match self {
            ExitReason::Signal => "signal",
            ExitReason::Reverse => "reverse",
            ExitReason::StopLoss => "stop_loss",
            ExitReason::TakeProfit => "take_profit",
            ExitReason::TrailingStop => "trailing_stop",
            ExitReason::EndOfData => "end_of_data",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trade {
    pub side: Side,
    pub units: f64,
    pub entry_index: usize,
    pub entry_date: chrono::NaiveDate,
    pub entry_price: f64,
    pub exit_index: usize,
    pub exit_date: chrono::NaiveDate,
    /// Fill price, or the last close for a position still open.
    pub exit_price: f64,
    pub exit_reason: ExitReason,
    /// Price P&L before costs (unrealized for a position still open).
    pub gross_pnl: f64,
    /// Entry and exit commissions plus borrow charges.
    pub costs: f64,
}

impl Trade {
    pub fn net_pnl(&self) -> f64 {
        self.gross_pnl - self.costs
    }

    pub fn is_open(&self) -> bool {
        self.exit_reason == ExitReason::EndOfData
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestResult {
    pub strategy: String,
    pub symbol: String,
    pub equity: EquityCurve,
    pub trades: Vec<Trade>,
    pub returns: ReturnSeries,
    pub initial_deposit: f64,
    pub realized_pnl: f64,
    pub unrealized_pnl: f64,
    pub total_costs: f64,
}

impl BacktestResult {
    pub fn final_equity(&self) -> f64 {
        self.equity.last().unwrap_or(self.initial_deposit)
    }

    pub fn closed_trades(&self) -> impl Iterator<Item = &Trade> {
        self.trades.iter().filter(|t| !t.is_open())
    }
}

#[derive(Debug, Clone)]
struct Position {
    side: Side,
    units: f64,
    entry_index: usize,
    entry_price: f64,
    costs: f64,
    stop: Option<f64>,
    target: Option<f64>,
    trailing: Option<f64>,
}

impl Position {
    fn pnl_at(&self, price: f64) -> f64 {
        self.side.sign() * self.units * (price - self.entry_price)
    }

    /// The tighter of the fixed stop and the trailing stop, with its reason.
    fn effective_stop(&self) -> Option<(f64, ExitReason)> {
        let fixed = self.stop.map(|s| (s, ExitReason::StopLoss));
        let trail = self.trailing.map(|s| (s, ExitReason::TrailingStop));
        match (fixed, trail) {
            (Some(a), Some(b)) => Some(match self.side {
                Side::Long if b.0 > a.0 => b,
                Side::Short if b.0 < a.0 => b,
                _ => a,
            }),
            (a, b) => a.or(b),
        }
    }
}

struct Ledger<'a> {
    prices: &'a PriceSeries,
    config: &'a BacktestConfig,
    cash: f64,
    position: Option<Position>,
    trades: Vec<Trade>,
    realized: f64,
    costs: f64,
    consecutive_losses: u32,
}

impl Ledger<'_> {
    fn charge(&mut self, amount: f64) {
        self.cash -= amount;
        self.costs += amount;
        if let Some(p) = self.position.as_mut() {
            p.costs += amount;
        }
    }

    fn close(&mut self, index: usize, price: f64, reason: ExitReason) {
        let Some(pos) = self.position.take() else { return };
        let gross = pos.pnl_at(price);
        let fee = self.config.transaction_cost.of(pos.units * price);
        self.cash += gross - fee;
        self.costs += fee;
        self.realized += gross;
        let trade = self.trade(&pos, index, price, reason, gross, pos.costs + fee);
        // price P&L only, so cost settings cannot change a strategy's sizing path
        if trade.gross_pnl < 0.0 {
            self.consecutive_losses += 1;
        } else {
            self.consecutive_losses = 0;
        }
        self.trades.push(trade);
    }

    fn trade(&self, pos: &Position, index: usize, price: f64, reason: ExitReason, gross: f64, costs: f64) -> Trade {
        let bars = self.prices.bars();
        Trade {
            side: pos.side,
            units: pos.units,
            entry_index: pos.entry_index,
            entry_date: bars[pos.entry_index].timestamp,
            entry_price: pos.entry_price,
            exit_index: index,
            exit_date: bars[index].timestamp,
            exit_price: price,
            exit_reason: reason,
            gross_pnl: gross,
            costs,
        }
    }

    fn open(&mut self, index: usize, price: f64, side: Side, d: &Decision) {
        let equity = self.cash;
        if equity <= 0.0 {
            return;
        }
        let cap = self.config.leverage * equity;
        let notional = match (d.margin_fraction, self.config.sizing) {
            (Some(f), _) => f * equity * self.config.leverage,
            (None, PositionSizing::EquityFraction(f)) => f * equity,
            (None, PositionSizing::FixedNotional(n)) => n,
        }
        .min(cap);
        if !(notional > 0.0) {
            return;
        }
        let tick = self.prices.tick_size();
        let sign = side.sign();
        self.position = Some(Position {
            side,
            units: notional / price,
            entry_index: index,
            entry_price: price,
            costs: 0.0,
            stop: d.stop_loss_points.map(|p| price - sign * p * tick),
            target: d.take_profit_points.map(|p| price + sign * p * tick),
            trailing: None,
        });
        self.charge(self.config.transaction_cost.of(notional));
    }

    fn execute(&mut self, index: usize, d: &Decision) {
        let price = self.prices.bars()[index].open;
        match d.intent {
            Intent::Hold => {}
            Intent::Flat => self.close(index, price, ExitReason::Signal),
            Intent::Enter(side) => match self.position.as_ref().map(|p| p.side) {
                Some(s) if s == side => {}
                Some(_) => {
                    self.close(index, price, ExitReason::Reverse);
                    self.open(index, price, side, d);
                }
                None => self.open(index, price, side, d),
            },
        }
        if let (Some(level), Some(pos)) = (d.trailing_stop, self.position.as_mut()) {
            let on_safe_side = match pos.side {
                Side::Long => level < price,
                Side::Short => level > price,
            };
            let tighter = match (pos.side, pos.trailing) {
                (_, None) => true,
                (Side::Long, Some(t)) => level > t,
                (Side::Short, Some(t)) => level < t,
            };
            if level.is_finite() && on_safe_side && tighter {
                pos.trailing = Some(level);
            }
        }
    }

    fn check_exits(&mut self, index: usize) {
        let Some(pos) = self.position.as_ref() else { return };
        let bar = self.prices.bars()[index];
        let exit = match pos.side {
            Side::Long => {
                let stop = pos.effective_stop().and_then(|(s, r)| {
                    if bar.open <= s {
                        Some((bar.open, r))
                    } else {
                        (bar.low <= s).then_some((s, r))
                    }
                });
                stop.or_else(|| {
                    pos.target.and_then(|t| {
                        if bar.open >= t {
                            Some((bar.open, ExitReason::TakeProfit))
                        } else {
                            (bar.high >= t).then_some((t, ExitReason::TakeProfit))
                        }
                    })
                })
            }
            Side::Short => {
                let stop = pos.effective_stop().and_then(|(s, r)| {
                    if bar.open >= s {
                        Some((bar.open, r))
                    } else {
                        (bar.high >= s).then_some((s, r))
                    }
                });
                stop.or_else(|| {
                    pos.target.and_then(|t| {
                        if bar.open <= t {
                            Some((bar.open, ExitReason::TakeProfit))
                        } else {
                            (bar.low <= t).then_some((t, ExitReason::TakeProfit))
                        }
                    })
                })
            }
        };
        if let Some((price, reason)) = exit {
            self.close(index, price, reason);
        }
    }

    fn mark(&self, price: f64) -> f64 {
        self.cash + self.position.as_ref().map_or(0.0, |p| p.pnl_at(price))
    }
}

pub fn run_backtest(
    spec: &StrategySpec,
    prices: &PriceSeries,
    config: &BacktestConfig,
) -> Result<BacktestResult, BacktestError> {
    let mut strategy = spec.build()?;
    run_strategy(strategy.as_mut(), spec.name(), prices, config)
}

/// Runs any [`Strategy`] implementation; `name` labels the result.
pub fn run_strategy(
    strategy: &mut dyn Strategy,
    name: &str,
    prices: &PriceSeries,
    config: &BacktestConfig,
) -> Result<BacktestResult, BacktestError> {
    config.validate()?;
    let warmup = strategy.warmup();
    if prices.len() <= warmup || prices.len() < 2 {
        return Err(BacktestError::WarmupTooLong { warmup, bars: prices.len() });
    }

    let mut ledger = Ledger {
        prices,
        config,
        cash: config.initial_deposit,
        position: None,
        trades: Vec::new(),
        realized: 0.0,
        costs: 0.0,
        consecutive_losses: 0,
    };
    let mut points = Vec::with_capacity(prices.len());
    let mut pending: Option<Decision> = None;

    for (index, bar) in prices.bars().iter().enumerate() {
        if let Some(d) = pending.take() {
            ledger.execute(index, &d);
        }
        ledger.check_exits(index);
        if let Some(pos) = ledger.position.as_ref() {
            if pos.side == Side::Short && config.borrow_cost_per_period > 0.0 {
                let charge = config.borrow_cost_per_period * pos.units * bar.close;
                ledger.charge(charge);
            }
        }
        let equity = ledger.mark(bar.close);
        if !(equity > 0.0) && !config.allow_negative_equity {
            return Err(BacktestError::InsolventAccount { index, equity });
        }
        points.push((bar.timestamp, equity));

        let view = MarketView {
            index,
            bar,
            position: ledger.position.as_ref().map(|p| p.side),
            consecutive_losses: ledger.consecutive_losses,
        };
        let decision = strategy.on_bar(&view);
        if index + 1 >= warmup {
            pending = Some(decision);
        }
    }

    let last = prices.len() - 1;
    let last_close = prices.bars()[last].close;
    let mut unrealized = 0.0;
    if let Some(pos) = ledger.position.take() {
        unrealized = pos.pnl_at(last_close);
        let trade = ledger.trade(&pos, last, last_close, ExitReason::EndOfData, unrealized, pos.costs);
        ledger.trades.push(trade);
    }

    let equity = EquityCurve::new(points)?;
    let convention = if equity.min_equity().is_some_and(|m| m <= 0.0) {
        ReturnConvention::DepositRelative
    } else {
        ReturnConvention::Simple
    };
    let label = format!("{}_{}", name, prices.symbol());
    let returns = equity_to_returns(&equity, config.periodicity, convention)?.with_label(label);

    Ok(BacktestResult {
        strategy: name.to_string(),
        symbol: prices.symbol().to_string(),
        equity,
        trades: ledger.trades,
        returns,
        initial_deposit: config.initial_deposit,
        realized_pnl: ledger.realized,
        unrealized_pnl: unrealized,
        total_costs: ledger.costs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bar::Bar;
    use crate::strategy::MaCrossoverParams;
    use chrono::{Days, NaiveDate};

    /// Replays a fixed list of decisions, one per bar.
    struct Script(Vec<Decision>);

    impl Strategy for Script {
        fn warmup(&self) -> usize {
            1
        }

        fn on_bar(&mut self, view: &MarketView<'_>) -> Decision {
            self.0.get(view.index).copied().unwrap_or_else(Decision::hold)
        }
    }

    fn series(ohlc: &[(f64, f64, f64, f64)]) -> PriceSeries {
        let d0 = NaiveDate::from_ymd_opt(2021, 3, 1).unwrap();
        let bars = ohlc
            .iter()
            .enumerate()
            .map(|(i, &(open, high, low, close))| Bar {
                timestamp: d0 + Days::new(i as u64),
                open,
                high,
                low,
                close,
                volume: 1.0,
            })
            .collect();
        PriceSeries::new(bars, "TEST", 0.01).unwrap()
    }

    fn run(decisions: Vec<Decision>, prices: &PriceSeries, config: &BacktestConfig) -> BacktestResult {
        run_strategy(&mut Script(decisions), "script", prices, config).unwrap()
    }

    fn frictionless_fixed(notional: f64) -> BacktestConfig {
        BacktestConfig { sizing: PositionSizing::FixedNotional(notional), ..BacktestConfig::frictionless() }
    }

    #[test]
    fn fills_at_next_open() {
        let p = series(&[(100.0, 101.0, 99.0, 100.0), (102.0, 103.0, 101.0, 103.0), (104.0, 105.0, 103.0, 104.0)]);
        let r = run(vec![Decision::enter(Side::Long)], &p, &frictionless_fixed(10_200.0));
        let t = &r.trades[0];
        assert_eq!((t.entry_index, t.entry_price), (1, 102.0));
        assert!((t.units - 100.0).abs() < 1e-12);
        assert!(t.is_open());
        let eq: Vec<f64> = r.equity.points().iter().map(|p| p.1).collect();
        assert_eq!(eq, vec![100_000.0, 100_100.0, 100_200.0]);
    }

    #[test]
    fn stop_fills_at_level_or_gap_open() {
        let mut d = Decision::enter(Side::Long);
        d.stop_loss_points = Some(200.0); // 2.00 below the fill
        let bars = [(100.0, 100.0, 100.0, 100.0), (100.0, 100.5, 99.0, 99.5), (99.0, 99.0, 97.5, 98.0)];
        let r = run(vec![d], &series(&bars), &frictionless_fixed(10_000.0));
        let t = &r.trades[0];
        assert_eq!((t.exit_index, t.exit_price, t.exit_reason), (2, 98.0, ExitReason::StopLoss));

        let gap = [(100.0, 100.0, 100.0, 100.0), (100.0, 100.5, 99.0, 99.5), (97.0, 97.5, 96.0, 97.0)];
        let r = run(vec![d], &series(&gap), &frictionless_fixed(10_000.0));
        assert_eq!(r.trades[0].exit_price, 97.0);
        assert!((r.final_equity() - (100_000.0 - 300.0)).abs() < 1e-9);
    }

    #[test]
    fn stop_wins_when_both_levels_inside_bar() {
        let mut d = Decision::enter(Side::Short);
        d.stop_loss_points = Some(100.0);
        d.take_profit_points = Some(100.0);
        let bars = [(50.0, 50.0, 50.0, 50.0), (50.0, 50.0, 50.0, 50.0), (50.0, 52.0, 48.0, 50.0)];
        let r = run(vec![d], &series(&bars), &frictionless_fixed(5_000.0));
        let t = &r.trades[0];
        assert_eq!((t.exit_price, t.exit_reason), (51.0, ExitReason::StopLoss));
        assert!((t.gross_pnl + 100.0).abs() < 1e-9);
    }

    #[test]
    fn costs_are_charged_on_both_legs_and_borrow() {
        let config = BacktestConfig {
            transaction_cost: TransactionCost { fixed: 1.0, proportional: 0.001 },
            borrow_cost_per_period: 0.0005,
            sizing: PositionSizing::FixedNotional(10_000.0),
            ..BacktestConfig::default()
        };
        let flat = [(100.0, 100.0, 100.0, 100.0); 4];
        let r = run(vec![Decision::enter(Side::Short), Decision::hold(), Decision::flat()], &series(&flat), &config);
        let t = &r.trades[0];
        // entry 1 + 10, two closes of borrow at 5 each, exit 1 + 10
        assert!((t.costs - 32.0).abs() < 1e-9);
        assert!((r.total_costs - 32.0).abs() < 1e-9);
        assert!((r.final_equity() - (100_000.0 - 32.0)).abs() < 1e-9);
        assert_eq!(t.exit_reason, ExitReason::Signal);
    }

    #[test]
    fn trailing_stop_only_tightens() {
        let mut first = Decision::enter(Side::Long);
        first.trailing_stop = Some(95.0);
        let looser = Decision::hold().trailing(Some(90.0));
        let above_price = Decision::hold().trailing(Some(150.0));
        let bars = [(100.0, 100.0, 100.0, 100.0); 5];
        let mut p = series(&bars).bars().to_vec();
        p[4].low = 94.0;
        p[4].close = 94.5;
        let p = PriceSeries::new(p, "T", 0.01).unwrap();
        let r = run(vec![first, looser, above_price], &p, &frictionless_fixed(10_000.0));
        let t = &r.trades[0];
        assert_eq!((t.exit_index, t.exit_price, t.exit_reason), (4, 95.0, ExitReason::TrailingStop));
    }

    #[test]
    fn reversal_closes_then_opens() {
        let p = series(&[(10.0, 10.0, 10.0, 10.0), (10.0, 11.0, 10.0, 11.0), (12.0, 12.0, 11.0, 11.0)]);
        let r = run(vec![Decision::enter(Side::Long), Decision::enter(Side::Short)], &p, &frictionless_fixed(1_000.0));
        assert_eq!(r.trades.len(), 2);
        assert_eq!(r.trades[0].exit_reason, ExitReason::Reverse);
        assert!((r.trades[0].gross_pnl - 200.0).abs() < 1e-9);
        assert_eq!(r.trades[1].side, Side::Short);
        assert_eq!(r.trades[1].entry_price, 12.0);
    }

    #[test]
    fn insolvency_halts_unless_allowed() {
        let p = series(&[(100.0, 100.0, 100.0, 100.0), (100.0, 100.0, 100.0, 100.0), (100.0, 100.0, 40.0, 40.0)]);
        let levered = BacktestConfig { sizing: PositionSizing::EquityFraction(2.0), ..BacktestConfig::frictionless() };
        let err = run_strategy(&mut Script(vec![Decision::enter(Side::Long)]), "s", &p, &levered).unwrap_err();
        assert!(matches!(err, BacktestError::InsolventAccount { index: 2, .. }));

        let allowed = BacktestConfig { allow_negative_equity: true, ..levered };
        let r = run(vec![Decision::enter(Side::Long)], &p, &allowed);
        assert!((r.final_equity() + 20_000.0).abs() < 1e-9);
        assert_eq!(r.returns.convention(), ReturnConvention::DepositRelative);
    }

    #[test]
    fn leverage_caps_notional() {
        let p = series(&[(100.0, 100.0, 100.0, 100.0); 3]);
        let config = BacktestConfig {
            leverage: 2.0,
            sizing: PositionSizing::FixedNotional(1e9),
            ..BacktestConfig::frictionless()
        };
        let r = run(vec![Decision::enter(Side::Long)], &p, &config);
        assert!((r.trades[0].units - 2_000.0).abs() < 1e-9);
    }

    #[test]
    fn moving_average_on_constant_prices_never_trades() {
        let p = series(&[(100.0, 100.0, 100.0, 100.0); 60]);
        for spec in [
            StrategySpec::Mama(MaCrossoverParams::default()),
            StrategySpec::from_name("maps").unwrap(),
            StrategySpec::from_name("maps2").unwrap(),
        ] {
            let r = run_backtest(&spec, &p, &BacktestConfig::default()).unwrap();
            assert!(r.trades.is_empty());
            assert!(r.equity.points().iter().all(|p| p.1 == 100_000.0));
        }
    }

    #[test]
    fn warmup_longer_than_data() {
        let p = series(&[(100.0, 100.0, 100.0, 100.0); 20]);
        let err = run_backtest(&StrategySpec::from_name("macd").unwrap(), &p, &BacktestConfig::default()).unwrap_err();
        assert_eq!(err, BacktestError::WarmupTooLong { warmup: 32, bars: 20 });
    }

    #[test]
    fn config_validation() {
        let bad = BacktestConfig { leverage: 0.5, ..BacktestConfig::default() };
        assert!(bad.validate().is_err());
        let bad = BacktestConfig {
            transaction_cost: TransactionCost { fixed: -1.0, proportional: 0.0 },
            ..BacktestConfig::default()
        };
        assert!(bad.validate().is_err());
        assert!(BacktestConfig::default().validate().is_ok());
    }
}
