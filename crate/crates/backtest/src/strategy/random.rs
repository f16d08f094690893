use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_period, Decision, MarketView, Side, Strategy};
use crate::error::BacktestError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomTraderParams {
    pub seed: u64,
    /// Bar closes a position is held for before it is closed.
    pub holding_period: usize,
    /// Chance of opening a position on a bar while flat.
    pub entry_probability: f64,
}

impl Default for RandomTraderParams {
    fn default() -> Self {
        Self { seed: 0, holding_period: 5, entry_probability: 1.0 }
    }
}

impl RandomTraderParams {
    pub fn validate(&self) -> Result<(), BacktestError> {
        check_period("holding_period", self.holding_period)?;
        if !(0.0..=1.0).contains(&self.entry_probability) {
            return Err(BacktestError::InvalidStrategyParams("entry_probability must be in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Coin-flip direction, fixed holding period. A no-skill baseline.
pub struct RandomTrader {
    rng: ChaCha8Rng,
    holding_period: usize,
    entry_probability: f64,
    held: usize,
}

impl RandomTrader {
    pub fn new(p: &RandomTraderParams) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(p.seed),
            holding_period: p.holding_period,
            entry_probability: p.entry_probability,
            held: 0,
        }
    }
}

impl Strategy for RandomTrader {
    fn warmup(&self) -> usize {
        1
    }

    fn on_bar(&mut self, view: &MarketView<'_>) -> Decision {
        if view.position.is_some() {
            self.held += 1;
            if self.held >= self.holding_period {
                return Decision::flat();
            }
            return Decision::hold();
        }
        self.held = 0;
        if self.rng.random::<f64>() >= self.entry_probability {
            return Decision::hold();
        }
        Decision::enter(if self.rng.random::<bool>() { Side::Long } else { Side::Short })
    }
}
