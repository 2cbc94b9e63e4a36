use crate::error::{Error, Result};

/// Positivity slack: coin-betting wealth is positive by construction, so
/// anything below this is numerical corruption.
const POSITIVITY_SLACK: f64 = 1e-15;

/// Initial and running wealth of an OLO engine,
/// `W_t = W_0 + Σ_{i≤t} ⟨g_i, w_i⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct WealthLedger {
    initial: f64,
    current: f64,
    round: u64,
}

impl WealthLedger {
    pub fn new(initial_wealth: f64) -> Result<Self> {
        if !(initial_wealth > 0.0) || !initial_wealth.is_finite() {
            return Err(Error::param(
                "w0",
                format!("initial wealth must be positive and finite, got {initial_wealth}"),
            ));
        }
        Ok(WealthLedger {
            initial: initial_wealth,
            current: initial_wealth,
            round: 0,
        })
    }

    pub fn initial(&self) -> f64 {
        self.initial
    }

    pub fn wealth(&self) -> f64 {
        self.current
    }

    pub fn log_wealth(&self) -> f64 {
        self.current.ln()
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    /// Adds a round's reward without any sign check (used by non-betting
    /// engines, whose "wealth" may go negative).
    pub fn record(&mut self, reward: f64) {
        self.current += reward;
        self.round += 1;
    }

    /// Adds a round's reward and asserts the wealth stays positive.
    pub fn absorb(&mut self, reward: f64) -> Result<()> {
        self.record(reward);
        if !(self.current > -POSITIVITY_SLACK) || !self.current.is_finite() {
            return Err(Error::WealthNotPositive {
                wealth: self.current,
                round: self.round,
            });
        }
        Ok(())
    }
}
