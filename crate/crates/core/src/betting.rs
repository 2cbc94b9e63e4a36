//! Scalar Krichevsky–Trofimov coin betting.
//!
//! `ψ_t(x) = 2^t B((t+x+1)/2, (t-x+1)/2) / B(1/2, 1/2)` is the wealth
//! guarantee of the KT bettor after `t` rounds with coin-sum `x`. Everything
//! is kept in log domain.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::special::{ln_gamma, ln_gamma_shift};

const LN_PI: f64 = 1.144_729_885_849_400_2;

// Accumulated sums of unit-norm gradients can exceed `t` by a few ulps.
fn slack(t: f64) -> f64 {
    1e-9 * t.max(1.0)
}

/// Natural log of a strictly positive potential.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogPotential(f64);

impl LogPotential {
    pub const ZERO: LogPotential = LogPotential(0.0);

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn exp(self) -> f64 {
        self.0.exp()
    }
}

impl From<LogPotential> for f64 {
    fn from(p: LogPotential) -> f64 {
        p.0
    }
}

/// A signed relative bet in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct BetFraction(f64);

impl BetFraction {
    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<BetFraction> for f64 {
    fn from(b: BetFraction) -> f64 {
        b.0
    }
}

fn check_history(t: f64, x: f64, what: &'static str) -> Result<f64> {
    if !x.is_finite() || x.abs() > t + slack(t) {
        return Err(Error::domain(what, format!("|x| = {} exceeds t = {t}", x.abs())));
    }
    Ok(x.abs().min(t))
}

/// `ln ψ_t(x)`.
pub fn log_kt_potential(t: u64, x: f64) -> Result<LogPotential> {
    let tf = t as f64;
    let x = check_history(tf, x, "log_kt_potential")?;
    if t == 0 {
        return Ok(LogPotential::ZERO);
    }
    let a = (tf + x + 1.0) / 2.0;
    let b = (tf - x + 1.0) / 2.0;
    Ok(LogPotential(
        tf * LN_2 + ln_gamma(a) + ln_gamma(b) - ln_gamma(tf + 1.0) - LN_PI,
    ))
}

/// `ln ψ_{t+1}(new_norm) - ln ψ_t(old_norm)`.
///
/// Written as three shifted log-gamma differences so that nothing of order
/// `t ln t` is ever formed; the result stays accurate for `t` in the millions.
pub fn log_kt_potential_ratio(t: u64, old_norm: f64, new_norm: f64) -> Result<f64> {
    let tf = t as f64;
    let x = check_history(tf, old_norm, "log_kt_potential_ratio")?;
    let y = check_history(tf + 1.0, new_norm, "log_kt_potential_ratio")?;
    if (y - x).abs() > 1.0 + slack(tf) {
        return Err(Error::domain(
            "log_kt_potential_ratio",
            format!("norm moved by {} in one round", (y - x).abs()),
        ));
    }
    let a = (tf + x + 1.0) / 2.0;
    let b = (tf - x + 1.0) / 2.0;
    let d = ((1.0 + y - x) / 2.0).clamp(0.0, 1.0);
    Ok(LN_2 - (tf + 1.0).ln() + ln_gamma_shift(a, d) + ln_gamma_shift(b, 1.0 - d))
}

/// The KT bet `x / t` at round `t` given the coin-sum `x` of the first
/// `t - 1` outcomes.
pub fn kt_bet_fraction(t: u64, x: f64) -> Result<BetFraction> {
    if t == 0 {
        return Err(Error::domain("kt_bet_fraction", "rounds start at t = 1"));
    }
    let tf = t as f64;
    if !x.is_finite() || x.abs() > tf - 1.0 + slack(tf) {
        return Err(Error::domain(
            "kt_bet_fraction",
            format!("|x| = {} exceeds t - 1 = {}", x.abs(), t - 1),
        ));
    }
    Ok(BetFraction(x / tf))
}
