//! The coin-betting to OLO reduction.
//!
//! A [`Bettor`] produces a vectorial betting fraction `v_t` with `‖v_t‖ < 1`;
//! [`CoinBettingOlo`] turns it into the action `w_t = v_t W_{t-1}` and keeps
//! the wealth ledger.

use crate::betting::{kt_bet_fraction, log_kt_potential_ratio};
use crate::error::{Error, Result};
use crate::ledger::WealthLedger;
use crate::side_info::StateDriven;
use crate::vector::{axpy, check_ball, check_dim, dot, norm};

/// A betting strategy over `R^d`.
pub trait Bettor {
    fn dim(&self) -> usize;

    /// The betting fraction for the coming round.
    fn bet(&mut self) -> Vec<f64>;

    /// Absorb the round's outcome `g_t` (already validated to lie in the ball).
    fn absorb(&mut self, g: &[f64]) -> Result<()>;

    /// Running `ln Ψ` of the potential this bettor guarantees.
    fn log_potential(&self) -> f64;
}

/// An online linear optimization engine in the reward convention.
pub trait OloEngine {
    fn dim(&self) -> usize;

    /// Feature vector of the coming round, for engines that need it before
    /// acting. Ignored by default.
    fn observe_features(&mut self, _x: &[f64]) {}

    fn action(&mut self) -> Result<Vec<f64>>;

    fn update(&mut self, g: &[f64]) -> Result<()>;

    /// Current wealth for betting engines.
    fn wealth(&self) -> Option<f64> {
        None
    }

    fn label(&self) -> String;
}

impl<E: OloEngine + ?Sized> OloEngine for Box<E> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn observe_features(&mut self, x: &[f64]) {
        (**self).observe_features(x)
    }
    fn action(&mut self) -> Result<Vec<f64>> {
        (**self).action()
    }
    fn update(&mut self, g: &[f64]) -> Result<()> {
        (**self).update(g)
    }
    fn wealth(&self) -> Option<f64> {
        (**self).wealth()
    }
    fn label(&self) -> String {
        (**self).label()
    }
}

/// KT sufficient statistics of one (sub)sequence: count `t` and sum `F`.
#[derive(Debug, Clone, PartialEq)]
pub struct KtStat {
    pub count: u64,
    pub sum: Vec<f64>,
}

impl KtStat {
    pub fn new(dim: usize) -> Self {
        KtStat {
            count: 0,
            sum: vec![0.0; dim],
        }
    }

    pub fn sum_norm(&self) -> f64 {
        norm(&self.sum)
    }

    /// Vectorial KT bet `F / (t + 1)`.
    pub fn bet(&self) -> Vec<f64> {
        let denom = (self.count + 1) as f64;
        self.sum.iter().map(|f| f / denom).collect()
    }

    /// `ln Ψ_{t+1}(F + g) - ln Ψ_t(F)`.
    pub fn log_ratio(&self, g: &[f64]) -> Result<f64> {
        let old = self.sum_norm();
        let new = self
            .sum
            .iter()
            .zip(g)
            .map(|(f, x)| (f + x) * (f + x))
            .sum::<f64>()
            .sqrt();
        log_kt_potential_ratio(self.count, old, new)
    }

    pub fn commit(&mut self, g: &[f64]) {
        axpy(&mut self.sum, 1.0, g);
        self.count += 1;
    }
}

/// Vectorial KT betting, `v_t = Σg^{t-1} / t`.
#[derive(Debug, Clone, PartialEq)]
pub struct KtBettor {
    stat: KtStat,
    log_potential: f64,
}

impl KtBettor {
    pub fn new(dim: usize) -> Self {
        KtBettor {
            stat: KtStat::new(dim),
            log_potential: 0.0,
        }
    }

    pub fn stat(&self) -> &KtStat {
        &self.stat
    }
}

impl Bettor for KtBettor {
    fn dim(&self) -> usize {
        self.stat.sum.len()
    }

    fn bet(&mut self) -> Vec<f64> {
        self.stat.bet()
    }

    fn absorb(&mut self, g: &[f64]) -> Result<()> {
        self.log_potential += self.stat.log_ratio(g)?;
        self.stat.commit(g);
        Ok(())
    }

    fn log_potential(&self) -> f64 {
        self.log_potential
    }
}

/// OLO from a betting strategy: `w_t = v_t W_{t-1}`.
#[derive(Debug, Clone)]
pub struct CoinBettingOlo<B> {
    bettor: B,
    ledger: WealthLedger,
    pending: Option<Vec<f64>>,
    clip: bool,
    label: String,
}

impl<B: Bettor> CoinBettingOlo<B> {
    pub fn new(bettor: B, initial_wealth: f64) -> Result<Self> {
        Ok(CoinBettingOlo {
            bettor,
            ledger: WealthLedger::new(initial_wealth)?,
            pending: None,
            clip: false,
            label: "coin-betting".to_string(),
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Rescale out-of-ball gradients instead of rejecting them.
    pub fn with_clipping(mut self, clip: bool) -> Self {
        self.clip = clip;
        self
    }

    pub fn bettor(&self) -> &B {
        &self.bettor
    }

    pub fn bettor_mut(&mut self) -> &mut B {
        self.pending = None;
        &mut self.bettor
    }

    pub fn ledger(&self) -> &WealthLedger {
        &self.ledger
    }

    pub fn wealth(&self) -> f64 {
        self.ledger.wealth()
    }

    pub fn log_wealth(&self) -> f64 {
        self.ledger.log_wealth()
    }

    pub fn log_potential(&self) -> f64 {
        self.bettor.log_potential()
    }

    pub fn action(&mut self) -> Vec<f64> {
        let w = self.ledger.wealth();
        let a: Vec<f64> = self.bettor.bet().into_iter().map(|v| v * w).collect();
        self.pending = Some(a.clone());
        a
    }

    /// Plays the pending action (computing it if needed) against `g` and
    /// returns the round's reward `⟨g, w⟩`.
    pub fn update(&mut self, g: &[f64]) -> Result<f64> {
        check_dim(self.bettor.dim(), g.len())?;
        let g = check_ball(g, self.clip)?;
        let w = match self.pending.take() {
            Some(w) => w,
            None => {
                self.action();
                self.pending.take().expect("action just computed")
            }
        };
        let reward = dot(&g, &w);
        self.ledger.absorb(reward)?;
        self.bettor.absorb(&g)?;
        Ok(reward)
    }
}

impl<B: Bettor + StateDriven> CoinBettingOlo<B> {
    /// Sets the side-information state and returns the action for it.
    pub fn action_in_state(&mut self, state: usize) -> Result<Vec<f64>> {
        self.bettor.set_state(state)?;
        Ok(self.action())
    }
}

impl<B: Bettor> OloEngine for CoinBettingOlo<B> {
    fn dim(&self) -> usize {
        self.bettor.dim()
    }

    fn action(&mut self) -> Result<Vec<f64>> {
        Ok(CoinBettingOlo::action(self))
    }

    fn update(&mut self, g: &[f64]) -> Result<()> {
        CoinBettingOlo::update(self, g).map(|_| ())
    }

    fn wealth(&self) -> Option<f64> {
        Some(self.ledger.wealth())
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

/// One-dimensional KT OLO on a scalar sequence: `w_t = (Σg^{t-1} / t) W_{t-1}`.
///
/// Returns the actions and the wealth trace `W_0, …, W_T`.
pub fn one_dim_kt_olo(gs: &[f64], initial_wealth: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut ledger = WealthLedger::new(initial_wealth)?;
    let mut actions = Vec::with_capacity(gs.len());
    let mut trace = Vec::with_capacity(gs.len() + 1);
    trace.push(ledger.wealth());
    let mut x = 0.0;
    for (i, &g) in gs.iter().enumerate() {
        if !(g.abs() <= 1.0) {
            return Err(Error::NormViolation { norm: g.abs() });
        }
        let b = kt_bet_fraction(i as u64 + 1, x)?.value();
        let w = b * ledger.wealth();
        ledger.absorb(g * w)?;
        actions.push(w);
        trace.push(ledger.wealth());
        x += g;
    }
    Ok((actions, trace))
}
