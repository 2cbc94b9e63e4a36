//! Per-state algorithms: one independent learner per side-information state.

use std::f64::consts::PI;

use crate::betting::log_kt_potential;
use crate::error::{Error, Result};
use crate::olo::{Bettor, KtStat, OloEngine};
use crate::side_info::StateDriven;
use crate::vector::{axpy, check_ball, check_dim, norm, scaled};

fn check_state(state: usize, states: usize) -> Result<()> {
    if state >= states {
        return Err(Error::StateOutOfRange { state, states });
    }
    Ok(())
}

/// Per-state KT statistics `(T_s, F_s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTable {
    stats: Vec<KtStat>,
}

impl StateTable {
    pub fn new(states: usize, dim: usize) -> Result<Self> {
        if states == 0 {
            return Err(Error::param("states", "need at least one state"));
        }
        Ok(StateTable {
            stats: vec![KtStat::new(dim); states],
        })
    }

    pub fn states(&self) -> usize {
        self.stats.len()
    }

    pub fn stat(&self, state: usize) -> &KtStat {
        &self.stats[state]
    }

    pub fn total_count(&self) -> u64 {
        self.stats.iter().map(|s| s.count).sum()
    }

    /// `(T_s, ‖F_s‖)` for every state.
    pub fn counts_and_norms(&self) -> Vec<(u64, f64)> {
        self.stats.iter().map(|s| (s.count, s.sum_norm())).collect()
    }

    /// `Σ_s ln ψ_{T_s}(‖F_s‖)` evaluated directly.
    pub fn log_product_potential(&self) -> Result<f64> {
        self.stats
            .iter()
            .map(|s| log_kt_potential(s.count, s.sum_norm()).map(|p| p.value()))
            .sum()
    }
}

/// Per-state KT betting with a shared wealth: `v_t = F_{h_t} / (T_{h_t} + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductKtBettor {
    table: StateTable,
    current: usize,
    log_potential: f64,
}

impl ProductKtBettor {
    pub fn new(states: usize, dim: usize) -> Result<Self> {
        Ok(ProductKtBettor {
            table: StateTable::new(states, dim)?,
            current: 0,
            log_potential: 0.0,
        })
    }

    pub fn table(&self) -> &StateTable {
        &self.table
    }

    pub fn state(&self) -> usize {
        self.current
    }
}

impl StateDriven for ProductKtBettor {
    fn state_count(&self) -> usize {
        self.table.states()
    }

    fn set_state(&mut self, state: usize) -> Result<()> {
        check_state(state, self.table.states())?;
        self.current = state;
        Ok(())
    }
}

impl Bettor for ProductKtBettor {
    fn dim(&self) -> usize {
        self.table.stats[0].sum.len()
    }

    fn bet(&mut self) -> Vec<f64> {
        self.table.stats[self.current].bet()
    }

    fn absorb(&mut self, g: &[f64]) -> Result<()> {
        let stat = &mut self.table.stats[self.current];
        self.log_potential += stat.log_ratio(g)?;
        stat.commit(g);
        Ok(())
    }

    fn log_potential(&self) -> f64 {
        self.log_potential
    }
}

/// Per-state online gradient ascent with one shared step size:
/// `w_t = x_{h_t}`, `x_{h_t} += η g_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerStateOgd {
    eta: f64,
    iterates: Vec<Vec<f64>>,
    current: usize,
}

impl PerStateOgd {
    pub fn new(states: usize, dim: usize, eta: f64) -> Result<Self> {
        if !(eta >= 0.0) || !eta.is_finite() {
            return Err(Error::param("eta", format!("step size must be >= 0, got {eta}")));
        }
        if states == 0 {
            return Err(Error::param("states", "need at least one state"));
        }
        Ok(PerStateOgd {
            eta,
            iterates: vec![vec![0.0; dim]; states],
            current: 0,
        })
    }

    pub fn iterate(&self, state: usize) -> &[f64] {
        &self.iterates[state]
    }
}

impl StateDriven for PerStateOgd {
    fn state_count(&self) -> usize {
        self.iterates.len()
    }

    fn set_state(&mut self, state: usize) -> Result<()> {
        check_state(state, self.iterates.len())?;
        self.current = state;
        Ok(())
    }
}

impl OloEngine for PerStateOgd {
    fn dim(&self) -> usize {
        self.iterates[0].len()
    }

    fn action(&mut self) -> Result<Vec<f64>> {
        Ok(self.iterates[self.current].clone())
    }

    fn update(&mut self, g: &[f64]) -> Result<()> {
        check_dim(self.dim(), g.len())?;
        let g = check_ball(g, false)?;
        axpy(&mut self.iterates[self.current], self.eta, &g);
        Ok(())
    }

    fn label(&self) -> String {
        format!("ogd(eta={})", self.eta)
    }
}

/// Valid range of the DFEG shape parameter `a`.
pub const DFEG_A_RANGE: (f64, f64) = (0.882, 1.109);

/// Per-state dimension-free exponentiated gradient.
///
/// Each state keeps `θ_s` and `H_s` (initialized to `δ`). A round receives the
/// state and `‖x_t‖`, grows `H_s` by `L² max(‖x_t‖, ‖x_t‖²)`, plays
/// `θ / (β ‖θ‖) exp(‖θ‖ / α)` with `α = a√H`, `β = H^{3/2}`, and then moves
/// `θ_s` along the fed gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct PerStateDfeg {
    lipschitz: f64,
    delta: f64,
    a: f64,
    theta: Vec<Vec<f64>>,
    h: Vec<f64>,
    current: usize,
    pending_x_norm: Option<f64>,
}

impl PerStateDfeg {
    pub fn new(states: usize, dim: usize, lipschitz: f64, delta: f64, a: f64) -> Result<Self> {
        if !(a >= DFEG_A_RANGE.0 && a <= DFEG_A_RANGE.1) {
            return Err(Error::param(
                "dfeg_a",
                format!(
                    "a = {a} outside the valid range {} <= a <= {}",
                    DFEG_A_RANGE.0, DFEG_A_RANGE.1
                ),
            ));
        }
        if !(lipschitz > 0.0) || !lipschitz.is_finite() {
            return Err(Error::param("dfeg_l", format!("L must be positive, got {lipschitz}")));
        }
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::param("dfeg_delta", format!("delta must be positive, got {delta}")));
        }
        if states == 0 {
            return Err(Error::param("states", "need at least one state"));
        }
        Ok(PerStateDfeg {
            lipschitz,
            delta,
            a,
            theta: vec![vec![0.0; dim]; states],
            h: vec![delta; states],
            current: 0,
            pending_x_norm: None,
        })
    }

    pub fn theta(&self, state: usize) -> &[f64] {
        &self.theta[state]
    }

    pub fn h(&self, state: usize) -> f64 {
        self.h[state]
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

impl StateDriven for PerStateDfeg {
    fn state_count(&self) -> usize {
        self.theta.len()
    }

    fn set_state(&mut self, state: usize) -> Result<()> {
        check_state(state, self.theta.len())?;
        self.current = state;
        Ok(())
    }
}

impl OloEngine for PerStateDfeg {
    fn dim(&self) -> usize {
        self.theta[0].len()
    }

    fn observe_features(&mut self, x: &[f64]) {
        self.pending_x_norm = Some(norm(x));
    }

    fn action(&mut self) -> Result<Vec<f64>> {
        let s = self.current;
        if let Some(xn) = self.pending_x_norm.take() {
            self.h[s] += self.lipschitz * self.lipschitz * xn.max(xn * xn);
        } else {
            return Err(Error::param(
                "dfeg",
                "the feature norm must be observed before every action",
            ));
        }
        let th = norm(&self.theta[s]);
        if th == 0.0 {
            return Ok(vec![0.0; self.dim()]);
        }
        let h = self.h[s];
        let alpha = self.a * h.sqrt();
        let beta = h.powf(1.5);
        Ok(scaled(&self.theta[s], (th / alpha).exp() / (beta * th)))
    }

    fn update(&mut self, g: &[f64]) -> Result<()> {
        check_dim(self.dim(), g.len())?;
        let s = self.current;
        axpy(&mut self.theta[s], 1.0, g);
        Ok(())
    }

    fn label(&self) -> String {
        format!("dfeg(a={})", self.a)
    }
}

/// Per-state adaptive normal potential.
///
/// `w_t = ε θ̂ / (2L ln²(t+1)) · [exp((‖θ‖+L)² / 2at) - exp((‖θ‖-L)² / 2at)]`
/// with `θ` per state, `θ ← θ - g_t` on losses, and `t` the global round.
#[derive(Debug, Clone, PartialEq)]
pub struct PerStateAdaNormal {
    lipschitz: f64,
    a: f64,
    eps: f64,
    theta: Vec<Vec<f64>>,
    current: usize,
    round: u64,
}

impl PerStateAdaNormal {
    pub fn new(states: usize, dim: usize, lipschitz: f64, a: f64, eps: f64) -> Result<Self> {
        if !(lipschitz > 0.0) || !lipschitz.is_finite() {
            return Err(Error::param(
                "adanormal_l",
                format!("L must be positive, got {lipschitz}"),
            ));
        }
        let a_min = 3.0 * lipschitz * lipschitz * PI / 4.0;
        if !(a >= a_min * (1.0 - 1e-12)) || !a.is_finite() {
            return Err(Error::param(
                "adanormal_a",
                format!("a = {a} must satisfy a >= 3 L^2 pi / 4 = {a_min}"),
            ));
        }
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::param("adanormal_eps", format!("eps must be positive, got {eps}")));
        }
        if states == 0 {
            return Err(Error::param("states", "need at least one state"));
        }
        Ok(PerStateAdaNormal {
            lipschitz,
            a,
            eps,
            theta: vec![vec![0.0; dim]; states],
            current: 0,
            round: 0,
        })
    }

    pub fn theta(&self, state: usize) -> &[f64] {
        &self.theta[state]
    }

    /// `θ_{h_t} ← θ_{h_t} - g_t` for a loss (sub)gradient `g_t`.
    pub fn update_loss(&mut self, g_loss: &[f64]) -> Result<()> {
        check_dim(self.dim(), g_loss.len())?;
        axpy(&mut self.theta[self.current], -1.0, g_loss);
        self.round += 1;
        Ok(())
    }
}

impl StateDriven for PerStateAdaNormal {
    fn state_count(&self) -> usize {
        self.theta.len()
    }

    fn set_state(&mut self, state: usize) -> Result<()> {
        check_state(state, self.theta.len())?;
        self.current = state;
        Ok(())
    }
}

impl OloEngine for PerStateAdaNormal {
    fn dim(&self) -> usize {
        self.theta[0].len()
    }

    fn action(&mut self) -> Result<Vec<f64>> {
        let theta = &self.theta[self.current];
        let th = norm(theta);
        if th == 0.0 {
            return Ok(vec![0.0; theta.len()]);
        }
        let t = (self.round + 1) as f64;
        let l = self.lipschitz;
        let lo = (th - l).powi(2) / (2.0 * self.a * t);
        let gap = 2.0 * th * l / (self.a * t);
        // exp(hi) - exp(lo) = exp(lo) (exp(hi - lo) - 1)
        let mag = self.eps / (2.0 * l * (t + 1.0).ln().powi(2)) * lo.exp() * gap.exp_m1();
        Ok(scaled(theta, mag / th))
    }

    fn update(&mut self, g: &[f64]) -> Result<()> {
        let neg: Vec<f64> = g.iter().map(|x| -x).collect();
        self.update_loss(&neg)
    }

    fn label(&self) -> String {
        format!("adanormal(a={})", self.a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_bettor_state_checks() {
        let mut b = ProductKtBettor::new(4, 2).unwrap();
        assert!(b.set_state(3).is_ok());
        assert!(matches!(b.set_state(4), Err(Error::StateOutOfRange { .. })));
        assert!(ProductKtBettor::new(0, 2).is_err());
    }

    #[test]
    fn ogd_closed_form() {
        let mut e = PerStateOgd::new(1, 2, 1.0).unwrap();
        for _ in 0..7 {
            e.action().unwrap();
            e.update(&[1.0, 0.0]).unwrap();
        }
        assert_eq!(e.iterate(0), &[7.0, 0.0]);
        let mut z = PerStateOgd::new(2, 2, 0.0).unwrap();
        z.update(&[1.0, 0.0]).unwrap();
        assert_eq!(z.action().unwrap(), vec![0.0, 0.0]);
        assert!(PerStateOgd::new(1, 1, -1.0).is_err());
    }

    #[test]
    fn dfeg_hand_trace() {
        let mut e = PerStateDfeg::new(1, 2, 1.0, 1.0, 1.0).unwrap();
        e.observe_features(&[1.0, 0.0]);
        assert_eq!(e.action().unwrap(), vec![0.0, 0.0]);
        assert_eq!(e.h(0), 2.0);
        // |0 - 1| has subgradient -x, so the fed reward gradient is +x
        e.update(&[1.0, 0.0]).unwrap();
        assert_eq!(e.theta(0), &[1.0, 0.0]);
        e.observe_features(&[1.0, 0.0]);
        let w = e.action().unwrap();
        let expected = (1.0 / 3f64.sqrt()).exp() / 3f64.powf(1.5);
        assert!((w[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn dfeg_range() {
        assert!(PerStateDfeg::new(1, 1, 1.0, 1.0, 0.5).is_err());
        assert!(PerStateDfeg::new(1, 1, 1.0, 1.0, 0.882).is_ok());
        assert!(PerStateDfeg::new(1, 1, 1.0, 1.0, 1.109).is_ok());
        assert!(PerStateDfeg::new(1, 1, 1.0, 1.0, 1.2).is_err());
        assert!(PerStateDfeg::new(1, 1, 0.0, 1.0, 1.0).is_err());
        let mut e = PerStateDfeg::new(1, 1, 1.0, 1.0, 1.0).unwrap();
        assert!(e.action().is_err());
    }

    #[test]
    fn adanormal_boundary_and_trace() {
        let a = 3.0 * PI / 4.0;
        let mut e = PerStateAdaNormal::new(1, 2, 1.0, a, 1.0).unwrap();
        assert_eq!(e.action().unwrap(), vec![0.0, 0.0]);
        e.update_loss(&[1.0, 0.0]).unwrap();
        assert_eq!(e.theta(0), &[-1.0, 0.0]);
        let w = e.action().unwrap();
        // t = 2, ‖θ‖ = L = 1
        let mag = 1.0 / (2.0 * 3f64.ln().powi(2)) * ((4.0 / (4.0 * a)).exp() - 1.0);
        assert!((w[0] + mag).abs() < 1e-14 * mag);
        assert_eq!(w[1], 0.0);
        assert!(PerStateAdaNormal::new(1, 1, 1.0, 2.0, 1.0).is_err());
    }
}
