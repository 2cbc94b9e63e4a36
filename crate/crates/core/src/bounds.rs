//! Regret-bound calculators.
//!
//! Regret against a competitor `u` is `⟨Σg, u⟩ - (W_T - W_0)`. Any wealth lower
//! bound `W_T ≥ W_0 f(‖Σg‖)` turns into `Reg(u) ≤ W_0 + W_0 f*(‖u‖ / W_0)`
//! through the Fenchel conjugate `f*`.

use std::f64::consts::{E, PI};

use crate::betting::log_kt_potential;
use crate::error::{Error, Result};
use crate::special::lambert_w;

/// Horizon, competitor size and initial wealth for a regret bound.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretBoundInputs {
    pub horizon: u64,
    pub competitor_norm: f64,
    pub initial_wealth: f64,
    /// `(T_s, ‖u_s‖)` per side-information state.
    pub per_state_counts: Option<Vec<(u64, f64)>>,
}

impl RegretBoundInputs {
    pub fn new(horizon: u64, competitor_norm: f64, initial_wealth: f64) -> Self {
        RegretBoundInputs {
            horizon,
            competitor_norm,
            initial_wealth,
            per_state_counts: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::param("horizon", "must be at least 1"));
        }
        check_wealth(self.initial_wealth)?;
        check_norm(self.competitor_norm)?;
        if let Some(states) = &self.per_state_counts {
            let mut total = 0u64;
            for &(count, norm) in states {
                check_norm(norm)?;
                total += count;
            }
            if total != self.horizon {
                return Err(Error::param(
                    "per_state_counts",
                    format!("counts sum to {total}, horizon is {}", self.horizon),
                ));
            }
        }
        Ok(())
    }
}

fn check_wealth(w0: f64) -> Result<()> {
    if !(w0 > 0.0) || !w0.is_finite() {
        return Err(Error::param("initial_wealth", format!("must be positive, got {w0}")));
    }
    Ok(())
}

fn check_norm(u: f64) -> Result<()> {
    if !(u >= 0.0) || !u.is_finite() {
        return Err(Error::domain("regret bound", format!("norm must be >= 0, got {u}")));
    }
    Ok(())
}

/// `sqrt(T‖u‖² ln(T‖u‖² / (e√π W_0²) + 1)) + W_0`.
pub fn kt_regret_bound(inputs: &RegretBoundInputs) -> Result<f64> {
    inputs.validate()?;
    if inputs.per_state_counts.is_some() {
        return Err(Error::param(
            "per_state_counts",
            "use product_dual_bound for per-state competitors",
        ));
    }
    let t = inputs.horizon as f64;
    let u2 = inputs.competitor_norm * inputs.competitor_norm;
    let w0 = inputs.initial_wealth;
    let inner = t * u2 / (E * PI.sqrt() * w0 * w0);
    Ok((t * u2 * inner.ln_1p()).sqrt() + w0)
}

/// Conjugate of `β exp(r² / 2)` at `r ≥ 0`: `r√W - β exp(W/2)` with
/// `W = W(r² / β²)`.
fn gaussian_exp_conjugate(r: f64, beta: f64) -> Result<f64> {
    let w = lambert_w((r / beta).powi(2))?;
    Ok(r * w.sqrt() - beta * (w / 2.0).exp())
}

/// Regret bound against per-state competitors `u_s` from the product
/// potential's Gaussian lower bound
/// `Π_s ψ_{T_s}(x_s) ≥ Π_s β_s exp(x_s² / 2α_s)`, with `α_s = T_s` and
/// `β_s = (e√π)^{-1} T_s^{-1/2}`.
///
/// States with `T_s = 0` are skipped: a competitor there collects nothing.
/// For the zero competitor the value is `W_0 (1 - Π β_s)`.
pub fn product_dual_bound(per_state: &[(u64, f64)], initial_wealth: f64) -> Result<f64> {
    check_wealth(initial_wealth)?;
    let mut log_beta = 0.0;
    let mut r2 = 0.0;
    for &(count, norm) in per_state {
        check_norm(norm)?;
        if count == 0 {
            continue;
        }
        let t = count as f64;
        log_beta -= 1.0 + 0.5 * PI.ln() + 0.5 * t.ln();
        let y = norm / initial_wealth;
        r2 += t * y * y;
    }
    let fstar = gaussian_exp_conjugate(r2.sqrt(), log_beta.exp())?;
    Ok(initial_wealth + initial_wealth * fstar)
}

/// Tight regret bound for a single KT bettor,
/// `W_0 + max_{0≤x≤T} (x‖u‖ - W_0 ψ_T(x))`, maximized numerically.
///
/// `ψ_T` is convex so the objective is concave and golden-section search
/// on `[0, T]` finds the maximum.
pub fn kt_exact_dual_bound(horizon: u64, competitor_norm: f64, initial_wealth: f64) -> Result<f64> {
    check_wealth(initial_wealth)?;
    check_norm(competitor_norm)?;
    let t = horizon as f64;
    let obj = |x: f64| -> f64 {
        let lp = log_kt_potential(horizon, x).map(|p| p.value()).unwrap_or(f64::INFINITY);
        x * competitor_norm - initial_wealth * lp.exp()
    };
    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0, t);
    let mut c = hi - invphi * (hi - lo);
    let mut d = lo + invphi * (hi - lo);
    let (mut fc, mut fd) = (obj(c), obj(d));
    for _ in 0..200 {
        if hi - lo <= 1e-13 * t.max(1.0) {
            break;
        }
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - invphi * (hi - lo);
            fc = obj(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + invphi * (hi - lo);
            fd = obj(d);
        }
    }
    let best = [obj(0.0), obj(t), obj((lo + hi) / 2.0), fc, fd]
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(initial_wealth + best)
}
