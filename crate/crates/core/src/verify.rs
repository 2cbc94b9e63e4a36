//! Property suites that cross-check the engines against the slow oracles and
//! the wealth guarantees. Each suite reports its worst observed error.

use std::f64::consts::LN_2;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::betting::{kt_bet_fraction, log_kt_potential};
use crate::bounds::kt_exact_dual_bound;
use crate::ctw::CtwBettor;
use crate::error::Result;
use crate::experiments::synth::{random_in_ball, random_unit, rng_from_seed};
use crate::mixture::{logsumexp, Mixture};
use crate::olo::{Bettor, CoinBettingOlo, KtBettor};
use crate::oracle::{
    explicit_mixture_potential, naive_ctw_action, naive_ctw_log_potential, product_potential_from_scratch,
    tree_kt_log_potential, Round, ENUMERATION_MAX_DEPTH, NAIVE_MAX_DEPTH,
};
use crate::per_state::ProductKtBettor;
use crate::side_info::{
    enumerate_suffix_trees, markov_context, BinaryQuantizer, Quantized, SideChannel, Symbol,
};
use crate::special::lambert_w;
use crate::vector::norm;

/// Tolerance of the wealth lower bounds.
pub const WEALTH_TOL: f64 = 1e-9;
/// Tolerance of per-round CTW actions against the naive recursion, measured
/// as `‖w - w_naive‖ / W_{t-1}`.
pub const ACTION_TOL: f64 = 1e-10;
/// Tolerance of `ln Ψ` agreement between CTW and its oracles.
pub const LOG_POTENTIAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub max_error: f64,
    pub detail: String,
}

impl SuiteResult {
    fn check(name: &'static str, max_error: f64, tol: f64, detail: impl Into<String>) -> Self {
        SuiteResult {
            name,
            passed: max_error <= tol,
            max_error,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    /// Largest CTW depth exercised by the oracle suites.
    pub depth: usize,
    pub seed: u64,
    /// Flip the sign of the CTW `ln β` update (mutation smoke test).
    pub inject_fault: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            depth: 4,
            seed: 0,
            inject_fault: false,
        }
    }
}

/// `ψ_t(x)` relative residuals of the potential identities on `0 ≤ t ≤ 50`.
pub fn kt_identities() -> Result<SuiteResult> {
    let psi = |t: u64, x: f64| -> Result<f64> { Ok(log_kt_potential(t, x)?.exp()) };
    let mut worst: f64 = 0.0;
    for t in 0..=50u64 {
        let tf = t as f64;
        let steps = 20;
        for k in 0..=steps {
            let x = -tf + 2.0 * tf * k as f64 / steps as f64;
            let up = psi(t + 1, x + 1.0)?;
            let down = psi(t + 1, x - 1.0)?;
            let here = psi(t, x)?;
            worst = worst.max(((here - 0.5 * (up + down)) / here).abs());
            if x.abs() <= tf {
                let b = kt_bet_fraction(t + 1, x)?.value();
                worst = worst.max((b - (up - down) / (up + down)).abs());
            }
            for j in 0..=8 {
                let g1 = -1.0 + 0.25 * j as f64;
                let g2 = -g1 * 0.5;
                let m = 0.5 * (g1 + g2);
                let f = |g: f64| psi(t + 1, x + g);
                let gap = f(m)? - 0.5 * (f(g1)? + f(g2)?);
                worst = worst.max(gap / f(m)?);
            }
        }
    }
    let mut rng = rng_from_seed(17);
    for _ in 0..2000 {
        let t: u64 = rng.random_range(0..200);
        let tf = t as f64;
        let x = if t == 0 { 0.0 } else { rng.random_range(-tf..=tf) };
        let g: f64 = rng.random_range(-1.0..=1.0);
        let b = kt_bet_fraction(t + 1, x)?.value();
        let lhs = (1.0 + g * b).ln() + log_kt_potential(t, x)?.value();
        let rhs = log_kt_potential(t + 1, x + g)?.value();
        worst = worst.max(rhs - lhs);
    }
    Ok(SuiteResult::check(
        "kt_identities",
        worst,
        1e-10,
        "consistency, bet relation, convexity, single-round bound",
    ))
}

/// Inverse identity and `0.6321 ln(1+x) ≤ W(x) ≤ ln(1+x)` on `10^-6..10^6`.
pub fn lambert() -> Result<SuiteResult> {
    let mut inverse: f64 = 0.0;
    let mut bracket: f64 = 0.0;
    for k in 0..=240 {
        let x = 10f64.powf(-6.0 + 12.0 * k as f64 / 240.0);
        let w = lambert_w(x)?;
        inverse = inverse.max((w * w.exp() - x).abs() / x.max(1.0));
        let l = x.ln_1p();
        bracket = bracket.max(0.6321 * l - w).max(w - l);
    }
    let err = inverse.max(bracket.max(0.0));
    Ok(SuiteResult::check(
        "lambert_w",
        err,
        1e-12,
        format!("inverse {inverse:e}, bracket excess {:e}", bracket.max(0.0)),
    ))
}

fn iid_stream(rng: &mut ChaCha8Rng, rounds: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..rounds).map(|_| random_in_ball(rng, dim)).collect()
}

/// Signs that repeat with lag 2 most of the time, times a random unit `g`,
/// with small ball noise; gives contexts real structure to find.
fn structured_stream(rng: &mut ChaCha8Rng, rounds: usize, dim: usize) -> Vec<Vec<f64>> {
    let g = random_unit(rng, dim);
    let mut signs: Vec<f64> = Vec::with_capacity(rounds);
    (0..rounds)
        .map(|t| {
            let s = if t < 2 || rng.random_bool(0.2) {
                if rng.random_bool(0.5) {
                    1.0
                } else {
                    -1.0
                }
            } else {
                -signs[t - 2]
            };
            signs.push(s);
            let n = random_in_ball(rng, dim);
            g.iter().zip(&n).map(|(a, b)| 0.8 * s * a + 0.2 * b).collect()
        })
        .collect()
}

fn mixed_stream(rng: &mut ChaCha8Rng, run: usize, rounds: usize, dim: usize) -> Vec<Vec<f64>> {
    if run % 2 == 0 {
        iid_stream(rng, rounds, dim)
    } else {
        structured_stream(rng, rounds, dim)
    }
}

fn play<B: Bettor>(engine: &mut CoinBettingOlo<B>, grads: &[Vec<f64>]) -> Result<()> {
    for g in grads {
        engine.action();
        engine.update(g)?;
    }
    Ok(())
}

/// `ln W_T - ln W_0 ≥ ln ψ_T(‖Σg‖)` and the exact dual regret bound.
pub fn kt_wealth(seed: u64, runs: usize) -> Result<SuiteResult> {
    let mut rng = rng_from_seed(seed);
    let mut worst: f64 = 0.0;
    let mut regret_excess: f64 = 0.0;
    for _ in 0..runs {
        let dim = 5;
        let grads = iid_stream(&mut rng, 500, dim);
        let mut e = CoinBettingOlo::new(KtBettor::new(dim), 1.0)?;
        play(&mut e, &grads)?;
        let mut sum = vec![0.0; dim];
        for g in &grads {
            crate::vector::axpy(&mut sum, 1.0, g);
        }
        let lp = log_kt_potential(grads.len() as u64, norm(&sum))?.value();
        worst = worst.max(lp - e.log_wealth());
        let n = norm(&sum);
        for c in [0.1, 0.5, 1.0, 2.0, 10.0] {
            let reward_u = c * n;
            let regret = reward_u - (e.wealth() - 1.0);
            let bound = kt_exact_dual_bound(grads.len() as u64, c, 1.0)?;
            regret_excess = regret_excess.max(regret - bound);
        }
    }
    let err = worst.max(regret_excess);
    Ok(SuiteResult::check(
        "kt_wealth",
        err,
        WEALTH_TOL,
        format!("{runs} runs, potential deficit {worst:e}, dual-bound excess {regret_excess:e}"),
    ))
}

/// `ln W_T ≥ ln W_0 + Σ_s ln ψ_{T_s}(‖F_s‖)` for random states.
pub fn product_wealth(seed: u64, runs: usize) -> Result<SuiteResult> {
    let mut rng = rng_from_seed(seed ^ 1);
    let mut worst: f64 = 0.0;
    for run in 0..runs {
        let s = [2usize, 4, 8][run % 3];
        let dim = 3;
        let grads = mixed_stream(&mut rng, run, 300, dim);
        let states: Vec<usize> = (0..grads.len()).map(|_| rng.random_range(0..s)).collect();
        let mut e = CoinBettingOlo::new(ProductKtBettor::new(s, dim)?, 1.0)?;
        for (g, &h) in grads.iter().zip(&states) {
            e.action_in_state(h)?;
            e.update(g)?;
        }
        let lp = product_potential_from_scratch(&grads, &states, s)?;
        worst = worst.max(lp - e.log_wealth());
    }
    Ok(SuiteResult::check(
        "product_kt_wealth",
        worst,
        WEALTH_TOL,
        format!("{runs} runs, S in {{2, 4, 8}}"),
    ))
}

fn random_quantized_product(rng: &mut ChaCha8Rng, dim: usize) -> Result<Quantized<ProductKtBettor>> {
    let depth = rng.random_range(0..=2);
    let q = BinaryQuantizer::direction(random_unit(rng, dim))?;
    Quantized::new(ProductKtBettor::new(1 << depth, dim)?, SideChannel::new(q, depth)?)
}

/// `W_T ≥ W_0 Σ_m p_m Ψ_m` and `W_T ≥ W_0 p_m Ψ_m` for every component.
pub fn mixture_wealth(seed: u64, runs: usize) -> Result<SuiteResult> {
    let mut rng = rng_from_seed(seed ^ 2);
    let mut worst: f64 = 0.0;
    for run in 0..runs {
        let m = [2usize, 5][run % 2];
        let dim = 3;
        let parts = (0..m)
            .map(|_| random_quantized_product(&mut rng, dim))
            .collect::<Result<Vec<_>>>()?;
        let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.1..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let prior: Vec<f64> = raw.iter().map(|p| p / total).collect();
        let mut e = CoinBettingOlo::new(Mixture::with_prior(parts, &prior)?, 1.0)?;
        let grads = mixed_stream(&mut rng, run, 300, dim);
        play(&mut e, &grads)?;
        let mix = e.bettor();
        let terms: Vec<f64> = mix
            .components()
            .iter()
            .zip(&prior)
            .map(|(c, p)| p.ln() + c.log_potential())
            .collect();
        worst = worst.max(logsumexp(terms.iter().copied()) - e.log_wealth());
        for t in terms {
            worst = worst.max(t - e.log_wealth());
        }
    }
    Ok(SuiteResult::check(
        "mixture_wealth",
        worst,
        WEALTH_TOL,
        format!("{runs} runs, M in {{2, 5}}, mixture and per-component"),
    ))
}

/// A CTW engine driven by `Q_{e_0}` together with the history it saw.
pub struct CtwReplay {
    pub engine: CoinBettingOlo<Quantized<CtwBettor>>,
    pub history: Vec<Round>,
    /// Worst per-round `‖w - w_naive‖ / W_{t-1}`, when compared.
    pub action_error: f64,
    /// Worst round `|ln Ψ^CTW - ln Ψ_naive|`, when compared.
    pub potential_error: f64,
    pub touches: Vec<u64>,
}

/// Plays `grads` through CTW of depth `D`, optionally comparing each round with
/// the naive recursion.
pub fn replay_ctw(grads: &[Vec<f64>], depth: usize, compare: bool, fault: bool) -> Result<CtwReplay> {
    let dim = grads.first().map_or(1, Vec::len);
    let q = BinaryQuantizer::axis(dim, 0)?;
    let mut bettor = CtwBettor::new(depth, dim)?;
    bettor.inject_beta_sign_fault(fault);
    let bettor = Quantized::new(bettor, SideChannel::new(q.clone(), depth)?)?;
    let mut engine = CoinBettingOlo::new(bettor, 1.0)?;
    let mut history: Vec<Round> = Vec::with_capacity(grads.len());
    let mut omega: Vec<Symbol> = Vec::with_capacity(grads.len());
    let mut action_error: f64 = 0.0;
    let mut potential_error: f64 = 0.0;
    let mut touches = Vec::with_capacity(grads.len());
    for (i, g) in grads.iter().enumerate() {
        let context = markov_context(&omega, i + 1, depth);
        let w_prev = engine.wealth();
        let a = engine.action();
        if compare {
            let naive = naive_ctw_action(&history, &context, depth, w_prev)?;
            let diff: Vec<f64> = a.iter().zip(&naive).map(|(x, y)| x - y).collect();
            action_error = action_error.max(norm(&diff) / w_prev);
        }
        engine.update(g)?;
        touches.push(engine.bettor().inner().round_touches());
        history.push(Round {
            context,
            gradient: g.clone(),
        });
        omega.push(q.quantize(g)?);
        if compare {
            let naive = naive_ctw_log_potential(&history, depth)?;
            potential_error = potential_error.max((engine.log_potential() - naive).abs());
        }
    }
    Ok(CtwReplay {
        engine,
        history,
        action_error,
        potential_error,
        touches,
    })
}

/// CTW against the naive full-tree recursion, round by round.
pub fn ctw_naive(seed: u64, max_depth: usize, runs: usize, fault: bool) -> Result<SuiteResult> {
    let max_depth = max_depth.min(NAIVE_MAX_DEPTH);
    let mut rng = rng_from_seed(seed ^ 3);
    let (mut act, mut pot): (f64, f64) = (0.0, 0.0);
    let mut wealth: f64 = 0.0;
    for run in 0..runs {
        let depth = run % (max_depth + 1);
        let rounds = rng.random_range(1..=200);
        let grads = mixed_stream(&mut rng, run, rounds, 2);
        let r = replay_ctw(&grads, depth, true, fault)?;
        act = act.max(r.action_error);
        pot = pot.max(r.potential_error);
        wealth = wealth.max(r.engine.log_potential() - r.engine.log_wealth());
    }
    let action = SuiteResult::check("ctw_naive", act, ACTION_TOL, "");
    let potential = SuiteResult::check("ctw_naive", pot, LOG_POTENTIAL_TOL, "");
    let bound = SuiteResult::check("ctw_naive", wealth, WEALTH_TOL, "");
    Ok(SuiteResult {
        name: "ctw_naive",
        passed: action.passed && potential.passed && bound.passed,
        max_error: act.max(pot).max(wealth),
        detail: format!(
            "{runs} runs, D <= {max_depth}: action {act:e}, ln potential {pot:e}, wealth deficit {wealth:e}"
        ),
    })
}

/// CTW's potential against the explicit `Σ_T 2^{-Γ_D(T)} Ψ^KT(T)`, and the
/// prior weights summing to one.
pub fn ctw_explicit_mixture(seed: u64, max_depth: usize, seeds: usize, fault: bool) -> Result<SuiteResult> {
    let max_depth = max_depth.min(ENUMERATION_MAX_DEPTH);
    let mut weight_err: f64 = 0.0;
    for d in 0..=max_depth {
        let trees = enumerate_suffix_trees(d)?;
        let total: f64 = trees.iter().map(|t| (-(t.complexity(d) as f64) * LN_2).exp()).sum();
        weight_err = weight_err.max((total - 1.0).abs());
    }
    let mut worst: f64 = 0.0;
    for k in 0..seeds {
        let mut rng = rng_from_seed(seed ^ (100 + k as u64));
        let grads = mixed_stream(&mut rng, k, 100, 2);
        for d in 0..=max_depth {
            let r = replay_ctw(&grads, d, false, fault)?;
            let explicit = explicit_mixture_potential(&r.history, d)?;
            worst = worst.max((r.engine.log_potential() - explicit).abs());
        }
    }
    Ok(SuiteResult {
        name: "ctw_explicit_mixture",
        passed: worst <= LOG_POTENTIAL_TOL && weight_err == 0.0,
        max_error: worst.max(weight_err),
        detail: format!("{seeds} seeds, D <= {max_depth}, prior mass error {weight_err:e}"),
    })
}

/// `ln W_T ≥ -Γ_D(T) ln 2 + ln W_0 + ln Ψ^KT(T)` for every tree.
pub fn per_tree_domination(seed: u64, max_depth: usize, seeds: usize, fault: bool) -> Result<SuiteResult> {
    let max_depth = max_depth.min(ENUMERATION_MAX_DEPTH);
    let mut worst: f64 = 0.0;
    for k in 0..seeds {
        let mut rng = rng_from_seed(seed ^ (200 + k as u64));
        let grads = mixed_stream(&mut rng, k, 100, 2);
        for d in 0..=max_depth {
            let r = replay_ctw(&grads, d, false, fault)?;
            for t in enumerate_suffix_trees(d)? {
                let rhs = -(t.complexity(d) as f64) * LN_2 + tree_kt_log_potential(&r.history, &t)?;
                worst = worst.max(rhs - r.engine.log_wealth());
            }
        }
    }
    Ok(SuiteResult::check(
        "per_tree_domination",
        worst,
        LOG_POTENTIAL_TOL,
        format!("{seeds} seeds, every tree of depth <= {max_depth}"),
    ))
}

/// Node touches per round equal `2(D + 1)`.
pub fn locality(seed: u64, max_depth: usize) -> Result<SuiteResult> {
    let mut rng = rng_from_seed(seed ^ 4);
    let mut worst: f64 = 0.0;
    for d in 0..=max_depth {
        let grads = structured_stream(&mut rng, 200, 2);
        let r = replay_ctw(&grads, d, false, false)?;
        let expect = 2 * (d as u64 + 1);
        for t in r.touches {
            worst = worst.max((t as f64 - expect as f64).abs());
        }
    }
    Ok(SuiteResult::check(
        "locality",
        worst,
        0.0,
        format!("D <= {max_depth}: touches per round = 2(D + 1)"),
    ))
}

/// Runs every suite.
pub fn run_all(opts: &VerifyOptions) -> Result<Vec<SuiteResult>> {
    let VerifyOptions {
        depth,
        seed,
        inject_fault,
    } = *opts;
    Ok(vec![
        kt_identities()?,
        lambert()?,
        kt_wealth(seed, 50)?,
        product_wealth(seed, 30)?,
        mixture_wealth(seed, 30)?,
        ctw_naive(seed, depth, 5 * (depth.min(NAIVE_MAX_DEPTH) + 1), inject_fault)?,
        ctw_explicit_mixture(seed, depth, 5, inject_fault)?,
        per_tree_domination(seed, depth, 5, inject_fault)?,
        locality(seed, depth.max(10))?,
    ])
}
