//! Reproducible synthetic gradient streams and regression data.
//!
//! All randomness comes from `ChaCha8Rng::seed_from_u64(seed)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::preprocess::unit_features_with_bias;
use super::regression::RegressionExample;
use crate::error::{Error, Result};
use crate::side_info::{markov_context, BinaryQuantizer, SuffixTree, Symbol};
use crate::vector::{check_ball, norm};

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A standard Gaussian direction in `R^d`, normalized.
pub fn random_unit(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = norm(&v);
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// A uniform draw from the unit ball of `R^d`.
pub fn random_in_ball(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    let r = rng.random::<f64>().powf(1.0 / dim as f64);
    random_unit(rng, dim).into_iter().map(|x| r * x).collect()
}

/// Kinds of synthetic gradient streams.
#[derive(Debug, Clone, PartialEq)]
pub enum SyntheticKind {
    /// `g, -g, g, -g, …`
    Alternating { g: Vec<f64> },
    /// `g_t = r_t g` with `r_t = -r_{t-k}` with probability `flip`, else
    /// `r_{t-k}`; the first `k` signs are fair coins.
    Markov { g: Vec<f64>, order: usize, flip: f64 },
    /// `g_t = r_t g` where `P(r_t = +1)` is `plus_prob[leaf]` for the leaf of
    /// `tree` matching the past signs (padded with `+1`).
    Tree {
        g: Vec<f64>,
        tree: SuffixTree,
        plus_prob: Vec<f64>,
    },
    /// Independent uniform draws from the unit ball of `R^dim`.
    Iid { dim: usize },
}

fn check_prob(p: f64, name: &'static str) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::param(name, format!("probability {p} outside [0, 1]")));
    }
    Ok(())
}

/// Generates `T` gradients of the given kind.
pub fn synthesize_sequence(kind: &SyntheticKind, rounds: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut rng = rng_from_seed(seed);
    let scaled = |g: &[f64], s: Symbol| -> Vec<f64> { g.iter().map(|x| s.value() * x).collect() };
    match kind {
        SyntheticKind::Alternating { g } => {
            check_ball(g, false)?;
            Ok((0..rounds)
                .map(|t| scaled(g, if t % 2 == 0 { Symbol::Plus } else { Symbol::Minus }))
                .collect())
        }
        SyntheticKind::Markov { g, order, flip } => {
            check_ball(g, false)?;
            check_prob(*flip, "flip")?;
            if *order == 0 {
                return Err(Error::param("order", "Markov order must be at least 1"));
            }
            let signs = markov_signs(&mut rng, rounds, *order, *flip);
            Ok(signs.into_iter().map(|s| scaled(g, s)).collect())
        }
        SyntheticKind::Tree { g, tree, plus_prob } => {
            check_ball(g, false)?;
            if plus_prob.len() != tree.len() {
                return Err(Error::param("plus_prob", "need one probability per leaf"));
            }
            for &p in plus_prob {
                check_prob(p, "plus_prob")?;
            }
            let depth = tree.depth();
            let mut signs: Vec<Symbol> = Vec::with_capacity(rounds);
            let mut out = Vec::with_capacity(rounds);
            for t in 1..=rounds {
                let ctx = markov_context(&signs, t, depth);
                let leaf = tree.match_suffix(&ctx)?;
                let s = if rng.random_bool(plus_prob[leaf]) {
                    Symbol::Plus
                } else {
                    Symbol::Minus
                };
                signs.push(s);
                out.push(scaled(g, s));
            }
            Ok(out)
        }
        SyntheticKind::Iid { dim } => {
            if *dim == 0 {
                return Err(Error::param("dim", "dimension must be positive"));
            }
            Ok((0..rounds).map(|_| random_in_ball(&mut rng, *dim)).collect())
        }
    }
}

fn markov_signs(rng: &mut impl Rng, rounds: usize, order: usize, flip: f64) -> Vec<Symbol> {
    let mut signs = Vec::with_capacity(rounds);
    for t in 0..rounds {
        let s = if t < order {
            if rng.random_bool(0.5) {
                Symbol::Plus
            } else {
                Symbol::Minus
            }
        } else {
            let prev = signs[t - order];
            if rng.random_bool(flip) {
                if prev == Symbol::Plus {
                    Symbol::Minus
                } else {
                    Symbol::Plus
                }
            } else {
                prev
            }
        };
        signs.push(s);
    }
    signs
}

/// Acknowledgement required to use side information that looks at the
/// current round's gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NonCausal {
    Acknowledged,
}

/// `h_t = Q(g_t)`: a hint about the *current* gradient, available only to a
/// harness that already knows the whole stream. Not a causal source.
pub fn foresight_side_information(
    grads: &[Vec<f64>],
    quantizer: &BinaryQuantizer,
    _ack: NonCausal,
) -> Result<Vec<usize>> {
    grads
        .iter()
        .map(|g| Ok(quantizer.quantize(g)?.bit() as usize))
        .collect()
}

/// Kinds of synthetic regression data. Features are
/// `(z / ‖z‖, 1) / √2` with `z ~ N(0, I_{dim-1})`, so the bias is the last axis.
#[derive(Debug, Clone, PartialEq)]
pub enum RegressionSynth {
    /// `y = ⟨w*, x⟩ + noise·N(0, 1)` with a fixed Gaussian `w*`.
    Iid { dim: usize, noise: f64 },
    /// `y_t = r_t` with the sign process of [`SyntheticKind::Markov`].
    MarkovSign { dim: usize, order: usize, flip: f64 },
}

impl RegressionSynth {
    pub fn dim(&self) -> usize {
        match self {
            RegressionSynth::Iid { dim, .. } | RegressionSynth::MarkovSign { dim, .. } => *dim,
        }
    }
}

pub fn synthesize_regression(
    kind: &RegressionSynth,
    rounds: usize,
    seed: u64,
) -> Result<Vec<RegressionExample>> {
    let dim = kind.dim();
    if dim < 2 {
        return Err(Error::param("dim", "regression data needs d >= 2 (features + bias)"));
    }
    let mut rng = rng_from_seed(seed);
    let features = |rng: &mut ChaCha8Rng| unit_features_with_bias(&random_unit(rng, dim - 1));
    match kind {
        RegressionSynth::Iid { noise, .. } => {
            if !(*noise >= 0.0) {
                return Err(Error::param("noise", "noise scale must be >= 0"));
            }
            let w: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            Ok((0..rounds)
                .map(|_| {
                    let x = features(&mut rng);
                    let e: f64 = StandardNormal.sample(&mut rng);
                    let y = crate::vector::dot(&w, &x) + noise * e;
                    RegressionExample { x, y }
                })
                .collect())
        }
        RegressionSynth::MarkovSign { order, flip, .. } => {
            check_prob(*flip, "flip")?;
            if *order == 0 {
                return Err(Error::param("order", "Markov order must be at least 1"));
            }
            let signs = {
                let mut sign_rng = rng_from_seed(seed ^ 0x9e37_79b9_7f4a_7c15);
                markov_signs(&mut sign_rng, rounds, *order, *flip)
            };
            Ok(signs
                .into_iter()
                .map(|s| RegressionExample {
                    x: features(&mut rng),
                    y: s.value(),
                })
                .collect())
        }
    }
}
