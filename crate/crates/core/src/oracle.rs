//! Slow reference implementations for cross-checking the incremental engines.
//!
//! Everything here recomputes from the raw history of `(context, g_t)` pairs
//! and never uses the `ln β` bookkeeping of [`crate::ctw`].

use std::f64::consts::LN_2;

use crate::betting::log_kt_potential;
use crate::error::{Error, Result};
use crate::mixture::logsumexp;
use crate::olo::Bettor;
use crate::side_info::{enumerate_suffix_trees, StateDriven, SuffixTree, Symbol};
use crate::vector::{axpy, norm};

/// Depth limit of the naive full-tree recursion on recorded histories.
pub const NAIVE_MAX_DEPTH: usize = 6;
/// Depth limit of explicit suffix-tree enumeration.
pub const ENUMERATION_MAX_DEPTH: usize = 3;

/// One played round: the context in force (oldest symbol first, at least `D`
/// long) and the gradient received.
#[derive(Debug, Clone, PartialEq)]
pub struct Round {
    pub context: Vec<Symbol>,
    pub gradient: Vec<f64>,
}

fn dim_of(history: &[Round], fallback: usize) -> usize {
    history.first().map_or(fallback, |r| r.gradient.len())
}

fn kt_of(count: u64, sum: &[f64]) -> Result<f64> {
    Ok(log_kt_potential(count, norm(sum))?.value())
}

/// Statistics of every node of the perfect depth-`D` tree.
///
/// Heap layout: the root is index 1 and the children of node `i` (the same
/// suffix extended by one older symbol) are `2i` for `-1` and `2i + 1` for `+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FullTreeSnapshot {
    depth: usize,
    dim: usize,
    count: Vec<u64>,
    sum: Vec<Vec<f64>>,
}

impl FullTreeSnapshot {
    pub fn new(depth: usize, dim: usize) -> Result<Self> {
        if depth > 20 {
            return Err(Error::param("depth", "full trees are limited to D <= 20"));
        }
        let n = 1usize << (depth + 1);
        Ok(FullTreeSnapshot {
            depth,
            dim,
            count: vec![0; n],
            sum: vec![vec![0.0; dim]; n],
        })
    }

    /// Replays a history.
    pub fn from_history(history: &[Round], depth: usize) -> Result<Self> {
        let mut s = Self::new(depth, dim_of(history, 1))?;
        for r in history {
            s.push(&r.context, &r.gradient)?;
        }
        Ok(s)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    fn path(&self, context: &[Symbol]) -> Result<Vec<usize>> {
        if context.len() < self.depth {
            return Err(Error::param(
                "context",
                format!("need {} symbols, got {}", self.depth, context.len()),
            ));
        }
        let mut idx = 1usize;
        let mut out = vec![idx];
        for k in 0..self.depth {
            let s = context[context.len() - 1 - k];
            idx = 2 * idx + if s == Symbol::Plus { 1 } else { 0 };
            out.push(idx);
        }
        Ok(out)
    }

    pub fn push(&mut self, context: &[Symbol], g: &[f64]) -> Result<()> {
        for i in self.path(context)? {
            self.count[i] += 1;
            axpy(&mut self.sum[i], 1.0, g);
        }
        Ok(())
    }

    /// `(t_s, F_s)` of the node reached by following `suffix` (oldest first).
    pub fn stats(&self, suffix: &[Symbol]) -> (u64, &[f64]) {
        let i = suffix
            .iter()
            .rev()
            .fold(1usize, |i, &s| 2 * i + if s == Symbol::Plus { 1 } else { 0 });
        (self.count[i], &self.sum[i])
    }

    /// Largest `|F_s - F_{0s} - F_{1s}|` and count mismatch over internal nodes.
    pub fn max_child_sum_defect(&self) -> (f64, u64) {
        let internal = 1usize << self.depth;
        let mut worst = (0.0f64, 0u64);
        for i in 1..internal {
            let mut s = self.sum[2 * i].clone();
            axpy(&mut s, 1.0, &self.sum[2 * i + 1]);
            let diff = s
                .iter()
                .zip(&self.sum[i])
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let c = self.count[i].abs_diff(self.count[2 * i] + self.count[2 * i + 1]);
            worst = (worst.0.max(diff), worst.1.max(c));
        }
        worst
    }

    fn node_depth(i: usize) -> usize {
        (usize::BITS - 1 - i.leading_zeros()) as usize
    }

    /// `ln Ψ^CTW_s` for every node, by `Ψ_s = ½Ψ^KT_s + ½Ψ_{0s}Ψ_{1s}`.
    fn ctw_potentials(&self) -> Result<Vec<f64>> {
        let n = self.count.len();
        let mut lp = vec![0.0; n];
        for i in (1..n).rev() {
            let kt = kt_of(self.count[i], &self.sum[i])?;
            lp[i] = if Self::node_depth(i) == self.depth {
                kt
            } else {
                let children = lp[2 * i] + lp[2 * i + 1];
                logsumexp([kt, children]) - LN_2
            };
        }
        Ok(lp)
    }

    pub fn log_ctw_potential(&self) -> Result<f64> {
        Ok(self.ctw_potentials()?[1])
    }

    /// CTW betting fraction for the coming round,
    /// `u_λ / Ψ_λ` with `u_s = ½Ψ^KT_s v^KT_s + ½ u_{0s} u_{1s}` on the active
    /// path and `u_s = Ψ_s` (a scalar) off it.
    pub fn bet(&self, context: &[Symbol]) -> Result<Vec<f64>> {
        let lp = self.ctw_potentials()?;
        let path = self.path(context)?;
        let leaf = path[self.depth];
        // u on the active path as (ln scale, vector)
        let kt_bet = |i: usize| -> Vec<f64> {
            let denom = (self.count[i] + 1) as f64;
            self.sum[i].iter().map(|f| f / denom).collect()
        };
        let mut scale = kt_of(self.count[leaf], &self.sum[leaf])?;
        let mut vec = kt_bet(leaf);
        for d in (0..self.depth).rev() {
            let i = path[d];
            let on = path[d + 1];
            let off = on ^ 1;
            let a = kt_of(self.count[i], &self.sum[i])? - LN_2;
            let b = lp[off] + scale - LN_2;
            let m = a.max(b);
            let (ea, eb) = ((a - m).exp(), (b - m).exp());
            let kv = kt_bet(i);
            vec = kv.iter().zip(&vec).map(|(k, c)| ea * k + eb * c).collect();
            scale = m;
        }
        let f = (scale - lp[1]).exp();
        Ok(vec.into_iter().map(|x| x * f).collect())
    }
}

/// The CTW action `W · u_λ / Ψ_λ` from a full replay of `history`.
pub fn naive_ctw_action(
    history: &[Round],
    context: &[Symbol],
    depth: usize,
    wealth: f64,
) -> Result<Vec<f64>> {
    if depth > NAIVE_MAX_DEPTH {
        return Err(Error::param(
            "depth",
            format!("naive recursion refuses D = {depth} > {NAIVE_MAX_DEPTH}"),
        ));
    }
    let snap = FullTreeSnapshot::from_history(history, depth)?;
    Ok(snap.bet(context)?.into_iter().map(|v| v * wealth).collect())
}

/// `ln Ψ^CTW` from a full replay of `history`.
pub fn naive_ctw_log_potential(history: &[Round], depth: usize) -> Result<f64> {
    if depth > NAIVE_MAX_DEPTH {
        return Err(Error::param(
            "depth",
            format!("naive recursion refuses D = {depth} > {NAIVE_MAX_DEPTH}"),
        ));
    }
    FullTreeSnapshot::from_history(history, depth)?.log_ctw_potential()
}

/// Per-leaf `(count, sum)` of `history` under `tree`.
fn leaf_stats(history: &[Round], tree: &SuffixTree) -> Result<Vec<(u64, Vec<f64>)>> {
    let dim = dim_of(history, 1);
    let mut stats = vec![(0u64, vec![0.0; dim]); tree.len()];
    for r in history {
        let leaf = tree.match_suffix(&r.context)?;
        stats[leaf].0 += 1;
        axpy(&mut stats[leaf].1, 1.0, &r.gradient);
    }
    Ok(stats)
}

/// `ln Ψ^KT(g^t; T) = Σ_{s∈T} ln ψ_{t_s}(‖F_s‖)` with rounds routed by suffix
/// matching.
pub fn tree_kt_log_potential(history: &[Round], tree: &SuffixTree) -> Result<f64> {
    leaf_stats(history, tree)?
        .iter()
        .map(|(c, s)| kt_of(*c, s))
        .sum()
}

/// `ln Σ_{T ∈ 𝒯_{≤D}} 2^{-Γ_D(T)} Ψ^KT(g^t; T)` by explicit enumeration.
pub fn explicit_mixture_potential(history: &[Round], depth: usize) -> Result<f64> {
    if depth > ENUMERATION_MAX_DEPTH {
        return Err(Error::param(
            "depth",
            format!("enumeration refuses D = {depth} > {ENUMERATION_MAX_DEPTH}"),
        ));
    }
    let trees = enumerate_suffix_trees(depth)?;
    let terms = trees
        .iter()
        .map(|t| Ok(tree_kt_log_potential(history, t)? - t.complexity(depth) as f64 * LN_2))
        .collect::<Result<Vec<f64>>>()?;
    Ok(logsumexp(terms))
}

/// Per-leaf sums of a history under a fixed tree, for best-in-hindsight
/// competitors `u_s = c_s F_s / ‖F_s‖`.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeCompetitor {
    pub leaves: Vec<Vec<Symbol>>,
    pub counts: Vec<u64>,
    pub sums: Vec<Vec<f64>>,
}

impl TreeCompetitor {
    /// `Σ_s c_s ‖F_s‖`, the best reward with leaf norms `c_s`.
    pub fn reward(&self, norms: &[f64]) -> f64 {
        self.sums.iter().zip(norms).map(|(f, c)| c * norm(f)).sum()
    }

    /// Reward of the best competitor with unit norm at every leaf.
    pub fn unit_reward(&self) -> f64 {
        self.sums.iter().map(|f| norm(f)).sum()
    }

    /// The competitor vectors for leaf norms `c_s` (zero where `F_s = 0`).
    pub fn vectors(&self, norms: &[f64]) -> Vec<Vec<f64>> {
        self.sums
            .iter()
            .zip(norms)
            .map(|(f, c)| {
                let n = norm(f);
                if n == 0.0 {
                    vec![0.0; f.len()]
                } else {
                    f.iter().map(|x| c * x / n).collect()
                }
            })
            .collect()
    }
}

pub fn best_tree_competitor(history: &[Round], tree: &SuffixTree) -> Result<TreeCompetitor> {
    let stats = leaf_stats(history, tree)?;
    Ok(TreeCompetitor {
        leaves: tree.leaves().to_vec(),
        counts: stats.iter().map(|s| s.0).collect(),
        sums: stats.into_iter().map(|s| s.1).collect(),
    })
}

/// `Σ_s ln ψ_{T_s}(‖F_s‖)` for explicit states `h_t ∈ [S]`.
pub fn product_potential_from_scratch(grads: &[Vec<f64>], states: &[usize], s: usize) -> Result<f64> {
    let dim = grads.first().map_or(1, Vec::len);
    let mut count = vec![0u64; s];
    let mut sum = vec![vec![0.0; dim]; s];
    for (g, &h) in grads.iter().zip(states) {
        if h >= s {
            return Err(Error::StateOutOfRange { state: h, states: s });
        }
        count[h] += 1;
        axpy(&mut sum[h], 1.0, g);
    }
    count.iter().zip(&sum).map(|(c, f)| kt_of(*c, f)).sum()
}

/// Full-tree CTW bettor: updates all `D + 1` path statistics per round and
/// evaluates the whole `2^{D+1}`-node recursion for every bet.
#[derive(Debug, Clone)]
pub struct NaiveCtwBettor {
    snapshot: FullTreeSnapshot,
    context: u64,
}

impl NaiveCtwBettor {
    pub fn new(depth: usize, dim: usize) -> Result<Self> {
        Ok(NaiveCtwBettor {
            snapshot: FullTreeSnapshot::new(depth, dim)?,
            context: 0,
        })
    }

    fn context_symbols(&self) -> Vec<Symbol> {
        crate::side_info::context_from_bits(self.context, self.snapshot.depth)
    }

    pub fn snapshot(&self) -> &FullTreeSnapshot {
        &self.snapshot
    }
}

impl StateDriven for NaiveCtwBettor {
    fn state_count(&self) -> usize {
        1usize << self.snapshot.depth
    }

    fn set_state(&mut self, state: usize) -> Result<()> {
        let states = self.state_count();
        if state >= states {
            return Err(Error::StateOutOfRange { state, states });
        }
        self.context = state as u64;
        Ok(())
    }
}

impl Bettor for NaiveCtwBettor {
    fn dim(&self) -> usize {
        self.snapshot.dim
    }

    fn bet(&mut self) -> Vec<f64> {
        self.snapshot
            .bet(&self.context_symbols())
            .expect("statistics of a valid history")
    }

    fn absorb(&mut self, g: &[f64]) -> Result<()> {
        let ctx = self.context_symbols();
        self.snapshot.push(&ctx, g)
    }

    /// Evaluated on demand over the whole tree.
    fn log_potential(&self) -> f64 {
        self.snapshot.log_ctw_potential().unwrap_or(f64::NAN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Symbol::{Minus as M, Plus as P};

    #[test]
    fn empty_history() {
        assert_eq!(naive_ctw_action(&[], &[P, M], 2, 1.0).unwrap(), vec![0.0]);
        assert_eq!(explicit_mixture_potential(&[], 2).unwrap().abs() < 1e-15, true);
        assert!(naive_ctw_action(&[], &[P; 7], 7, 1.0).is_err());
        assert!(explicit_mixture_potential(&[], 4).is_err());
    }

    #[test]
    fn depth_one_hand_trace() {
        // one round with context (+1) and g = 0.5; next context (+1)
        let h = vec![Round {
            context: vec![P],
            gradient: vec![0.5],
        }];
        let kt = log_kt_potential(1, 0.5).unwrap().value().exp();
        // root and child "1" both hold (1, 0.5); child "0" is empty
        // u_λ = ½ ψ v + ½ Ψ_0 · ψ v with Ψ_0 = 1, Ψ_λ = ½ψ + ½ψ = ψ
        let v = 0.5 / 2.0;
        let expected = (0.5 * kt * v + 0.5 * kt * v) / kt;
        let a = naive_ctw_action(&h, &[P], 1, 1.0).unwrap();
        assert!((a[0] - expected).abs() < 1e-15);
        // the other context sees an empty leaf: u_λ = ½ψ v + ½·Ψ_1·0
        let b = naive_ctw_action(&h, &[M], 1, 1.0).unwrap();
        assert!((b[0] - 0.5 * v).abs() < 1e-15);
    }

    #[test]
    fn alternating_static_and_adaptive_rewards() {
        let mut h = Vec::new();
        let mut prev = P;
        for t in 0..10 {
            // Q(g_1) = -1, so the +1 padding acts like a virtual g_0 = -g_1
            let g = if t % 2 == 0 { -1.0 } else { 1.0 };
            h.push(Round {
                context: vec![prev],
                gradient: vec![g],
            });
            prev = Symbol::sign_of(g);
        }
        let stat = best_tree_competitor(&h, &SuffixTree::root()).unwrap();
        assert_eq!(stat.unit_reward(), 0.0);
        let adaptive = best_tree_competitor(&h, &SuffixTree::perfect(1).unwrap()).unwrap();
        assert_eq!(adaptive.unit_reward(), 10.0);
    }
}
