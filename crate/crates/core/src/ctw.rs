//! Context tree weighting over a depth-`D` context tree in `O(D)` per round.
//!
//! Each internal node `s` keeps `ln β_s = ln Ψ^KT_s - ln Ψ^CTW_{0s} - ln Ψ^CTW_{1s}`.
//! The bet on the active path is mixed leaf to root as
//! `v_s = σ(ln β_s) v^KT_s + σ(-ln β_s) v_{child}`, and the update pass carries
//! the child's CTW log-ratio up the same path.

use std::collections::HashMap;
use std::f64::consts::LN_2;

use crate::betting::{log_kt_potential, log_kt_potential_ratio};
use crate::error::{Error, Result};
use crate::olo::Bettor;
use crate::side_info::{StateDriven, MAX_DEPTH};
use crate::vector::{axpy, norm};

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn ln_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

fn logaddexp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + (-(a - b).abs()).exp().ln_1p()
}

/// Statistics of one context-tree node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub count: u64,
    pub sum: Vec<f64>,
    /// `ln β_s`; unused at depth `D`.
    pub log_beta: f64,
}

impl NodeState {
    fn new(dim: usize) -> Self {
        NodeState {
            count: 0,
            sum: vec![0.0; dim],
            log_beta: 0.0,
        }
    }

    fn kt_bet(&self) -> Vec<f64> {
        let denom = (self.count + 1) as f64;
        self.sum.iter().map(|f| f / denom).collect()
    }
}

/// Lazily allocated depth-`D` context tree.
///
/// A node is the suffix of length `d` of the packed context; its key is
/// `(1 << d) | (bits & (2^d - 1))`, so the root is key `1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextTree {
    depth: usize,
    dim: usize,
    nodes: HashMap<u64, NodeState>,
}

impl ContextTree {
    pub fn new(depth: usize, dim: usize) -> Result<Self> {
        if depth > MAX_DEPTH {
            return Err(Error::param("depth", format!("D = {depth} exceeds {MAX_DEPTH}")));
        }
        if dim == 0 {
            return Err(Error::param("dim", "dimension must be positive"));
        }
        Ok(ContextTree {
            depth,
            dim,
            nodes: HashMap::new(),
        })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn key(d: usize, bits: u64) -> u64 {
        (1u64 << d) | (bits & ((1u64 << d) - 1))
    }

    /// Node for the length-`d` suffix of the packed context `bits`.
    pub fn node(&self, d: usize, bits: u64) -> Option<&NodeState> {
        self.nodes.get(&Self::key(d, bits))
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (u64, &NodeState)> {
        self.nodes.iter().map(|(k, v)| (*k, v))
    }

    /// `ln Ψ^CTW_λ` by the full recursion
    /// `Ψ_s = ½ Ψ^KT_s + ½ Ψ_{0s} Ψ_{1s}` over allocated nodes.
    pub fn log_potential(&self) -> Result<f64> {
        self.subtree_log_potential(0, 0)
    }

    fn subtree_log_potential(&self, d: usize, bits: u64) -> Result<f64> {
        let node = match self.nodes.get(&Self::key(d, bits)) {
            Some(n) => n,
            None => return Ok(0.0),
        };
        let kt = log_kt_potential(node.count, norm(&node.sum))?.value();
        if d == self.depth {
            return Ok(kt);
        }
        let minus = self.subtree_log_potential(d + 1, bits)?;
        let plus = self.subtree_log_potential(d + 1, bits | (1u64 << d))?;
        Ok(logaddexp(kt, minus + plus) - LN_2)
    }
}

/// CTW betting over a [`ContextTree`]; the context for each round is set
/// through [`StateDriven::set_state`] as packed bits.
#[derive(Debug, Clone)]
pub struct CtwBettor {
    tree: ContextTree,
    context: u64,
    log_potential: f64,
    touches: u64,
    round_touches: u64,
    beta_fault: bool,
}

impl CtwBettor {
    pub fn new(depth: usize, dim: usize) -> Result<Self> {
        Ok(CtwBettor {
            tree: ContextTree::new(depth, dim)?,
            context: 0,
            log_potential: 0.0,
            touches: 0,
            round_touches: 0,
            beta_fault: false,
        })
    }

    pub fn tree(&self) -> &ContextTree {
        &self.tree
    }

    pub fn depth(&self) -> usize {
        self.tree.depth
    }

    pub fn context(&self) -> u64 {
        self.context
    }

    /// Node visits since construction.
    pub fn node_touches(&self) -> u64 {
        self.touches
    }

    /// Node visits in the current round (action pass plus update pass).
    pub fn round_touches(&self) -> u64 {
        self.round_touches
    }

    /// Test hook: flips the sign of the `ln β` update.
    #[doc(hidden)]
    pub fn inject_beta_sign_fault(&mut self, on: bool) {
        self.beta_fault = on;
    }

    fn touch(&mut self) {
        self.touches += 1;
        self.round_touches += 1;
    }
}

impl StateDriven for CtwBettor {
    fn state_count(&self) -> usize {
        1usize << self.tree.depth
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

impl Bettor for CtwBettor {
    fn dim(&self) -> usize {
        self.tree.dim
    }

    fn bet(&mut self) -> Vec<f64> {
        self.round_touches = 0;
        let depth = self.tree.depth;
        let mut v = vec![0.0; self.tree.dim];
        for d in (0..=depth).rev() {
            self.touch();
            let Some(node) = self.tree.nodes.get(&ContextTree::key(d, self.context)) else {
                // every node below an unallocated one is unallocated too: v stays 0
                continue;
            };
            let kt = node.kt_bet();
            if d == depth {
                v = kt;
            } else {
                let p = sigmoid(node.log_beta);
                let q = sigmoid(-node.log_beta);
                for (vi, ki) in v.iter_mut().zip(&kt) {
                    *vi = p * ki + q * *vi;
                }
            }
        }
        v
    }

    fn absorb(&mut self, g: &[f64]) -> Result<()> {
        let depth = self.tree.depth;
        let dim = self.tree.dim;
        let mut child = 0.0;
        for d in (0..=depth).rev() {
            self.touch();
            let node = self
                .tree
                .nodes
                .entry(ContextTree::key(d, self.context))
                .or_insert_with(|| NodeState::new(dim));
            let old = norm(&node.sum);
            let new = node
                .sum
                .iter()
                .zip(g)
                .map(|(f, x)| (f + x) * (f + x))
                .sum::<f64>()
                .sqrt();
            let kt = log_kt_potential_ratio(node.count, old, new)?;
            let ratio = if d == depth {
                kt
            } else {
                let lb = node.log_beta;
                let r = logaddexp(ln_sigmoid(lb) + kt, ln_sigmoid(-lb) + child);
                if self.beta_fault {
                    node.log_beta -= kt - child;
                } else {
                    node.log_beta += kt - child;
                }
                r
            };
            axpy(&mut node.sum, 1.0, g);
            node.count += 1;
            child = ratio;
        }
        self.log_potential += child;
        Ok(())
    }

    fn log_potential(&self) -> f64 {
        self.log_potential
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_logistic() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(800.0) - 1.0).abs() < 1e-300);
        assert!(sigmoid(-800.0) >= 0.0);
        assert!((ln_sigmoid(0.0) + LN_2).abs() < 1e-15);
        assert!((ln_sigmoid(-800.0) + 800.0).abs() < 1e-12);
        assert!((sigmoid(3.0) + sigmoid(-3.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fresh_tree() {
        let mut b = CtwBettor::new(3, 2).unwrap();
        b.set_state(5).unwrap();
        assert_eq!(b.bet(), vec![0.0, 0.0]);
        assert_eq!(b.tree().log_potential().unwrap(), 0.0);
        assert_eq!(b.round_touches(), 4);
        assert!(b.set_state(8).is_err());
    }

    #[test]
    fn depth_one_first_round() {
        let mut b = CtwBettor::new(1, 1).unwrap();
        b.set_state(1).unwrap();
        b.bet();
        b.absorb(&[0.7]).unwrap();
        let kt = log_kt_potential(1, 0.7).unwrap().value();
        assert!((b.tree().log_potential().unwrap() - kt).abs() < 1e-15);
        assert!((b.log_potential() - kt).abs() < 1e-15);
        assert_eq!(b.round_touches(), 4);
        assert_eq!(b.tree().node_count(), 2);
    }

    #[test]
    fn depth_limit() {
        assert!(CtwBettor::new(MAX_DEPTH + 1, 1).is_err());
        assert!(CtwBettor::new(2, 0).is_err());
    }
}
