//! Binary side information: quantizers, auxiliary sequences, Markov contexts
//! and suffix trees.
//!
//! Contexts are written oldest symbol first, so the last symbol of a context
//! is `ω_{t-1}`. In packed form ([`context_bits`]) bit `k` holds `ω_{t-1-k}`,
//! with `1` for `+1`.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::olo::{Bettor, OloEngine};
use crate::vector::{check_dim, dot};

/// Largest context depth supported by packed contexts.
pub const MAX_DEPTH: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Minus,
    Plus,
}

impl Symbol {
    /// `sgn(x)` with `sgn(0) = +1`.
    pub fn sign_of(x: f64) -> Symbol {
        if x < 0.0 {
            Symbol::Minus
        } else {
            Symbol::Plus
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Symbol::Plus => 1.0,
            Symbol::Minus => -1.0,
        }
    }

    pub fn bit(self) -> u64 {
        match self {
            Symbol::Plus => 1,
            Symbol::Minus => 0,
        }
    }

    pub fn from_char(c: char) -> Option<Symbol> {
        match c {
            '1' => Some(Symbol::Plus),
            '0' => Some(Symbol::Minus),
            _ => None,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Symbol::Plus => '1',
            Symbol::Minus => '0',
        }
    }
}

/// `Q(g) = sgn(⟨f, g⟩)`.
#[derive(Debug, Clone, PartialEq)]
pub enum BinaryQuantizer {
    /// Canonical quantizer `Q_{e_j}`.
    Axis { dim: usize, axis: usize },
    Direction(Vec<f64>),
}

impl BinaryQuantizer {
    pub fn axis(dim: usize, axis: usize) -> Result<Self> {
        if axis >= dim {
            return Err(Error::param("axis", format!("axis {axis} out of range for d = {dim}")));
        }
        Ok(BinaryQuantizer::Axis { dim, axis })
    }

    pub fn direction(f: Vec<f64>) -> Result<Self> {
        if f.is_empty() || f.iter().any(|x| !x.is_finite()) {
            return Err(Error::param("direction", "must be a finite nonempty vector"));
        }
        Ok(BinaryQuantizer::Direction(f))
    }

    pub fn dim(&self) -> usize {
        match self {
            BinaryQuantizer::Axis { dim, .. } => *dim,
            BinaryQuantizer::Direction(f) => f.len(),
        }
    }

    pub fn quantize(&self, g: &[f64]) -> Result<Symbol> {
        check_dim(self.dim(), g.len())?;
        let s = match self {
            BinaryQuantizer::Axis { axis, .. } => g[*axis],
            BinaryQuantizer::Direction(f) => dot(f, g),
        };
        Ok(Symbol::sign_of(s))
    }
}

/// `Ω = (ω_1, ω_2, …)`, one symbol appended per completed round.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AuxiliarySequence {
    symbols: Vec<Symbol>,
}

impl AuxiliarySequence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, s: Symbol) {
        self.symbols.push(s);
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    /// Context for the coming round `t = len + 1`.
    pub fn current_context(&self, depth: usize) -> Vec<Symbol> {
        markov_context(&self.symbols, self.symbols.len() + 1, depth)
    }

    /// Packed context for the coming round, without materializing it.
    pub fn current_bits(&self, depth: usize) -> u64 {
        let n = self.symbols.len();
        let mut bits = 0u64;
        for k in 0..depth {
            let s = if k < n { self.symbols[n - 1 - k] } else { Symbol::Plus };
            bits |= s.bit() << k;
        }
        bits
    }
}

/// `ω_{t-D} … ω_{t-1}` (1-based rounds), oldest first; positions before the
/// first round read as `+1`.
pub fn markov_context(omega: &[Symbol], t: usize, depth: usize) -> Vec<Symbol> {
    (1..=depth)
        .rev()
        .map(|k| {
            if t > k && t - k <= omega.len() {
                omega[t - k - 1]
            } else {
                Symbol::Plus
            }
        })
        .collect()
}

/// Packs a context (oldest first) so that bit `k` is the `k`-th most recent symbol.
pub fn context_bits(context: &[Symbol]) -> u64 {
    context
        .iter()
        .rev()
        .enumerate()
        .fold(0u64, |acc, (k, s)| acc | (s.bit() << k))
}

/// Inverse of [`context_bits`] for a context of length `depth`.
pub fn context_from_bits(bits: u64, depth: usize) -> Vec<Symbol> {
    (0..depth)
        .rev()
        .map(|k| if (bits >> k) & 1 == 1 { Symbol::Plus } else { Symbol::Minus })
        .collect()
}

fn text_of(s: &[Symbol]) -> String {
    s.iter().map(|c| c.to_char()).collect()
}

fn is_suffix(short: &[Symbol], long: &[Symbol]) -> bool {
    short.len() <= long.len() && long[long.len() - short.len()..] == *short
}

/// Why a leaf set is not a suffix tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeDefect {
    /// `leaf` is a suffix of `other` (or a duplicate of it).
    Improper { leaf: String, other: String },
    /// No leaf matches contexts ending in `witness`.
    Incomplete { witness: String },
}

impl fmt::Display for TreeDefect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeDefect::Improper { leaf, other } => {
                write!(f, "not proper: leaf \"{leaf}\" is a suffix of \"{other}\"")
            }
            TreeDefect::Incomplete { witness } => {
                write!(f, "not complete: no leaf matches contexts ending in \"…{witness}\"")
            }
        }
    }
}

/// Checks that `leaves` is proper and complete, i.e. the leaf set of a full
/// binary tree.
pub fn validate_suffix_tree(leaves: &[Vec<Symbol>]) -> std::result::Result<(), TreeDefect> {
    for (i, a) in leaves.iter().enumerate() {
        for (j, b) in leaves.iter().enumerate() {
            if i != j && is_suffix(a, b) {
                return Err(TreeDefect::Improper {
                    leaf: text_of(a),
                    other: text_of(b),
                });
            }
        }
    }
    let max_len = leaves.iter().map(Vec::len).max().unwrap_or(0);
    // walk the implied tree from the root, extending nodes by older symbols
    let mut stack: Vec<Vec<Symbol>> = vec![Vec::new()];
    while let Some(node) = stack.pop() {
        if leaves.iter().any(|l| *l == node) {
            continue;
        }
        if node.len() >= max_len || !leaves.iter().any(|l| is_suffix(&node, l)) {
            return Err(TreeDefect::Incomplete {
                witness: text_of(&node),
            });
        }
        for s in [Symbol::Plus, Symbol::Minus] {
            let mut child = Vec::with_capacity(node.len() + 1);
            child.push(s);
            child.extend_from_slice(&node);
            stack.push(child);
        }
    }
    Ok(())
}

/// A proper and complete suffix set; leaves are stored oldest symbol first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SuffixTree {
    leaves: Vec<Vec<Symbol>>,
}

impl SuffixTree {
    pub fn new(leaves: Vec<Vec<Symbol>>) -> Result<Self> {
        validate_suffix_tree(&leaves).map_err(|d| Error::InvalidTree(d.to_string()))?;
        Ok(SuffixTree { leaves })
    }

    /// The depth-0 tree `{λ}`.
    pub fn root() -> Self {
        SuffixTree {
            leaves: vec![Vec::new()],
        }
    }

    /// All `2^D` strings of length `D`, in packed-bit order.
    pub fn perfect(depth: usize) -> Result<Self> {
        if depth > 20 {
            return Err(Error::param("depth", "perfect trees are limited to D <= 20"));
        }
        let leaves = (0..1u64 << depth)
            .map(|b| context_from_bits(b, depth))
            .collect();
        Ok(SuffixTree { leaves })
    }

    /// Parses the comma-separated text form, e.g. `"1,10,00"`; the empty
    /// string is `{λ}`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut leaves = Vec::new();
        for part in text.trim().split(',') {
            let part = part.trim();
            let leaf = part
                .chars()
                .map(|c| {
                    Symbol::from_char(c)
                        .ok_or_else(|| Error::InvalidTree(format!("bad symbol {c:?} in \"{part}\"")))
                })
                .collect::<Result<Vec<_>>>()?;
            leaves.push(leaf);
        }
        SuffixTree::new(leaves)
    }

    pub fn to_text(&self) -> String {
        self.leaves.iter().map(|l| text_of(l)).collect::<Vec<_>>().join(",")
    }

    pub fn leaves(&self) -> &[Vec<Symbol>] {
        &self.leaves
    }

    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    pub fn depth(&self) -> usize {
        self.leaves.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Index of the unique leaf that is a suffix of `context`.
    pub fn match_suffix(&self, context: &[Symbol]) -> Result<usize> {
        let mut found = None;
        for (i, leaf) in self.leaves.iter().enumerate() {
            if is_suffix(leaf, context) {
                if found.is_some() {
                    return Err(Error::InvalidTree(format!(
                        "context \"{}\" matches several leaves",
                        text_of(context)
                    )));
                }
                found = Some(i);
            }
        }
        found.ok_or_else(|| {
            Error::InvalidTree(format!("no leaf matches context \"{}\"", text_of(context)))
        })
    }

    /// `Γ_D(T) = 2|T| - 1 - |{s ∈ T : |s| = D}|`.
    pub fn complexity(&self, depth: usize) -> u32 {
        let full = self.leaves.iter().filter(|l| l.len() == depth).count();
        (2 * self.leaves.len() - 1 - full) as u32
    }

    fn sorted(mut self) -> Self {
        self.leaves.sort();
        self
    }
}

impl fmt::Display for SuffixTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// `Γ_D(T)`; see [`SuffixTree::complexity`].
pub fn tree_complexity(tree: &SuffixTree, depth: usize) -> Result<u32> {
    if tree.depth() > depth {
        return Err(Error::InvalidTree(format!(
            "tree depth {} exceeds D = {depth}",
            tree.depth()
        )));
    }
    Ok(tree.complexity(depth))
}

fn all_trees(depth: usize) -> Vec<SuffixTree> {
    let mut out = vec![SuffixTree::root()];
    if depth == 0 {
        return out;
    }
    let sub = all_trees(depth - 1);
    for minus in &sub {
        for plus in &sub {
            let mut leaves = Vec::new();
            for (child, s) in [(minus, Symbol::Minus), (plus, Symbol::Plus)] {
                for l in &child.leaves {
                    let mut leaf = l.clone();
                    leaf.push(s);
                    leaves.push(leaf);
                }
            }
            out.push(SuffixTree { leaves }.sorted());
        }
    }
    out
}

/// Every suffix tree of depth at most `D ≤ 3` (1, 2, 5 and 26 trees).
pub fn enumerate_suffix_trees(depth: usize) -> Result<Vec<SuffixTree>> {
    if depth > 3 {
        return Err(Error::param("depth", format!("enumeration refuses D = {depth} > 3")));
    }
    Ok(all_trees(depth))
}

/// Canonical form of a leaf set for comparisons.
pub fn canonical_leaves(leaves: &[Vec<Symbol>]) -> BTreeSet<Vec<Symbol>> {
    leaves.iter().cloned().collect()
}

/// Engines whose action depends on a discrete side-information state.
pub trait StateDriven {
    /// Number of states accepted by [`StateDriven::set_state`].
    fn state_count(&self) -> usize;

    fn set_state(&mut self, state: usize) -> Result<()>;
}

/// A quantizer feeding an auxiliary sequence, read back as depth-`D` Markov
/// states `0..2^D`.
#[derive(Debug, Clone, PartialEq)]
pub struct SideChannel {
    quantizer: BinaryQuantizer,
    aux: AuxiliarySequence,
    depth: usize,
}

impl SideChannel {
    pub fn new(quantizer: BinaryQuantizer, depth: usize) -> Result<Self> {
        if depth > MAX_DEPTH {
            return Err(Error::param("depth", format!("D = {depth} exceeds {MAX_DEPTH}")));
        }
        Ok(SideChannel {
            quantizer,
            aux: AuxiliarySequence::new(),
            depth,
        })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn quantizer(&self) -> &BinaryQuantizer {
        &self.quantizer
    }

    pub fn sequence(&self) -> &AuxiliarySequence {
        &self.aux
    }

    pub fn state(&self) -> usize {
        self.aux.current_bits(self.depth) as usize
    }

    /// Appends `ω_t = Q(g_t)` and returns it.
    pub fn observe(&mut self, g: &[f64]) -> Result<Symbol> {
        let s = self.quantizer.quantize(g)?;
        self.aux.push(s);
        Ok(s)
    }

    fn check_states(&self, states: usize) -> Result<()> {
        let need = 1usize << self.depth;
        if states < need {
            return Err(Error::param(
                "depth",
                format!("depth {} needs {need} states, engine has {states}", self.depth),
            ));
        }
        Ok(())
    }
}

/// A state-driven bettor fed by its own [`SideChannel`].
#[derive(Debug, Clone)]
pub struct Quantized<B> {
    inner: B,
    channel: SideChannel,
}

impl<B: Bettor + StateDriven> Quantized<B> {
    pub fn new(inner: B, channel: SideChannel) -> Result<Self> {
        channel.check_states(inner.state_count())?;
        check_dim(inner.dim(), channel.quantizer.dim())?;
        Ok(Quantized { inner, channel })
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }

    pub fn inner_mut(&mut self) -> &mut B {
        &mut self.inner
    }

    pub fn channel(&self) -> &SideChannel {
        &self.channel
    }
}

impl<B: Bettor + StateDriven> Bettor for Quantized<B> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn bet(&mut self) -> Vec<f64> {
        self.inner
            .set_state(self.channel.state())
            .expect("state range checked at construction");
        self.inner.bet()
    }

    fn absorb(&mut self, g: &[f64]) -> Result<()> {
        self.inner
            .set_state(self.channel.state())
            .expect("state range checked at construction");
        self.inner.absorb(g)?;
        self.channel.observe(g)?;
        Ok(())
    }

    fn log_potential(&self) -> f64 {
        self.inner.log_potential()
    }
}

/// A state-driven OLO engine fed by its own [`SideChannel`].
#[derive(Debug, Clone)]
pub struct WithSideInfo<E> {
    inner: E,
    channel: SideChannel,
}

impl<E: OloEngine + StateDriven> WithSideInfo<E> {
    pub fn new(inner: E, channel: SideChannel) -> Result<Self> {
        channel.check_states(inner.state_count())?;
        check_dim(inner.dim(), channel.quantizer.dim())?;
        Ok(WithSideInfo { inner, channel })
    }

    pub fn inner(&self) -> &E {
        &self.inner
    }
}

impl<E: OloEngine + StateDriven> OloEngine for WithSideInfo<E> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn observe_features(&mut self, x: &[f64]) {
        self.inner.observe_features(x)
    }

    fn action(&mut self) -> Result<Vec<f64>> {
        self.inner.set_state(self.channel.state())?;
        self.inner.action()
    }

    fn update(&mut self, g: &[f64]) -> Result<()> {
        self.inner.set_state(self.channel.state())?;
        self.inner.update(g)?;
        self.channel.observe(g)?;
        Ok(())
    }

    fn wealth(&self) -> Option<f64> {
        self.inner.wealth()
    }

    fn label(&self) -> String {
        self.inner.label()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Symbol::{Minus as M, Plus as P};

    #[test]
    fn quantizer_convention() {
        let q = BinaryQuantizer::axis(2, 0).unwrap();
        assert_eq!(q.quantize(&[1.0, 0.0]).unwrap(), P);
        assert_eq!(q.quantize(&[-1.0, 0.0]).unwrap(), M);
        assert_eq!(q.quantize(&[0.0, 1.0]).unwrap(), P);
        assert!(q.quantize(&[1.0]).is_err());
        assert!(BinaryQuantizer::axis(2, 2).is_err());
        let f = BinaryQuantizer::direction(vec![1.0, -1.0]).unwrap();
        assert_eq!(f.quantize(&[0.2, 0.5]).unwrap(), M);
    }

    #[test]
    fn context_padding() {
        assert_eq!(markov_context(&[], 1, 3), vec![P, P, P]);
        assert_eq!(markov_context(&[P, M], 3, 2), vec![P, M]);
        assert_eq!(markov_context(&[P, M], 3, 3), vec![P, P, M]);
        assert_eq!(markov_context(&[M, M, M], 2, 2), vec![P, M]);
    }

    #[test]
    fn packed_contexts_round_trip() {
        let c = vec![M, P, P, M];
        let b = context_bits(&c);
        assert_eq!(b, 0b0110);
        assert_eq!(context_from_bits(b, 4), c);
        let mut aux = AuxiliarySequence::new();
        for s in [M, P, M] {
            aux.push(s);
        }
        assert_eq!(aux.current_bits(5), context_bits(&aux.current_context(5)));
    }

    #[test]
    fn figure_one_tree() {
        let t = SuffixTree::parse("1,10,00").unwrap();
        let leaf = |c: &[Symbol]| t.leaves()[t.match_suffix(c).unwrap()].clone();
        assert_eq!(leaf(&[M, M, P]), vec![P]);
        assert_eq!(leaf(&[P, P, M]), vec![P, M]);
        assert_eq!(leaf(&[P, M, M]), vec![M, M]);
        assert_eq!(t.to_text(), "1,10,00");
        let root = SuffixTree::parse("").unwrap();
        assert_eq!(root, SuffixTree::root());
        assert_eq!(root.match_suffix(&[M, P]).unwrap(), 0);
    }

    #[test]
    fn validation_witnesses() {
        assert!(validate_suffix_tree(&[vec![]]).is_ok());
        assert!(validate_suffix_tree(&[vec![P], vec![M]]).is_ok());
        assert_eq!(
            validate_suffix_tree(&[vec![P]]),
            Err(TreeDefect::Incomplete {
                witness: "0".into()
            })
        );
        assert!(matches!(
            validate_suffix_tree(&[vec![P], vec![M, P], vec![M]]),
            Err(TreeDefect::Improper { .. })
        ));
        assert!(validate_suffix_tree(&[]).is_err());
        assert!(SuffixTree::parse("1,2").is_err());
    }

    #[test]
    fn complexity_examples() {
        let root = SuffixTree::root();
        assert_eq!(tree_complexity(&root, 2).unwrap(), 1);
        let p2 = SuffixTree::perfect(2).unwrap();
        assert_eq!(tree_complexity(&p2, 2).unwrap(), 3);
        assert!(tree_complexity(&p2, 1).is_err());
    }

    #[test]
    fn enumeration_counts() {
        let counts: Vec<usize> = (0..=3)
            .map(|d| enumerate_suffix_trees(d).unwrap().len())
            .collect();
        assert_eq!(counts, vec![1, 2, 5, 26]);
        assert!(enumerate_suffix_trees(4).is_err());
    }
}
