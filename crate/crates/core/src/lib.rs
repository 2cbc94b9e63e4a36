//! Parameter-free online linear optimization with side information.
//!
//! The crate is organized bottom-up:
//!
//! - [`special`]: log-gamma and Lambert W evaluators.
//! - [`betting`]: scalar Krichevsky–Trofimov (KT) coin-betting potentials and bets.
//! - [`bounds`]: closed-form and Fenchel-dual regret bound calculators.
//! - [`vector`], [`ledger`], [`olo`]: gradients, wealth bookkeeping and the
//!   coin-betting to OLO reduction (1D and vectorial KT).
//! - [`side_info`]: quantizers, auxiliary sequences, Markov contexts and suffix trees.
//! - [`per_state`]: product-KT betting and per-state OGD / DFEG / AdaNormal baselines.
//! - [`mixture`]: mixtures of betting strategies and the addition combiner.
//! - [`ctw`]: the O(D)-per-round context tree weighting OLO algorithm.
//! - [`oracle`]: slow brute-force references used by tests and `betolo verify`.
//! - [`experiments`]: online linear regression with absolute loss, preprocessing,
//!   synthetic generators, config parsing and CSV traces.
//! - [`verify`]: the property suites behind `betolo verify`.
//!
//! All engines work in the reward-maximization convention: an engine plays
//! `w_t`, receives `g_t` with `‖g_t‖ ≤ 1` and gains `⟨g_t, w_t⟩`.

pub mod betting;
pub mod bounds;
pub mod ctw;
pub mod error;
pub mod experiments;
pub mod ledger;
pub mod mixture;
pub mod olo;
pub mod oracle;
pub mod per_state;
pub mod side_info;
pub mod special;
pub mod vector;
pub mod verify;

pub use betting::{
    kt_bet_fraction, log_kt_potential, log_kt_potential_ratio, BetFraction, LogPotential,
};
pub use bounds::{kt_exact_dual_bound, kt_regret_bound, product_dual_bound, RegretBoundInputs};
pub use ctw::{ContextTree, CtwBettor, NodeState};
pub use error::{Error, Result};
pub use ledger::WealthLedger;
pub use mixture::{Addition, Mixture};
pub use olo::{one_dim_kt_olo, Bettor, CoinBettingOlo, KtBettor, KtStat, OloEngine};
pub use per_state::{PerStateAdaNormal, PerStateDfeg, PerStateOgd, ProductKtBettor, StateTable};
pub use side_info::{
    AuxiliarySequence, BinaryQuantizer, Quantized, SideChannel, StateDriven, SuffixTree, Symbol, WithSideInfo,
};
pub use special::{lambert_w, ln_gamma};
pub use vector::GradientVector;
pub use verify::{run_all, SuiteResult, VerifyOptions};

/// Vectorial KT OLO over `R^d`.
pub type KtOlo = CoinBettingOlo<KtBettor>;
/// Per-state KT OLO driven by explicit side information.
pub type ProductKtOlo = CoinBettingOlo<ProductKtBettor>;
/// CTW OLO driven by explicit contexts.
pub type CtwOlo = CoinBettingOlo<CtwBettor>;
