//! Online linear regression with absolute loss.
//!
//! Each round the engine plays `w_t`, predicts `ŷ_t = ⟨w_t, x_t⟩`, suffers
//! `|ŷ_t - y_t|` and is fed `-sgn(ŷ_t - y_t) x_t`. Side-information engines
//! quantize that fed gradient along canonical axes, `ω_t = Q_{e_j}(g_t)`.

pub mod config;
pub mod preprocess;
pub mod regression;
pub mod synth;
pub mod trace;

use std::path::Path;

pub use config::{Algorithm, DataSpec, ExperimentConfig};
pub use preprocess::{preprocess, ColumnSpec, RawTable};
pub use regression::{absolute_loss_subgradient, run_regression, run_regression_with, RegressionExample, TraceRow};
pub use synth::{synthesize_regression, synthesize_sequence, RegressionSynth, SyntheticKind};
pub use trace::CtwTraceRow;

use crate::ctw::CtwBettor;
use crate::error::{Error, Result};
use crate::mixture::{Addition, Mixture};
use crate::olo::{Bettor, CoinBettingOlo, KtBettor, OloEngine};
use crate::per_state::{PerStateAdaNormal, PerStateDfeg, PerStateOgd, ProductKtBettor};
use crate::side_info::{BinaryQuantizer, Quantized, SideChannel, WithSideInfo};

pub type QuantizedCtwOlo = CoinBettingOlo<Quantized<CtwBettor>>;
pub type QuantizedProductKtOlo = CoinBettingOlo<Quantized<ProductKtBettor>>;

fn channel(dim: usize, depth: usize, axis: usize) -> Result<SideChannel> {
    SideChannel::new(BinaryQuantizer::axis(dim, axis)?, depth)
}

pub fn quantized_ctw(dim: usize, depth: usize, axis: usize) -> Result<Quantized<CtwBettor>> {
    Quantized::new(CtwBettor::new(depth, dim)?, channel(dim, depth, axis)?)
}

pub fn quantized_product_kt(dim: usize, depth: usize, axis: usize) -> Result<Quantized<ProductKtBettor>> {
    Quantized::new(ProductKtBettor::new(1 << depth, dim)?, channel(dim, depth, axis)?)
}

pub fn kt_engine(dim: usize, w0: f64) -> Result<CoinBettingOlo<KtBettor>> {
    Ok(CoinBettingOlo::new(KtBettor::new(dim), w0)?.with_label("kt"))
}

/// CTW of depth `D` on the auxiliary sequence `Q_{e_axis}(g_t)`.
pub fn ctw_engine(dim: usize, depth: usize, axis: usize, w0: f64) -> Result<QuantizedCtwOlo> {
    Ok(CoinBettingOlo::new(quantized_ctw(dim, depth, axis)?, w0)?.with_label("ctw"))
}

/// Per-state KT on the order-`D` Markov states of `Q_{e_axis}(g_t)`.
pub fn product_kt_engine(dim: usize, depth: usize, axis: usize, w0: f64) -> Result<QuantizedProductKtOlo> {
    Ok(CoinBettingOlo::new(quantized_product_kt(dim, depth, axis)?, w0)?.with_label("product_kt"))
}

fn mixture_of<B: Bettor>(parts: Vec<B>, w0: f64, label: &str) -> Result<CoinBettingOlo<Mixture<B>>> {
    Ok(CoinBettingOlo::new(Mixture::uniform(parts)?, w0)?.with_label(label))
}

/// Uniform mixture of CTW engines, one per quantizer axis, sharing one wealth.
pub fn mixture_ctw_engine(
    dim: usize,
    depth: usize,
    axes: &[usize],
    w0: f64,
) -> Result<CoinBettingOlo<Mixture<Quantized<CtwBettor>>>> {
    let parts = axes.iter().map(|&a| quantized_ctw(dim, depth, a)).collect::<Result<_>>()?;
    mixture_of(parts, w0, "mixture_ctw")
}

/// Sum of independent CTW engines, one per axis, each starting with `w0`.
pub fn addition_ctw_engine(dim: usize, depth: usize, axes: &[usize], w0: f64) -> Result<Addition<QuantizedCtwOlo>> {
    let parts = axes.iter().map(|&a| ctw_engine(dim, depth, a, w0)).collect::<Result<_>>()?;
    Ok(Addition::new(parts)?.with_label("addition_ctw"))
}

pub fn mixture_kt_engine(
    dim: usize,
    depth: usize,
    axes: &[usize],
    w0: f64,
) -> Result<CoinBettingOlo<Mixture<Quantized<ProductKtBettor>>>> {
    let parts = axes
        .iter()
        .map(|&a| quantized_product_kt(dim, depth, a))
        .collect::<Result<_>>()?;
    mixture_of(parts, w0, "mixture_kt")
}

pub fn addition_kt_engine(
    dim: usize,
    depth: usize,
    axes: &[usize],
    w0: f64,
) -> Result<Addition<QuantizedProductKtOlo>> {
    let parts = axes
        .iter()
        .map(|&a| product_kt_engine(dim, depth, a, w0))
        .collect::<Result<_>>()?;
    Ok(Addition::new(parts)?.with_label("addition_kt"))
}

/// One engine of an experiment sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineSpec {
    pub config_id: String,
    pub algorithm: Algorithm,
    pub depth: usize,
    pub axes: Vec<usize>,
    pub eta: Option<f64>,
}

/// Expands a config into its engines, in a fixed order.
pub fn plan(config: &ExperimentConfig, dim: usize) -> Result<Vec<EngineSpec>> {
    let axes: Vec<usize> = config.axes.clone().unwrap_or_else(|| (0..dim).collect());
    if let Some(&a) = axes.iter().find(|&&a| a >= dim) {
        return Err(Error::Config(format!("axis {a} out of range for d = {dim}")));
    }
    let mut out = Vec::new();
    for &alg in &config.algorithms {
        let name = alg.name();
        if !alg.uses_side_info() {
            out.push(EngineSpec {
                config_id: name.to_string(),
                algorithm: alg,
                depth: 0,
                axes: vec![],
                eta: None,
            });
            continue;
        }
        for &d in &config.depths {
            if alg.combines_axes() {
                let tag: Vec<String> = axes.iter().map(usize::to_string).collect();
                out.push(EngineSpec {
                    config_id: format!("{name}_d{d}_q{}", tag.join("-")),
                    algorithm: alg,
                    depth: d,
                    axes: axes.clone(),
                    eta: None,
                });
                continue;
            }
            for &a in &axes {
                if alg == Algorithm::Ogd {
                    for &eta in &config.ogd_etas {
                        out.push(EngineSpec {
                            config_id: format!("{name}_d{d}_q{a}_eta{eta}"),
                            algorithm: alg,
                            depth: d,
                            axes: vec![a],
                            eta: Some(eta),
                        });
                    }
                } else {
                    out.push(EngineSpec {
                        config_id: format!("{name}_d{d}_q{a}"),
                        algorithm: alg,
                        depth: d,
                        axes: vec![a],
                        eta: None,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Builds the engine of a spec. CTW engines are returned separately so that
/// their diagnostics can be traced.
pub enum BuiltEngine {
    Ctw(QuantizedCtwOlo),
    Other(Box<dyn OloEngine>),
}

pub fn build(spec: &EngineSpec, config: &ExperimentConfig, dim: usize) -> Result<BuiltEngine> {
    let w0 = config.w0;
    let d = spec.depth;
    let axis = spec.axes.first().copied().unwrap_or(0);
    let states = 1usize << d;
    let clip = config.clip;
    let boxed: Box<dyn OloEngine> = match spec.algorithm {
        Algorithm::Ctw => {
            return Ok(BuiltEngine::Ctw(ctw_engine(dim, d, axis, w0)?.with_clipping(clip)));
        }
        Algorithm::Kt => Box::new(kt_engine(dim, w0)?.with_clipping(clip)),
        Algorithm::ProductKt => Box::new(product_kt_engine(dim, d, axis, w0)?.with_clipping(clip)),
        Algorithm::MixtureCtw => Box::new(mixture_ctw_engine(dim, d, &spec.axes, w0)?.with_clipping(clip)),
        Algorithm::MixtureKt => Box::new(mixture_kt_engine(dim, d, &spec.axes, w0)?.with_clipping(clip)),
        Algorithm::AdditionCtw => {
            let parts = spec
                .axes
                .iter()
                .map(|&a| Ok(ctw_engine(dim, d, a, w0)?.with_clipping(clip)))
                .collect::<Result<Vec<_>>>()?;
            Box::new(Addition::new(parts)?.with_label("addition_ctw"))
        }
        Algorithm::AdditionKt => {
            let parts = spec
                .axes
                .iter()
                .map(|&a| Ok(product_kt_engine(dim, d, a, w0)?.with_clipping(clip)))
                .collect::<Result<Vec<_>>>()?;
            Box::new(Addition::new(parts)?.with_label("addition_kt"))
        }
        Algorithm::Ogd => {
            let eta = spec.eta.unwrap_or(1.0);
            Box::new(WithSideInfo::new(PerStateOgd::new(states, dim, eta)?, channel(dim, d, axis)?)?)
        }
        Algorithm::Dfeg => {
            let p = &config.dfeg;
            let e = PerStateDfeg::new(states, dim, p.lipschitz, p.delta, p.a)?;
            Box::new(WithSideInfo::new(e, channel(dim, d, axis)?)?)
        }
        Algorithm::AdaNormal => {
            let p = &config.adanormal;
            let e = PerStateAdaNormal::new(states, dim, p.lipschitz, p.a, p.eps)?;
            Box::new(WithSideInfo::new(e, channel(dim, d, axis)?)?)
        }
    };
    Ok(BuiltEngine::Other(boxed))
}

pub fn load_data(config: &ExperimentConfig) -> Result<Vec<RegressionExample>> {
    match &config.data {
        DataSpec::Synthetic { kind, rounds } => synthesize_regression(kind, *rounds, config.seed),
        DataSpec::Csv { path, columns, rounds } => {
            let table = RawTable::from_path(path)?;
            let mut data = preprocess(&table, columns)?;
            if let Some(r) = rounds {
                data.truncate(*r);
            }
            if data.is_empty() {
                return Err(Error::Data(format!("{}: no rows", path.display())));
            }
            Ok(data)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineResult {
    pub config_id: String,
    pub algorithm: Algorithm,
    pub rows: Vec<TraceRow>,
    pub best_in_sweep: bool,
    pub ctw_trace: Option<Vec<CtwTraceRow>>,
}

impl EngineResult {
    pub fn final_cum_loss(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.cum_loss)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub name: String,
    pub results: Vec<EngineResult>,
}

fn run_spec(
    spec: &EngineSpec,
    config: &ExperimentConfig,
    data: &[RegressionExample],
    dim: usize,
    trace_ctw: bool,
) -> Result<EngineResult> {
    let (rows, ctw_trace) = match build(spec, config, dim)? {
        BuiltEngine::Ctw(mut e) => {
            let mut diag = Vec::new();
            let rows = run_regression_with(&mut e, data, |t, e: &QuantizedCtwOlo| {
                if trace_ctw {
                    let q = e.bettor();
                    let omega = q.channel().sequence().symbols().last().map_or(0, |s| s.value() as i8);
                    diag.push(CtwTraceRow {
                        t,
                        omega,
                        log_wealth: e.log_wealth(),
                        log_potential: e.log_potential(),
                        node_touches: q.inner().round_touches(),
                    });
                }
                Ok(())
            })?;
            (rows, trace_ctw.then_some(diag))
        }
        BuiltEngine::Other(mut e) => (run_regression(&mut *e, data)?, None),
    };
    Ok(EngineResult {
        config_id: spec.config_id.clone(),
        algorithm: spec.algorithm,
        rows,
        best_in_sweep: false,
        ctw_trace,
    })
}

/// Runs every engine of the config on the same data, fanning engines out
/// over worker threads. Results come back in plan order.
pub fn run_experiment(config: &ExperimentConfig, trace_ctw: bool) -> Result<RunReport> {
    config.validate()?;
    let data = load_data(config)?;
    let dim = data[0].x.len();
    if let Some((i, _)) = data.iter().enumerate().find(|(_, e)| e.x.len() != dim) {
        return Err(Error::Data(format!("row {}: feature dimension changes", i + 1)));
    }
    let specs = plan(config, dim)?;
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(specs.len().max(1));
    let mut slots: Vec<Option<Result<EngineResult>>> = (0..specs.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let chunk = specs.len().div_ceil(workers).max(1);
        let handles: Vec<_> = specs
            .chunks(chunk)
            .map(|part| {
                let data = &data;
                scope.spawn(move || {
                    part.iter()
                        .map(|s| run_spec(s, config, data, dim, trace_ctw))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        let mut i = 0;
        for h in handles {
            for r in h.join().expect("worker panicked") {
                slots[i] = Some(r);
                i += 1;
            }
        }
    });
    let mut results = slots
        .into_iter()
        .map(|s| s.expect("every spec ran"))
        .collect::<Result<Vec<_>>>()?;
    mark_best(&mut results);
    Ok(RunReport {
        name: config.name.clone(),
        results,
    })
}

/// Flags the lowest final loss within each algorithm's sweep.
fn mark_best(results: &mut [EngineResult]) {
    for alg in Algorithm::ALL {
        let best = results
            .iter()
            .enumerate()
            .filter(|(_, r)| r.algorithm == alg)
            .min_by(|a, b| a.1.final_cum_loss().total_cmp(&b.1.final_cum_loss()))
            .map(|(i, _)| i);
        if let Some(i) = best {
            results[i].best_in_sweep = true;
        }
    }
}

/// Writes `<config_id>.csv` per engine, `summary.csv`, and CTW diagnostics
/// when present.
pub fn write_report(report: &RunReport, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| Error::Io(format!("{}: {e}", out_dir.display())))?;
    for r in &report.results {
        trace::write_trace(
            &out_dir.join(format!("{}.csv", r.config_id)),
            &r.rows,
            r.algorithm.name(),
            &r.config_id,
        )?;
        if let Some(diag) = &r.ctw_trace {
            trace::write_ctw_trace(&out_dir.join(format!("{}.ctw_trace.csv", r.config_id)), diag)?;
        }
    }
    trace::write_summary(&out_dir.join("summary.csv"), &report.results)
}
