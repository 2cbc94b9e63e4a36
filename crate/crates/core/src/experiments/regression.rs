use crate::error::{Error, Result};
use crate::olo::OloEngine;
use crate::side_info::Symbol;
use crate::vector::{dot, norm};

/// One `(x_t, y_t)` pair; features are unit norm after preprocessing.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionExample {
    pub x: Vec<f64>,
    pub y: f64,
}

/// `∂|⟨w, x⟩ - y| = sgn(⟨w, x⟩ - y) x` with `sgn(0) = +1`.
pub fn absolute_loss_subgradient(w: &[f64], x: &[f64], y: f64) -> Vec<f64> {
    let s = Symbol::sign_of(dot(w, x) - y).value();
    x.iter().map(|v| s * v).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub round: u64,
    pub cum_loss: f64,
    pub wealth: Option<f64>,
}

/// Online regression with absolute loss; the engine receives the negated
/// subgradient.
pub fn run_regression<E: OloEngine + ?Sized>(
    engine: &mut E,
    data: &[RegressionExample],
) -> Result<Vec<TraceRow>> {
    run_regression_with(engine, data, |_, _| Ok(()))
}

/// [`run_regression`] with a hook called after every round.
pub fn run_regression_with<E, F>(
    engine: &mut E,
    data: &[RegressionExample],
    mut hook: F,
) -> Result<Vec<TraceRow>>
where
    E: OloEngine + ?Sized,
    F: FnMut(u64, &E) -> Result<()>,
{
    let mut rows = Vec::with_capacity(data.len());
    let mut cum = 0.0;
    for (i, ex) in data.iter().enumerate() {
        let t = i as u64 + 1;
        if norm(&ex.x) > 1.0 + 1e-9 {
            return Err(Error::Data(format!("round {t}: feature norm exceeds 1")));
        }
        engine.observe_features(&ex.x);
        let w = engine.action()?;
        let pred = dot(&w, &ex.x);
        if !pred.is_finite() {
            return Err(Error::Data(format!(
                "round {t}: {} produced a non-finite prediction",
                engine.label()
            )));
        }
        cum += (pred - ex.y).abs();
        let g: Vec<f64> = absolute_loss_subgradient(&w, &ex.x, ex.y)
            .into_iter()
            .map(|v| -v)
            .collect();
        engine.update(&g)?;
        rows.push(TraceRow {
            round: t,
            cum_loss: cum,
            wealth: engine.wealth(),
        });
        hook(t, engine)?;
    }
    Ok(rows)
}
