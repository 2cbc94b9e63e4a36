//! Combining several engines: the potential mixture and the addition trick.

use crate::error::{Error, Result};
use crate::olo::{Bettor, OloEngine};
use crate::vector::{axpy, check_dim};

pub(crate) fn logsumexp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Prior-weighted mixture of bettors `Ψ^mix = Σ_m w_m Ψ_m`.
///
/// The bet is the posterior-weighted average `Σ_m p_m v_m` with
/// `p_m ∝ w_m Ψ_m`.
#[derive(Debug, Clone)]
pub struct Mixture<B> {
    components: Vec<B>,
    log_prior: Vec<f64>,
}

impl<B: Bettor> Mixture<B> {
    /// Uniform prior.
    pub fn uniform(components: Vec<B>) -> Result<Self> {
        let m = components.len();
        if m == 0 {
            return Err(Error::param("components", "a mixture needs at least one component"));
        }
        let w = vec![1.0 / m as f64; m];
        Self::with_prior(components, &w)
    }

    pub fn with_prior(components: Vec<B>, prior: &[f64]) -> Result<Self> {
        check_dim(components.len(), prior.len())?;
        if components.is_empty() {
            return Err(Error::param("components", "a mixture needs at least one component"));
        }
        if prior.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::param("prior", "weights must be positive"));
        }
        let total: f64 = prior.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::param("prior", format!("weights sum to {total}, not 1")));
        }
        let d = components[0].dim();
        for c in &components {
            check_dim(d, c.dim())?;
        }
        Ok(Mixture {
            components,
            log_prior: prior.iter().map(|w| w.ln()).collect(),
        })
    }

    pub fn components(&self) -> &[B] {
        &self.components
    }

    pub fn components_mut(&mut self) -> &mut [B] {
        &mut self.components
    }

    pub fn log_prior(&self) -> &[f64] {
        &self.log_prior
    }

    /// Posterior weights `p_m = w_m Ψ_m / Ψ^mix`.
    pub fn posterior(&self) -> Vec<f64> {
        let lp = self.log_potential();
        self.components
            .iter()
            .zip(&self.log_prior)
            .map(|(c, w)| (w + c.log_potential() - lp).exp())
            .collect()
    }
}

impl<B: Bettor> Bettor for Mixture<B> {
    fn dim(&self) -> usize {
        self.components[0].dim()
    }

    fn bet(&mut self) -> Vec<f64> {
        let p = self.posterior();
        let mut v = vec![0.0; self.dim()];
        for (c, pm) in self.components.iter_mut().zip(p) {
            axpy(&mut v, pm, &c.bet());
        }
        v
    }

    fn absorb(&mut self, g: &[f64]) -> Result<()> {
        for c in &mut self.components {
            c.absorb(g)?;
        }
        Ok(())
    }

    fn log_potential(&self) -> f64 {
        logsumexp(
            self.components
                .iter()
                .zip(&self.log_prior)
                .map(|(c, w)| w + c.log_potential()),
        )
    }
}

/// Plays the sum of the sub-engines' actions and broadcasts every gradient.
pub struct Addition<E = Box<dyn OloEngine>> {
    engines: Vec<E>,
    label: String,
}

impl<E: OloEngine> Addition<E> {
    pub fn new(engines: Vec<E>) -> Result<Self> {
        if engines.is_empty() {
            return Err(Error::param("engines", "addition needs at least one engine"));
        }
        let d = engines[0].dim();
        for e in &engines {
            check_dim(d, e.dim())?;
        }
        Ok(Addition {
            engines,
            label: "addition".to_string(),
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn engines(&self) -> &[E] {
        &self.engines
    }
}

impl<E: OloEngine> OloEngine for Addition<E> {
    fn dim(&self) -> usize {
        self.engines[0].dim()
    }

    fn observe_features(&mut self, x: &[f64]) {
        for e in &mut self.engines {
            e.observe_features(x);
        }
    }

    fn action(&mut self) -> Result<Vec<f64>> {
        let mut w = vec![0.0; self.dim()];
        for e in &mut self.engines {
            axpy(&mut w, 1.0, &e.action()?);
        }
        Ok(w)
    }

    fn update(&mut self, g: &[f64]) -> Result<()> {
        for e in &mut self.engines {
            e.update(g)?;
        }
        Ok(())
    }

    /// Sum of the sub-engines' wealths, when all of them bet.
    fn wealth(&self) -> Option<f64> {
        self.engines.iter().map(|e| e.wealth()).sum()
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::olo::KtBettor;

    #[test]
    fn prior_validation() {
        let c = || vec![KtBettor::new(1), KtBettor::new(1)];
        assert!(Mixture::with_prior(c(), &[0.5, 0.5]).is_ok());
        assert!(Mixture::with_prior(c(), &[0.6, 0.5]).is_err());
        assert!(Mixture::with_prior(c(), &[1.0, 0.0]).is_err());
        assert!(Mixture::with_prior(c(), &[0.5]).is_err());
        assert!(Mixture::<KtBettor>::uniform(vec![]).is_err());
    }

    #[test]
    fn logsumexp_is_stable() {
        let v = logsumexp([1000.0, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(logsumexp(Vec::<f64>::new()), f64::NEG_INFINITY);
    }
}
