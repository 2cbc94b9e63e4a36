//! Dense gradient vectors and small slice helpers.

use crate::error::{Error, Result};

/// Tolerance on the unit-ball constraint `‖g‖ ≤ 1`.
pub const NORM_TOLERANCE: f64 = 1e-12;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `a += c * b`
pub fn axpy(a: &mut [f64], c: f64, b: &[f64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += c * y;
    }
}

pub fn scaled(a: &[f64], c: f64) -> Vec<f64> {
    a.iter().map(|x| c * x).collect()
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Rejects gradients outside the unit ball, or rescales them onto it when
/// `clip` is set.
pub fn check_ball(g: &[f64], clip: bool) -> Result<std::borrow::Cow<'_, [f64]>> {
    let n = norm(g);
    if !n.is_finite() {
        return Err(Error::domain("gradient", "non-finite component"));
    }
    if n <= 1.0 + NORM_TOLERANCE {
        return Ok(std::borrow::Cow::Borrowed(g));
    }
    if clip {
        Ok(std::borrow::Cow::Owned(g.iter().map(|x| x / n).collect()))
    } else {
        Err(Error::NormViolation { norm: n })
    }
}

/// A gradient `g_t` in the unit ball of `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector(Vec<f64>);

impl GradientVector {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        check_ball(&components, false)?;
        Ok(GradientVector(components))
    }

    /// Rescales onto the unit ball if needed.
    pub fn clipped(components: Vec<f64>) -> Result<Self> {
        let c = check_ball(&components, true)?.into_owned();
        Ok(GradientVector(c))
    }

    pub fn zeros(dim: usize) -> Self {
        GradientVector(vec![0.0; dim])
    }

    pub fn basis(dim: usize, axis: usize, sign: f64) -> Self {
        let mut v = vec![0.0; dim];
        v[axis] = sign.signum();
        GradientVector(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Neg for GradientVector {
    type Output = GradientVector;
    fn neg(self) -> GradientVector {
        GradientVector(self.0.into_iter().map(|x| -x).collect())
    }
}

impl AsRef<[f64]> for GradientVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_checks() {
        assert!(GradientVector::new(vec![0.6, 0.8]).is_ok());
        assert!(GradientVector::new(vec![1.0 + 1e-13]).is_ok());
        assert!(matches!(
            GradientVector::new(vec![1.0, 1.0]),
            Err(Error::NormViolation { .. })
        ));
        let c = GradientVector::clipped(vec![3.0, 4.0]).unwrap();
        assert!((c.norm() - 1.0).abs() < 1e-15);
        assert_eq!(c.as_slice(), &[0.6, 0.8]);
    }

    #[test]
    fn helpers() {
        let mut a = vec![1.0, 2.0];
        axpy(&mut a, 2.0, &[1.0, -1.0]);
        assert_eq!(a, vec![3.0, 0.0]);
        assert_eq!(dot(&[1.0, 2.0], &[3.0, 4.0]), 11.0);
        assert!(check_dim(2, 3).is_err());
    }
}
