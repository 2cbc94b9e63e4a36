//! Special functions: log-gamma and the principal branch of Lambert W.

use crate::error::{Error, Result};

/// Natural logarithm of the Gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0, "ln_gamma requires x > 0, got {x}");
    libm::lgamma(x)
}

// Stirling correction coefficients B_{2k} / (2k (2k - 1)), k = 1..7.
const STIRLING: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
];

fn stirling_tail(z: f64) -> f64 {
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let mut acc = 0.0;
    for c in STIRLING.iter().rev() {
        acc = acc * inv2 + c;
    }
    acc * inv
}

/// `ln Γ(a + delta) - ln Γ(a)` for `a ≥ 1/2` and a small shift `delta`.
///
/// For large `a` the two log-gamma values are of order `a ln a` while their
/// difference is of order `ln a`; the Stirling form below never forms the
/// large intermediates.
pub fn ln_gamma_shift(a: f64, delta: f64) -> f64 {
    if delta == 0.0 {
        return 0.0;
    }
    if a < 8.0 || a + delta < 8.0 {
        return ln_gamma(a + delta) - ln_gamma(a);
    }
    let b = a + delta;
    (a - 0.5) * (delta / a).ln_1p() + delta * b.ln() - delta + (stirling_tail(b) - stirling_tail(a))
}

const LAMBERT_TOL: f64 = 1e-12;
const LAMBERT_MAX_ITER: usize = 50;

/// Principal branch of the Lambert W function on `[0, ∞)`: the `w ≥ 0`
/// with `w e^w = x`.
///
/// Halley iteration from `0.8 ln(1 + x)`.
pub fn lambert_w(x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::domain("lambert_w", format!("requires finite x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let mut w = 0.8 * x.ln_1p();
    for _ in 0..LAMBERT_MAX_ITER {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        w -= step;
        if step.abs() <= LAMBERT_TOL * (1.0 + w.abs()) {
            break;
        }
    }
    // one Newton polish: Halley stops a step early when the update is tiny
    let ew = w.exp();
    w -= (w * ew - x) / (ew * (w + 1.0));
    Ok(w.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    // Independent oracle: Stirling series with many terms, valid for large z.
    fn stirling_ln_gamma(z: f64) -> f64 {
        let b2k = [
            1.0 / 6.0,
            -1.0 / 30.0,
            1.0 / 42.0,
            -1.0 / 30.0,
            5.0 / 66.0,
            -691.0 / 2730.0,
            7.0 / 6.0,
            -3617.0 / 510.0,
        ];
        let mut s = (z - 0.5) * z.ln() - z + 0.5 * (2.0 * PI).ln();
        for (k, b) in b2k.iter().enumerate() {
            let k = (k + 1) as f64;
            s += b / (2.0 * k * (2.0 * k - 1.0) * z.powf(2.0 * k - 1.0));
        }
        s
    }

    #[test]
    fn ln_gamma_known_values() {
        assert!(ln_gamma(1.0).abs() < 1e-15);
        assert!(ln_gamma(2.0).abs() < 1e-15);
        assert!((ln_gamma(0.5) - 0.5 * PI.ln()).abs() < 1e-15);
        assert!((ln_gamma(1.5) - (0.5 * PI.ln() - 2f64.ln())).abs() < 1e-15);
        assert!((ln_gamma(6.0) - 120f64.ln()).abs() < 1e-13);
        assert!((ln_gamma(0.25) - 1.288_022_524_698_077_5).abs() < 1e-13);
    }

    #[test]
    fn ln_gamma_matches_stirling_for_large_arguments() {
        for &z in &[12.5, 20.0, 57.3, 250.5, 1000.0, 5000.5, 1e5] {
            let rel = (ln_gamma(z) - stirling_ln_gamma(z)).abs() / stirling_ln_gamma(z).abs();
            assert!(rel < 1e-14, "z={z} rel={rel}");
        }
    }

    #[test]
    fn ln_gamma_recurrence() {
        let mut x = 0.5;
        while x < 60.0 {
            let lhs = ln_gamma(x + 1.0) - ln_gamma(x);
            assert!((lhs - x.ln()).abs() < 1e-12 * (1.0 + x.ln().abs()), "x={x}");
            x += 0.37;
        }
    }

    #[test]
    fn shift_agrees_with_direct_difference() {
        for &a in &[0.5, 1.0, 3.7, 7.9, 8.0, 8.1, 15.0, 40.5, 120.0] {
            for &d in &[0.0, 0.1, 0.5, 0.77, 1.0] {
                let direct = ln_gamma(a + d) - ln_gamma(a);
                let shifted = ln_gamma_shift(a, d);
                assert!((direct - shifted).abs() < 1e-12, "a={a} d={d}");
            }
        }
    }

    #[test]
    fn shift_by_one_is_log() {
        for &a in &[8.5, 100.0, 12345.5, 1e7] {
            assert!((ln_gamma_shift(a, 1.0) - a.ln()).abs() < 1e-13 * a.ln());
        }
    }

    #[test]
    fn lambert_examples() {
        assert_eq!(lambert_w(0.0).unwrap(), 0.0);
        assert!((lambert_w(E).unwrap() - 1.0).abs() < 1e-14);
        let w = lambert_w(10.0).unwrap();
        assert!((w * w.exp() - 10.0).abs() < 1e-12 * 10.0);
        assert!((lambert_w(1.0).unwrap() - 0.567_143_290_409_783_8).abs() < 1e-14);
    }

    #[test]
    fn lambert_rejects_negative() {
        assert!(lambert_w(-0.1).is_err());
        assert!(lambert_w(f64::NAN).is_err());
    }
}
