//! Gamma and Beta functions for positive real arguments.

use crate::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Gamma(x)` for `x > 0`.
pub fn lgamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - lgamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Remainder of Stirling's series for `ln Gamma(x)`, accurate for `x >= 10`.
fn stirling_correction(x: f64) -> f64 {
    let x2 = x * x;
    let x3 = x2 * x;
    let x5 = x3 * x2;
    let x7 = x5 * x2;
    let x9 = x7 * x2;
    1.0 / (12.0 * x) - 1.0 / (360.0 * x3) + 1.0 / (1260.0 * x5) - 1.0 / (1680.0 * x7)
        + 1.0 / (1188.0 * x9)
}

/// `ln Gamma(b) - ln Gamma(a + b)` for `b >= 10`, without cancellation.
fn lgamma_ratio(a: f64, b: f64) -> f64 {
    let s = a + b;
    -((b - 0.5) * (a / b).ln_1p() + a * s.ln() - a + stirling_correction(s)
        - stirling_correction(b))
}

/// `ln B(p, q)`.
pub fn ln_beta(p: f64, q: f64) -> Result<f64> {
    if !(p > 0.0 && q > 0.0 && p.is_finite() && q.is_finite()) {
        return Err(Error::Domain(format!(
            "Beta({p}, {q}) needs positive finite arguments"
        )));
    }
    let (small, large) = if p <= q { (p, q) } else { (q, p) };
    if large >= 10.0 {
        return Ok(lgamma(small) + lgamma_ratio(small, large));
    }
    Ok(lgamma(p) + lgamma(q) - lgamma(p + q))
}

/// `B(p, q) = int_0^1 t^(p-1) (1-t)^(q-1) dt`.
pub fn beta_fn(p: f64, q: f64) -> Result<f64> {
    Ok(ln_beta(p, q)?.exp())
}
