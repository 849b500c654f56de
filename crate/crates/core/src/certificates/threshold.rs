//! Closed-form sample-complexity thresholds.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::smallball::log_en_s;
use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdKind {
    /// `(2·384²/ρ²) s^{2−2/q} (2 + √log(en/s))² + 1`, free of μ.
    Debiased,
    /// `(6·24√2/ρ)² 2s (√log(en/s) + μ)²` from the biased small-ball bound.
    NaiveBiased,
}

impl fmt::Display for ThresholdKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ThresholdKind::Debiased => "debiased",
            ThresholdKind::NaiveBiased => "naive_biased",
        })
    }
}

impl FromStr for ThresholdKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "debiased" => Ok(ThresholdKind::Debiased),
            "naive_biased" | "naive-biased" | "naive" => Ok(ThresholdKind::NaiveBiased),
            other => Err(invalid(format!("unknown threshold kind `{other}`"))),
        }
    }
}

/// Real-valued right-hand side of the threshold.
///
/// `rho` may equal 1 so that the formulas can be evaluated at their
/// normalizing point; `q` must be at least 2 and is ignored by the naive
/// form, which is stated for `q = 2`.
pub fn threshold_value(kind: ThresholdKind, s: usize, n: usize, q: f64, rho: f64, mu: f64) -> Result<f64> {
    if s == 0 || s > n {
        return Err(invalid(format!("need 1 <= s <= n, got s = {s}, n = {n}")));
    }
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(invalid(format!("rho must lie in (0, 1], got {rho}")));
    }
    if !(q >= 2.0 && q.is_finite()) {
        return Err(invalid(format!("q must be finite and at least 2, got {q}")));
    }
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(invalid(format!("mu must be finite and non-negative, got {mu}")));
    }
    let l = log_en_s(s, n);
    let sf = s as f64;
    Ok(match kind {
        ThresholdKind::Debiased => {
            2.0 * 384.0 * 384.0 / (rho * rho) * sf.powf(2.0 - 2.0 / q) * (2.0 + l.sqrt()).powi(2) + 1.0
        }
        ThresholdKind::NaiveBiased => {
            // (6·24√2/ρ)² · 2s with the √2 squared out, so integer-valued
            // inputs stay exact.
            let c = 6.0 * 24.0;
            c * c * 2.0 * 2.0 * sf / (rho * rho) * (l.sqrt() + mu).powi(2)
        }
    })
}

/// Smallest integer `m` satisfying the threshold.
pub fn sample_complexity(kind: ThresholdKind, s: usize, n: usize, q: f64, rho: f64, mu: f64) -> Result<u64> {
    let v = threshold_value(kind, s, n, q, rho, mu)?;
    if v >= u64::MAX as f64 {
        return Err(invalid("threshold exceeds the representable range"));
    }
    Ok(v.ceil() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizing_point() {
        assert_eq!(sample_complexity(ThresholdKind::Debiased, 1, 1, 2.0, 1.0, 0.0).unwrap(), 2_654_209);
    }

    #[test]
    fn naive_grows_with_mu_debiased_does_not() {
        let d0 = sample_complexity(ThresholdKind::Debiased, 5, 100, 2.0, 0.5, 0.0).unwrap();
        let d20 = sample_complexity(ThresholdKind::Debiased, 5, 100, 2.0, 0.5, 20.0).unwrap();
        assert_eq!(d0, d20);
        let n0 = sample_complexity(ThresholdKind::NaiveBiased, 5, 100, 2.0, 0.5, 0.0).unwrap();
        let n20 = sample_complexity(ThresholdKind::NaiveBiased, 5, 100, 2.0, 0.5, 20.0).unwrap();
        assert!(n20 > n0);
    }

    #[test]
    fn debiased_monotone_in_s() {
        let n = 1000;
        let mut last = 0;
        for s in 1..=n {
            let m = sample_complexity(ThresholdKind::Debiased, s, n, 2.0, 0.5, 0.0).unwrap();
            assert!(m >= last, "s = {s}");
            last = m;
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(sample_complexity(ThresholdKind::Debiased, 1, 10, 2.0, 0.0, 0.0).is_err());
        assert!(sample_complexity(ThresholdKind::Debiased, 1, 10, 2.0, 1.5, 0.0).is_err());
        assert!(sample_complexity(ThresholdKind::Debiased, 11, 10, 2.0, 0.5, 0.0).is_err());
        assert!(sample_complexity(ThresholdKind::Debiased, 1, 10, 1.5, 0.5, 0.0).is_err());
    }
}
