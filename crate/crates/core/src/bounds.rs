//! NNLS recovery error bounds and their empirical validation.

use serde::{Deserialize, Serialize};

use crate::ensembles::RecoveryInstance;
use crate::error::{dim, invalid, Error, Result};
use crate::linalg::lp_norm;
use crate::solvers::SolveResult;

/// `(C, D) = ((1+ρ)²/(1−ρ), (1+ρ)τ/(1−ρ))` for the robust NSP error estimate.
pub fn foucart_constants(rho: f64, tau: f64) -> Result<(f64, f64)> {
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(invalid(format!("rho must be non-negative, got {rho}")));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(invalid(format!("tau must be positive, got {tau}")));
    }
    if rho >= 1.0 {
        return Err(Error::Inapplicable(format!("requires rho < 1, got {rho}")));
    }
    Ok(((1.0 + rho).powi(2) / (1.0 - rho), (1.0 + rho) * tau / (1.0 - rho)))
}

/// Which `‖t‖₂` enters the noise term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauVariant {
    /// `‖t‖₂` as stated.
    #[default]
    Theorem,
    /// `‖t‖₂ / s^{1−1/q}`.
    Scaled,
}

/// Where τ came from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauSource {
    /// Supplied by the caller.
    #[default]
    Given,
    /// `1 / min ‖Av‖₂` over sampled cone members; optimistic, not certified.
    Probe,
    /// Reciprocal of a positive small-ball lower bound.
    Certified,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub rho: f64,
    pub tau: f64,
    pub kappa: f64,
    /// `‖W⁻¹‖ = 1 / min(w)`.
    pub w_inv_norm: f64,
    pub t_norm: f64,
    pub s: usize,
    pub p: f64,
    pub q: f64,
    /// `σ_s(x₀)₁`
    pub sigma_s1: f64,
    pub noise_norm: f64,
    #[serde(default)]
    pub variant: TauVariant,
    #[serde(default)]
    pub tau_source: TauSource,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub rho: f64,
    pub tau: f64,
    pub kappa: f64,
    pub s: usize,
    pub p: f64,
    pub q: f64,
    #[serde(rename = "C")]
    pub c: Option<f64>,
    #[serde(rename = "D")]
    pub d: Option<f64>,
    pub t_norm: f64,
    pub sigma_term: Option<f64>,
    pub noise_term: Option<f64>,
    pub total: Option<f64>,
    pub applicable: bool,
    pub variant: TauVariant,
    pub tau_source: TauSource,
}

impl BoundInputs {
    fn validate(&self) -> Result<()> {
        let finite = [self.rho, self.tau, self.kappa, self.w_inv_norm, self.t_norm, self.p, self.q, self.sigma_s1, self.noise_norm];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(invalid("bound inputs must be finite"));
        }
        if self.s == 0 {
            return Err(invalid("s must be at least 1"));
        }
        if !(self.p >= 1.0 && self.p <= self.q) {
            return Err(invalid(format!("need 1 <= p <= q, got p = {}, q = {}", self.p, self.q)));
        }
        if self.kappa < 1.0 {
            return Err(invalid(format!("kappa is at least 1, got {}", self.kappa)));
        }
        if self.w_inv_norm <= 0.0 || self.t_norm < 0.0 || self.sigma_s1 < 0.0 || self.noise_norm < 0.0 {
            return Err(invalid("norms must be non-negative (and ‖W⁻¹‖ positive)"));
        }
        Ok(())
    }

    fn applicable(&self) -> bool {
        self.rho > 0.0 && self.rho < 1.0 && self.kappa * self.rho < 1.0 && self.tau > 0.0
    }
}

/// Evaluates the bound; an unmet hypothesis yields `applicable = false`
/// with the constants left empty.
pub fn evaluate_bound(inputs: &BoundInputs) -> Result<BoundReport> {
    inputs.validate()?;
    let mut report = BoundReport {
        rho: inputs.rho,
        tau: inputs.tau,
        kappa: inputs.kappa,
        s: inputs.s,
        p: inputs.p,
        q: inputs.q,
        c: None,
        d: None,
        t_norm: inputs.t_norm,
        sigma_term: None,
        noise_term: None,
        total: None,
        applicable: inputs.applicable(),
        variant: inputs.variant,
        tau_source: inputs.tau_source,
    };
    if !report.applicable {
        return Ok(report);
    }
    let (kr, k) = (inputs.kappa * inputs.rho, inputs.kappa);
    let c = 2.0 * k * (1.0 + kr).powi(2) / (1.0 - kr);
    let d = 2.0 * (3.0 + kr) / (1.0 - kr) * k.max(inputs.w_inv_norm);
    let s = inputs.s as f64;
    let t_eff = match inputs.variant {
        TauVariant::Theorem => inputs.t_norm,
        TauVariant::Scaled => inputs.t_norm / s.powf(1.0 - 1.0 / inputs.q),
    };
    let sigma_term = c / s.powf(1.0 - 1.0 / inputs.p) * inputs.sigma_s1;
    let noise_term = d / s.powf(1.0 / inputs.q - 1.0 / inputs.p) * (t_eff + inputs.tau) * inputs.noise_norm;
    report.c = Some(c);
    report.d = Some(d);
    report.sigma_term = Some(sigma_term);
    report.noise_term = Some(noise_term);
    report.total = Some(sigma_term + noise_term);
    Ok(report)
}

/// Like [`evaluate_bound`] but an unmet hypothesis is an error.
pub fn nnls_bound(inputs: &BoundInputs) -> Result<BoundReport> {
    let report = evaluate_bound(inputs)?;
    if !report.applicable {
        return Err(Error::Inapplicable(format!(
            "the bound requires κρ < 1 with 0 < ρ < 1 and τ > 0; got κρ = {}, ρ = {}, τ = {}",
            inputs.kappa * inputs.rho,
            inputs.rho,
            inputs.tau
        )));
    }
    Ok(report)
}

/// Observed error against a bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub holds: bool,
    /// `‖x̂ − x₀‖_p`
    pub error: f64,
    pub total: f64,
    /// `total − error`
    pub margin: f64,
}

/// Compares `‖x̂ − x₀‖_p` with `report.total`.
pub fn validate_bound(instance: &RecoveryInstance, solve: &SolveResult, report: &BoundReport, p: f64) -> Result<BoundCheck> {
    let total = report
        .total
        .ok_or_else(|| Error::Inapplicable("bound report is not applicable (requires κρ < 1)".into()))?;
    if solve.x_hat.len() != instance.x0.len() {
        return Err(dim("solution and signal lengths differ"));
    }
    if !(p >= 1.0) {
        return Err(invalid(format!("p must be at least 1, got {p}")));
    }
    let diff: Vec<f64> = solve.x_hat.iter().zip(instance.x0.iter()).map(|(a, b)| a - b).collect();
    let error = lp_norm(&diff, p);
    Ok(BoundCheck { holds: error <= total, error, total, margin: total - error })
}
