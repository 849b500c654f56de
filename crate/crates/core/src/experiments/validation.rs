//! Checks the NNLS error bound on the trials of an NMSE sweep.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{build_instance, trial_seed, ExperimentConfig};
use crate::bounds::{nnls_bound, validate_bound, BoundInputs, TauSource, TauVariant};
use crate::certificates::{certify_mplus_biased, debiased_plugin_bound, empirical_nsp_probe};
use crate::error::{invalid, Result};
use crate::geometry::best_s_term_error;
use crate::seeding::child_seed;
use crate::solvers::{solve_nnls, SolverOptions};

/// One biased NNLS trial with both τ paths evaluated where available.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundTrial {
    pub mu: f64,
    pub m: usize,
    pub trial_index: usize,
    pub seed: u64,
    pub cert_valid: bool,
    pub kappa_upper: Option<f64>,
    pub probe_tau: Option<f64>,
    pub certified_tau: Option<f64>,
    /// `‖x̂ − x₀‖₂`
    pub error: f64,
    pub probe_total: Option<f64>,
    pub probe_holds: Option<bool>,
    pub certified_total: Option<f64>,
    pub certified_holds: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundValidationSummary {
    pub trials: Vec<BoundTrial>,
    pub probe_checked: usize,
    pub probe_violations: usize,
    pub certified_checked: usize,
    pub certified_violations: usize,
}

/// Re-runs the biased (μ > 0) NNLS trials of `cfg` and compares the error
/// with the bound at `p = q = 2`.
///
/// The certificate is the biased witness `t = 1/(mμ)·1`. τ comes from
/// `empirical_nsp_probe` with `probe_trials` samples and, when the paired-row
/// plug-in bound is positive at this `m`, from its reciprocal as well.
pub fn run_bound_validation(
    cfg: &ExperimentConfig,
    opts: &SolverOptions,
    rho: f64,
    probe_trials: usize,
) -> Result<BoundValidationSummary> {
    cfg.validate()?;
    if !(rho > 0.0 && rho < 1.0) {
        return Err(invalid(format!("rho must lie in (0, 1), got {rho}")));
    }
    let mut tasks = Vec::new();
    for &mu in cfg.mu_list.iter().filter(|&&mu| mu > 0.0) {
        for &m in &cfg.m_list {
            for t in 0..cfg.trials {
                tasks.push((mu, m, t));
            }
        }
    }
    let trials: Vec<BoundTrial> = tasks
        .par_iter()
        .map(|&(mu, m, t)| one_trial(cfg, opts, rho, probe_trials, mu, m, t))
        .collect::<Result<_>>()?;

    let count = |f: &dyn Fn(&BoundTrial) -> Option<bool>| {
        let checked = trials.iter().filter(|t| f(t).is_some()).count();
        let violated = trials.iter().filter(|t| f(t) == Some(false)).count();
        (checked, violated)
    };
    let (probe_checked, probe_violations) = count(&|t| t.probe_holds);
    let (certified_checked, certified_violations) = count(&|t| t.certified_holds);
    Ok(BoundValidationSummary { trials, probe_checked, probe_violations, certified_checked, certified_violations })
}

fn one_trial(
    cfg: &ExperimentConfig,
    opts: &SolverOptions,
    rho: f64,
    probe_trials: usize,
    mu: f64,
    m: usize,
    t: usize,
) -> Result<BoundTrial> {
    let seed = trial_seed(cfg.master_seed, m, t);
    let inst = build_instance(cfg, mu, m, seed)?;
    let solve = solve_nnls(&inst.a, &inst.y, opts)?;
    let error = (solve.x_hat_vector() - &inst.x0).norm();
    let cert = certify_mplus_biased(&inst.a, mu)?;
    let probe = empirical_nsp_probe(&inst.a, cfg.s, rho, 2.0, probe_trials, child_seed(seed, 3))?;
    let plugin = debiased_plugin_bound(m, cfg.s, cfg.n, 2.0, rho)?;
    let certified_tau = (plugin > 0.0).then(|| 1.0 / plugin);

    let mut out = BoundTrial {
        mu,
        m,
        trial_index: t,
        seed,
        cert_valid: cert.valid,
        kappa_upper: cert.kappa_upper,
        probe_tau: probe.tau,
        certified_tau,
        error,
        probe_total: None,
        probe_holds: None,
        certified_total: None,
        certified_holds: None,
    };
    let (Some(kappa), Some(w_inv)) = (cert.kappa_upper, cert.w_inv_norm()) else {
        return Ok(out);
    };
    let base = BoundInputs {
        rho,
        tau: 1.0,
        kappa,
        w_inv_norm: w_inv,
        t_norm: cert.t_norm,
        s: cfg.s,
        p: 2.0,
        q: 2.0,
        sigma_s1: best_s_term_error(inst.x0.as_slice(), cfg.s, 1.0)?,
        noise_norm: inst.noise.norm(),
        variant: TauVariant::Theorem,
        tau_source: TauSource::Given,
    };
    let check = |tau: f64, source: TauSource| -> Result<Option<(f64, bool)>> {
        match nnls_bound(&BoundInputs { tau, tau_source: source, ..base.clone() }) {
            Ok(report) => {
                let c = validate_bound(&inst, &solve, &report, 2.0)?;
                Ok(Some((c.total, c.holds)))
            }
            Err(crate::Error::Inapplicable(_)) => Ok(None),
            Err(e) => Err(e),
        }
    };
    if let Some(tau) = probe.tau {
        if let Some((total, holds)) = check(tau, TauSource::Probe)? {
            out.probe_total = Some(total);
            out.probe_holds = Some(holds);
        }
    }
    if let Some(tau) = certified_tau {
        if let Some((total, holds)) = check(tau, TauSource::Certified)? {
            out.certified_total = Some(total);
            out.certified_holds = Some(holds);
        }
    }
    Ok(out)
}
