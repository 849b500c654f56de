//! Monte Carlo experiments: NMSE against the number of measurements, the
//! width-versus-bias sweep and bound validation.

mod plot;
mod validation;
mod width;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use plot::{aggregate, aggregates_to_csv, emit_plot_data, read_records, render_svg, write_records, AggregateRow, PlotData};
pub use validation::{run_bound_validation, BoundTrial, BoundValidationSummary};
pub use width::{affine_fit, run_width_sweep, width_points_to_csv, AffineFit, WidthPoint, WidthSweepConfig};

use crate::ensembles::{
    generate_matrix, generate_noise, generate_signal, EnsembleKind, EnsembleSpec, RecoveryInstance, SignalKind, SignalSpec,
};
use crate::error::{invalid, Error, Result};
use crate::seeding::{child_seed, derive_seed};
use crate::solvers::{nmse, solve_bpdn, solve_nnls, SolverOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Nnls,
    Bpdn,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Nnls => "nnls",
            Algorithm::Bpdn => "bpdn",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nnls" => Ok(Algorithm::Nnls),
            "bpdn" => Ok(Algorithm::Bpdn),
            other => Err(invalid(format!("unknown algorithm `{other}`"))),
        }
    }
}

fn default_kind() -> EnsembleKind {
    EnsembleKind::Gaussian
}

/// Parameters of an NMSE sweep. Read from TOML with the field names as keys.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub s: usize,
    pub m_list: Vec<usize>,
    pub mu_list: Vec<f64>,
    pub signal_kind: SignalKind,
    pub noise_variance: f64,
    pub trials: usize,
    pub algorithms: Vec<Algorithm>,
    pub master_seed: u64,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
    #[serde(default = "default_kind")]
    pub ensemble: EnsembleKind,
}

impl ExperimentConfig {
    /// n = 100, s = 5, binary signals, σ² = 0.01, m ∈ {20, 25, …, 60, 70, 80},
    /// μ ∈ {0, 20}, both algorithms, 200 trials.
    pub fn study_defaults() -> Self {
        let mut m_list: Vec<usize> = (20..=60).step_by(5).collect();
        m_list.extend([70, 80]);
        Self {
            n: 100,
            s: 5,
            m_list,
            mu_list: vec![0.0, 20.0],
            signal_kind: SignalKind::Binary,
            noise_variance: 0.01,
            trials: 200,
            algorithms: vec![Algorithm::Nnls, Algorithm::Bpdn],
            master_seed: 0,
            output_path: None,
            ensemble: EnsembleKind::Gaussian,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("n must be positive"));
        }
        if self.s == 0 || self.s > self.n {
            return Err(invalid(format!("need 1 <= s <= n, got s = {}, n = {}", self.s, self.n)));
        }
        if self.m_list.is_empty() || self.m_list.contains(&0) {
            return Err(invalid("m_list must be non-empty with positive entries"));
        }
        if self.mu_list.is_empty() || self.mu_list.iter().any(|mu| !(mu.is_finite() && *mu >= 0.0)) {
            return Err(invalid("mu_list must be non-empty with finite non-negative entries"));
        }
        if !(self.noise_variance.is_finite() && self.noise_variance >= 0.0) {
            return Err(invalid("noise_variance must be finite and non-negative"));
        }
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if self.algorithms.is_empty() {
            return Err(invalid("algorithms must be non-empty"));
        }
        Ok(())
    }
}

/// One solved trial. Column order of the CSV output follows the fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub algorithm: Algorithm,
    pub mu: f64,
    pub m: usize,
    pub n: usize,
    pub s: usize,
    pub signal_kind: SignalKind,
    pub trial_index: usize,
    pub nmse: f64,
    pub residual: f64,
    pub noise_norm: f64,
    pub seed: u64,
    pub wall_time_ms: f64,
}

/// A trial whose solver returned an error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub algorithm: Algorithm,
    pub mu: f64,
    pub m: usize,
    pub trial_index: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutput {
    pub records: Vec<TrialRecord>,
    pub failures: Vec<TrialFailure>,
    pub aggregates: Vec<AggregateRow>,
}

/// Seed of trial `trial` at `m`. It does not depend on μ or the algorithm, so
/// every cell of a row of the sweep sees the same centered matrix, signal
/// and noise.
pub fn trial_seed(master: u64, m: usize, trial: usize) -> u64 {
    derive_seed(master, &[m as u64, trial as u64])
}

/// Builds the recovery instance of one trial.
pub fn build_instance(cfg: &ExperimentConfig, mu: f64, m: usize, seed: u64) -> Result<RecoveryInstance> {
    let a = generate_matrix(&EnsembleSpec::new(cfg.ensemble, mu, m, cfg.n, child_seed(seed, 0)))?;
    let x0 = generate_signal(&SignalSpec { kind: cfg.signal_kind, n: cfg.n, s: cfg.s, seed: child_seed(seed, 1) })?;
    let noise = generate_noise(m, cfg.noise_variance, child_seed(seed, 2))?;
    RecoveryInstance::new(a, x0, noise)
}

fn run_trial(
    cfg: &ExperimentConfig,
    algorithm: Algorithm,
    mu: f64,
    m: usize,
    trial: usize,
    opts: &SolverOptions,
) -> std::result::Result<TrialRecord, TrialFailure> {
    let seed = trial_seed(cfg.master_seed, m, trial);
    let fail = |e: Error| TrialFailure { algorithm, mu, m, trial_index: trial, seed, error: e.to_string() };
    let inst = build_instance(cfg, mu, m, seed).map_err(fail)?;
    let noise_norm = inst.noise.norm();
    let start = Instant::now();
    let result = match algorithm {
        Algorithm::Nnls => solve_nnls(&inst.a, &inst.y, opts),
        Algorithm::Bpdn => solve_bpdn(&inst.a, &inst.y, noise_norm, opts),
    }
    .map_err(fail)?;
    let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    let nmse = nmse(&result.x_hat_vector(), &inst.x0).map_err(fail)?;
    Ok(TrialRecord {
        algorithm,
        mu,
        m,
        n: cfg.n,
        s: cfg.s,
        signal_kind: cfg.signal_kind,
        trial_index: trial,
        nmse,
        residual: result.residual_norm,
        noise_norm,
        seed,
        wall_time_ms,
    })
}

/// Runs every (algorithm, μ, m, trial) cell.
///
/// Trials run in parallel; records come back in the canonical order
/// algorithm, μ, m, trial regardless of scheduling. Solver errors are
/// collected in `failures` and do not stop the sweep. `wall_time_ms` is the
/// only field that varies between identical runs.
pub fn run_nmse_experiment(cfg: &ExperimentConfig, opts: &SolverOptions) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let mut tasks = Vec::new();
    for &alg in &cfg.algorithms {
        for &mu in &cfg.mu_list {
            for &m in &cfg.m_list {
                for t in 0..cfg.trials {
                    tasks.push((alg, mu, m, t));
                }
            }
        }
    }
    let outcomes: Vec<_> = tasks
        .par_iter()
        .map(|&(alg, mu, m, t)| run_trial(cfg, alg, mu, m, t, opts))
        .collect();
    let mut records = Vec::with_capacity(outcomes.len());
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => records.push(r),
            Err(f) => failures.push(f),
        }
    }
    let aggregates = if records.is_empty() { Vec::new() } else { aggregate(&records)? };
    Ok(ExperimentOutput { records, failures, aggregates })
}
