//! Recovery programs: non-negative least squares and basis pursuit denoising.

mod bpdn;
mod nnls;
mod oracle;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use bpdn::{bpdn_kkt_violation, solve_bpdn, solve_bpdn_from};
pub use nnls::{nnls_kkt_violation, solve_nnls};
pub use oracle::{oracle_nnls, ORACLE_MAX_COLUMNS};

use crate::error::{dim, invalid, Error, Result};

/// Outcome of a recovery solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub x_hat: Vec<f64>,
    /// `‖y − A x_hat‖₂`
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Largest scaled optimality-condition residual at `x_hat`.
    pub kkt_violation: f64,
}

impl SolveResult {
    pub fn x_hat_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.x_hat)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BpdnAlgorithm {
    /// Exact piecewise-linear ℓ₁ path, stopped where the residual meets η.
    #[default]
    Homotopy,
    /// Chambolle–Pock iterations on the cone-constrained form.
    PrimalDual,
}

impl fmt::Display for BpdnAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BpdnAlgorithm::Homotopy => "homotopy",
            BpdnAlgorithm::PrimalDual => "primal-dual",
        })
    }
}

impl FromStr for BpdnAlgorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "homotopy" => Ok(BpdnAlgorithm::Homotopy),
            "primal-dual" | "primal_dual" | "pd" => Ok(BpdnAlgorithm::PrimalDual),
            other => Err(invalid(format!("unknown BPDN algorithm `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    /// Outer iteration budget; `None` selects the per-algorithm default
    /// (`10 n` for NNLS, `10⁵` for BPDN).
    pub max_iterations: Option<usize>,
    /// Target for the scaled optimality residual.
    pub tolerance: f64,
    /// Return the minimum ℓ₂-norm point when the NNLS minimizer is not unique.
    pub min_norm: bool,
    pub bpdn_algorithm: BpdnAlgorithm,
    /// Ratio σ/τ of the primal-dual step sizes (their product is fixed by ‖A‖).
    pub primal_dual_step_ratio: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: None,
            tolerance: 1e-9,
            min_norm: true,
            bpdn_algorithm: BpdnAlgorithm::Homotopy,
            primal_dual_step_ratio: 1.0,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(invalid(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if !(self.primal_dual_step_ratio > 0.0 && self.primal_dual_step_ratio.is_finite()) {
            return Err(invalid("primal-dual step ratio must be positive"));
        }
        Ok(())
    }
}

/// `‖x_hat − x0‖₂ / ‖x0‖₂`
pub fn nmse(x_hat: &DVector<f64>, x0: &DVector<f64>) -> Result<f64> {
    if x_hat.len() != x0.len() {
        return Err(dim(format!("lengths differ: {} vs {}", x_hat.len(), x0.len())));
    }
    let denom = x0.norm();
    if denom == 0.0 {
        return Err(invalid("NMSE is undefined for x0 = 0"));
    }
    Ok((x_hat - x0).norm() / denom)
}

fn check_problem(a: &DMatrix<f64>, y: &DVector<f64>) -> Result<()> {
    if a.nrows() != y.len() {
        return Err(dim(format!("A is {}x{} but y has length {}", a.nrows(), a.ncols(), y.len())));
    }
    if a.ncols() == 0 || a.nrows() == 0 {
        return Err(dim("A must be non-empty"));
    }
    if a.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidData("A and y must be finite".into()));
    }
    Ok(())
}
