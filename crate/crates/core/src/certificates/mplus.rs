//! The M⁺ criterion `∃ t : Aᵀt > 0` and the condition number κ.

use minilp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Witness `t` together with `w = Aᵀt` and the κ upper bound it implies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MPlusCertificate {
    pub t: Vec<f64>,
    pub w: Vec<f64>,
    /// `max(w) / min(w)`; present only when `valid`.
    pub kappa_upper: Option<f64>,
    pub valid: bool,
    pub t_norm: f64,
    /// Hoeffding lower bound on the probability that the biased witness is
    /// valid. Absent for witnesses found by the linear program.
    pub prob_bound: Option<f64>,
}

impl MPlusCertificate {
    /// `‖W⁻¹‖ = 1 / min(w)` when the certificate is valid.
    pub fn w_inv_norm(&self) -> Option<f64> {
        self.valid.then(|| 1.0 / self.w.iter().copied().fold(f64::INFINITY, f64::min))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MPlusStatus {
    Feasible,
    Infeasible,
    Indeterminate,
}

/// Decision on `A ∈ M⁺` with a certificate for either answer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MPlusFeasibility {
    pub status: MPlusStatus,
    /// Optimal margin `δ` of `max δ s.t. Aᵀt ≥ δ1, ‖t‖∞ ≤ 1`.
    pub margin: f64,
    /// `t` with `Aᵀt > 0` when feasible.
    pub witness: Option<Vec<f64>>,
    /// `x ≥ 0`, `Σx = 1`, `A x = 0` when infeasible (Gordan's alternative).
    pub refutation: Option<Vec<f64>>,
}

impl MPlusFeasibility {
    pub fn is_feasible(&self) -> bool {
        self.status == MPlusStatus::Feasible
    }
}

fn check_matrix(a: &DMatrix<f64>) -> Result<()> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(crate::error::dim("matrix must be non-empty"));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidData("matrix entries must be finite".into()));
    }
    Ok(())
}

/// Decides whether the row span of `A` meets the open positive orthant.
///
/// Solves `max δ s.t. Aᵀt ≥ δ1, ‖t‖∞ ≤ 1`. A margin above `tol·(1 + max|A|)`
/// with a directly verified witness answers yes. Otherwise the alternative
/// system `A x = 0, x ≥ 0, Σx = 1` is solved; a solution answers no.
/// Anything else is reported as indeterminate.
pub fn mplus_feasible(a: &DMatrix<f64>, tol: f64) -> Result<MPlusFeasibility> {
    check_matrix(a)?;
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    let (m, n) = a.shape();
    let scale = 1.0 + a.amax();

    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let t: Vec<_> = (0..m).map(|_| lp.add_var(0.0, (-1.0, 1.0))).collect();
    let delta = lp.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
    for j in 0..n {
        let mut expr = LinearExpr::empty();
        for (i, &ti) in t.iter().enumerate() {
            if a[(i, j)] != 0.0 {
                expr.add(ti, a[(i, j)]);
            }
        }
        expr.add(delta, -1.0);
        lp.add_constraint(expr, ComparisonOp::Ge, 0.0);
    }
    let sol = lp
        .solve()
        .map_err(|e| Error::Indeterminate(format!("margin LP failed: {e}")))?;
    let margin = sol[delta];
    let witness: Vec<f64> = t.iter().map(|&v| sol[v]).collect();

    if margin > tol * scale {
        let w = a.tr_mul(&DVector::from_column_slice(&witness));
        if w.iter().all(|&v| v > 0.0) {
            return Ok(MPlusFeasibility {
                status: MPlusStatus::Feasible,
                margin,
                witness: Some(witness),
                refutation: None,
            });
        }
        return Ok(MPlusFeasibility { status: MPlusStatus::Indeterminate, margin, witness: None, refutation: None });
    }

    // Alternative: a probability vector in the null space of A.
    let mut alt = Problem::new(OptimizationDirection::Minimize);
    let x: Vec<_> = (0..n).map(|_| alt.add_var(0.0, (0.0, f64::INFINITY))).collect();
    for i in 0..m {
        let mut expr = LinearExpr::empty();
        for (j, &xj) in x.iter().enumerate() {
            if a[(i, j)] != 0.0 {
                expr.add(xj, a[(i, j)]);
            }
        }
        alt.add_constraint(expr, ComparisonOp::Eq, 0.0);
    }
    let mut total = LinearExpr::empty();
    for &xj in &x {
        total.add(xj, 1.0);
    }
    alt.add_constraint(total, ComparisonOp::Eq, 1.0);
    match alt.solve() {
        Ok(sol) => {
            let refutation: Vec<f64> = x.iter().map(|&v| sol[v].max(0.0)).collect();
            let ax = a * DVector::from_column_slice(&refutation);
            if ax.amax() <= 1e-7 * scale {
                Ok(MPlusFeasibility { status: MPlusStatus::Infeasible, margin, witness: None, refutation: Some(refutation) })
            } else {
                Ok(MPlusFeasibility { status: MPlusStatus::Indeterminate, margin, witness: None, refutation: None })
            }
        }
        Err(_) => Ok(MPlusFeasibility { status: MPlusStatus::Indeterminate, margin, witness: None, refutation: None }),
    }
}

/// Builds the certificate implied by a given witness `t`.
pub fn certificate_from_witness(a: &DMatrix<f64>, t: &[f64]) -> Result<MPlusCertificate> {
    check_matrix(a)?;
    if t.len() != a.nrows() {
        return Err(crate::error::dim(format!("witness has length {}, A has {} rows", t.len(), a.nrows())));
    }
    let tv = DVector::from_column_slice(t);
    let w = a.tr_mul(&tv);
    let wmin = w.min();
    let wmax = w.max();
    let valid = wmin > 0.0;
    Ok(MPlusCertificate {
        t: t.to_vec(),
        w: w.iter().copied().collect(),
        kappa_upper: valid.then(|| wmax / wmin),
        valid,
        t_norm: tv.norm(),
        prob_bound: None,
    })
}

/// `max(0, 1 − 2n exp(−μ²m/16))`
pub fn hoeffding_probability(n: usize, m: usize, mu: f64) -> f64 {
    (1.0 - 2.0 * n as f64 * (-mu * mu * m as f64 / 16.0).exp()).clamp(0.0, 1.0)
}

/// Certificate from the witness `t = 1/(mμ) · 1`.
pub fn certify_mplus_biased(a: &DMatrix<f64>, mu: f64) -> Result<MPlusCertificate> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(invalid(format!("mu must be positive, got {mu}")));
    }
    let (m, n) = a.shape();
    let t = vec![1.0 / (m as f64 * mu); m];
    let mut cert = certificate_from_witness(a, &t)?;
    cert.t_norm = 1.0 / ((m as f64).sqrt() * mu);
    cert.prob_bound = Some(hoeffding_probability(n, m, mu));
    Ok(cert)
}
