//! Norm machinery: best s-term error, nullspace-property checks, the cone
//! `T_{ρ,s}^q` and suprema over sparse unit balls.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{dim, invalid, Result};
use crate::linalg::lp_norm;

/// Parameters of the ℓq robust nullspace property.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NspParams {
    pub s: usize,
    pub q: f64,
    pub rho: f64,
    pub tau: f64,
}

impl NspParams {
    pub fn validate(&self) -> Result<()> {
        if self.s == 0 {
            return Err(invalid("s must be at least 1"));
        }
        check_exponent(self.q, "q")?;
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(invalid(format!("rho must lie in (0, 1), got {}", self.rho)));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(invalid(format!("tau must be positive, got {}", self.tau)));
        }
        Ok(())
    }
}

/// Outcome of a pointwise NSP inequality check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NspCheck {
    pub holds: bool,
    /// Right-hand side minus left-hand side.
    pub slack: f64,
}

fn check_exponent(p: f64, name: &str) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(invalid(format!("{name} must be finite and at least 1, got {p}")));
    }
    Ok(())
}

/// Indices of the `s` largest magnitudes. Equal magnitudes prefer the lower index.
pub fn top_s_indices(v: &[f64], s: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[j].abs().total_cmp(&v[i].abs()).then(i.cmp(&j)));
    idx.truncate(s.min(v.len()));
    idx
}

/// Splits `v` into the entries on `support` and the rest.
fn split(v: &[f64], support: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let mut on = vec![false; v.len()];
    for &i in support {
        on[i] = true;
    }
    let inside = support.iter().map(|&i| v[i]).collect();
    let outside = (0..v.len()).filter(|&i| !on[i]).map(|i| v[i]).collect();
    (inside, outside)
}

/// `σ_s(x)_p`: ℓp norm of `x` with its `s` largest magnitudes removed.
pub fn best_s_term_error(x: &[f64], s: usize, p: f64) -> Result<f64> {
    check_exponent(p, "p")?;
    let (_, rest) = split(x, &top_s_indices(x, s));
    Ok(lp_norm(&rest, p))
}

/// Evaluates `‖v_S‖_q ≤ ρ/s^{1−1/q} ‖v_{Sᶜ}‖₁ + τ‖Av‖₂` on the given `support`.
pub fn nsp_inequality_holds(
    v: &DVector<f64>,
    support: &[usize],
    params: &NspParams,
    a: &DMatrix<f64>,
) -> Result<NspCheck> {
    params.validate()?;
    if support.len() > params.s {
        return Err(invalid(format!("|S| = {} exceeds s = {}", support.len(), params.s)));
    }
    if a.ncols() != v.len() {
        return Err(dim(format!("A has {} columns but v has length {}", a.ncols(), v.len())));
    }
    if support.iter().any(|&i| i >= v.len()) {
        return Err(invalid("support index out of range"));
    }
    let mut sorted = support.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != support.len() {
        return Err(invalid("support has repeated indices"));
    }
    let (inside, outside) = split(v.as_slice(), support);
    let lhs = lp_norm(&inside, params.q);
    let s = params.s as f64;
    let rhs = params.rho / s.powf(1.0 - 1.0 / params.q) * lp_norm(&outside, 1.0) + params.tau * (a * v).norm();
    Ok(NspCheck { holds: lhs <= rhs, slack: rhs - lhs })
}

/// Membership in `T_{ρ,s}^q` after rescaling `v` to unit ℓq norm.
///
/// The defining inequality is strict, so boundary points are outside.
pub fn in_cone_t(v: &[f64], s: usize, rho: f64, q: f64) -> bool {
    if s == 0 || v.iter().any(|x| !x.is_finite()) {
        return false;
    }
    let norm = lp_norm(v, q);
    if norm == 0.0 {
        return false;
    }
    let unit: Vec<f64> = v.iter().map(|x| x / norm).collect();
    let (head, tail) = split(&unit, &top_s_indices(&unit, s));
    lp_norm(&head, q) > rho / (s as f64).powf(1.0 - 1.0 / q) * lp_norm(&tail, 1.0)
}

/// Dual exponent `q*` with `1/q + 1/q* = 1` (`∞` at `q = 1`).
pub fn dual_exponent(q: f64) -> f64 {
    if q == 1.0 {
        f64::INFINITY
    } else {
        q / (q - 1.0)
    }
}

/// `sup ⟨h, u⟩` over `s`-sparse `u` with `‖u‖_q = 1`: the ℓ_{q*} norm of
/// the `s` largest magnitudes of `h`.
pub fn sup_sparse_inner_product(h: &[f64], s: usize, q: f64) -> Result<f64> {
    check_exponent(q, "q")?;
    if s == 0 || s > h.len() {
        return Err(invalid(format!("need 1 <= s <= n, got s = {s}, n = {}", h.len())));
    }
    let (head, _) = split(h, &top_s_indices(h, s));
    Ok(lp_norm(&head, dual_exponent(q)))
}

/// Checks `‖v_S‖_p ≤ s^{1/p−1/q} ‖v_S‖_q` on the top-`s` block of `v`.
pub fn norm_embedding_check(v: &[f64], s: usize, p: f64, q: f64) -> Result<bool> {
    check_exponent(p, "p")?;
    check_exponent(q, "q")?;
    if p > q {
        return Err(invalid(format!("need p <= q, got p = {p}, q = {q}")));
    }
    let (head, _) = split(v, &top_s_indices(v, s));
    let lhs = lp_norm(&head, p);
    let rhs = (s.max(1) as f64).powf(1.0 / p - 1.0 / q) * lp_norm(&head, q);
    Ok(lhs <= rhs * (1.0 + 1e-12))
}
