//! Exhaustive support enumeration for small NNLS instances.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};

use super::{check_problem, nnls_kkt_violation, SolveResult};
use crate::error::{Error, Result};
use crate::linalg::{min_norm_lstsq, select_columns};

/// Largest column count `oracle_nnls` accepts (it visits `2ⁿ` supports).
pub const ORACLE_MAX_COLUMNS: usize = 20;

struct Candidate {
    x: DVector<f64>,
    residual: f64,
    norm: f64,
    support: Vec<usize>,
}

/// NNLS by trying every support.
///
/// Each support gets its minimum-norm least-squares fit; fits with a negative
/// coordinate are discarded. Among the rest the smallest residual wins, then
/// the smaller ℓ₂ norm, then the lexicographically smaller support.
pub fn oracle_nnls(a: &DMatrix<f64>, y: &DVector<f64>) -> Result<SolveResult> {
    check_problem(a, y)?;
    let n = a.ncols();
    if n > ORACLE_MAX_COLUMNS {
        return Err(Error::Refused(format!(
            "oracle enumerates 2^n supports; n = {n} exceeds {ORACLE_MAX_COLUMNS}"
        )));
    }
    let tie = 1e-12 * (1.0 + y.norm());
    let mut best: Option<Candidate> = None;
    for mask in 0u32..(1u32 << n) {
        let support: Vec<usize> = (0..n).filter(|&j| mask & (1 << j) != 0).collect();
        let mut x = DVector::zeros(n);
        if !support.is_empty() {
            let z = min_norm_lstsq(&select_columns(a, &support), y);
            if z.iter().any(|&v| v < -1e-12) {
                continue;
            }
            for (k, &j) in support.iter().enumerate() {
                x[j] = z[k].max(0.0);
            }
        }
        let residual = (y - a * &x).norm();
        let cand = Candidate { norm: x.norm(), x, residual, support };
        let better = match &best {
            None => true,
            Some(b) => compare(&cand, b, tie) == Ordering::Less,
        };
        if better {
            best = Some(cand);
        }
    }
    let best = best.expect("the empty support is always feasible");
    Ok(SolveResult {
        kkt_violation: nnls_kkt_violation(a, y, &best.x),
        x_hat: best.x.iter().copied().collect(),
        residual_norm: best.residual,
        iterations: 1 << n,
        converged: true,
    })
}

fn compare(c: &Candidate, b: &Candidate, tie: f64) -> Ordering {
    if c.residual < b.residual - tie {
        return Ordering::Less;
    }
    if c.residual > b.residual + tie {
        return Ordering::Greater;
    }
    let ntie = 1e-12 * (1.0 + b.norm);
    if c.norm < b.norm - ntie {
        return Ordering::Less;
    }
    if c.norm > b.norm + ntie {
        return Ordering::Greater;
    }
    c.support.cmp(&b.support)
}
