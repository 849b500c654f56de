//! Lawson–Hanson active-set NNLS.

use nalgebra::{DMatrix, DVector};

use super::{check_problem, SolveResult, SolverOptions};
use crate::error::Result;
use crate::linalg::{min_norm_lstsq, null_space, select_columns};

/// Solves `min ‖y − A x‖₂` subject to `x ≥ 0`.
///
/// Active-set iterations (Lawson–Hanson). Least-squares subproblems use the
/// minimum-norm SVD solution, so dependent columns are tolerated. A column
/// whose first subproblem does not give it a positive coefficient is not
/// admitted in that outer step, which rules out cycling on degenerate
/// problems.
///
/// With `opts.min_norm` the returned point is the minimum ℓ₂-norm element of
/// the (convex) solution set. The fitted value `A x` is unique, so that set
/// is `{x ≥ 0 : A x = A x_hat}`; its least-norm point is found by a
/// least-distance program.
pub fn solve_nnls(a: &DMatrix<f64>, y: &DVector<f64>, opts: &SolverOptions) -> Result<SolveResult> {
    check_problem(a, y)?;
    opts.validate()?;
    let n = a.ncols();
    let max_outer = opts.max_iterations.unwrap_or(10 * n);

    let (mut x, iterations, converged) = lawson_hanson(a, y, opts.tolerance, max_outer);

    if opts.min_norm && converged {
        if let Some(canonical) = least_norm_solution(a, &x, opts.tolerance) {
            let r_old = (y - a * &x).norm();
            let r_new = (y - a * &canonical).norm();
            let slack = 1e-12 * (1.0 + y.norm());
            if r_new <= r_old + slack && canonical.norm() < x.norm() - 1e-13 * (1.0 + x.norm()) {
                x = canonical;
            }
        }
    }

    let residual_norm = (y - a * &x).norm();
    let kkt_violation = nnls_kkt_violation(a, y, &x);
    Ok(SolveResult {
        x_hat: x.iter().copied().collect(),
        residual_norm,
        iterations,
        converged: converged && kkt_violation <= opts.tolerance.max(1e-9),
        kkt_violation,
    })
}

/// Scaled KKT residual of the NNLS program at `x`.
///
/// With `g = Aᵀ(A x − y)` this is
/// `max_i max(−g_i, |g_i| x_i / (1 + ‖x‖∞), −x_i) / (1 + ‖Aᵀ y‖∞)`.
pub fn nnls_kkt_violation(a: &DMatrix<f64>, y: &DVector<f64>, x: &DVector<f64>) -> f64 {
    let g = a.tr_mul(&(a * x - y));
    let scale = 1.0 + a.tr_mul(y).amax();
    let xscale = 1.0 + x.amax();
    let mut worst = 0.0f64;
    for (gi, xi) in g.iter().zip(x.iter()) {
        worst = worst.max(-gi).max(gi.abs() * xi.max(0.0) / xscale).max(-xi);
    }
    worst / scale
}

/// Returns `(x, outer_iterations, converged)`.
pub(crate) fn lawson_hanson(
    a: &DMatrix<f64>,
    y: &DVector<f64>,
    tolerance: f64,
    max_outer: usize,
) -> (DVector<f64>, usize, bool) {
    let n = a.ncols();
    let dual_tol = tolerance * (1.0 + a.tr_mul(y).amax());
    let inner_cap = n + 1;

    let mut x = DVector::<f64>::zeros(n);
    let mut passive = vec![false; n];
    let mut refused = vec![false; n];
    let mut outer = 0;

    loop {
        // w = Aᵀ (y − A x) is the negative gradient.
        let w = a.tr_mul(&(y - a * &x));
        let candidate = (0..n)
            .filter(|&j| !passive[j] && !refused[j] && w[j] > dual_tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = candidate else {
            return (x, outer, true);
        };
        if outer >= max_outer {
            return (x, outer, false);
        }
        outer += 1;
        passive[j] = true;

        let mut first = true;
        let mut inner = 0;
        loop {
            let cols: Vec<usize> = (0..n).filter(|&i| passive[i]).collect();
            let z_p = min_norm_lstsq(&select_columns(a, &cols), y);
            if first {
                let pos = cols.iter().position(|&c| c == j).expect("j is passive");
                if z_p[pos] <= 0.0 {
                    // No strict improvement along column j.
                    passive[j] = false;
                    refused[j] = true;
                    break;
                }
                first = false;
            }
            if z_p.iter().all(|&v| v > 0.0) {
                x.fill(0.0);
                for (k, &c) in cols.iter().enumerate() {
                    x[c] = z_p[k];
                }
                refused.iter_mut().for_each(|r| *r = false);
                break;
            }
            // Step towards z until the first passive coefficient hits zero.
            let mut alpha = f64::INFINITY;
            for (k, &c) in cols.iter().enumerate() {
                if z_p[k] <= 0.0 {
                    let denom = x[c] - z_p[k];
                    let ratio = if denom > 0.0 { x[c] / denom } else { 0.0 };
                    alpha = alpha.min(ratio);
                }
            }
            let alpha = alpha.clamp(0.0, 1.0);
            for (k, &c) in cols.iter().enumerate() {
                x[c] += alpha * (z_p[k] - x[c]);
            }
            let xmax = x.amax();
            for &c in &cols {
                if x[c] <= 1e-15 * xmax {
                    x[c] = 0.0;
                    passive[c] = false;
                }
            }
            inner += 1;
            if inner > inner_cap {
                refused.iter_mut().for_each(|r| *r = false);
                break;
            }
        }
    }
}

/// Least-norm point of `{x ≥ 0 : A x = A x_hat}`.
///
/// Writes `x = x_p + N z` with `x_p = A⁺ A x_hat` and `N` an orthonormal
/// null-space basis, then solves the least-distance program
/// `min ‖z‖ s.t. N z ≥ −x_p` through its NNLS dual.
fn least_norm_solution(a: &DMatrix<f64>, x_hat: &DVector<f64>, tolerance: f64) -> Option<DVector<f64>> {
    let basis = null_space(a);
    let k = basis.ncols();
    if k == 0 {
        return None;
    }
    let n = a.ncols();
    let fitted = a * x_hat;
    let x_p = min_norm_lstsq(a, &fitted);
    if x_p.iter().all(|&v| v >= 0.0) {
        return Some(x_p);
    }
    // Least-distance program: min ‖z‖ s.t. G z ≥ h with G = N, h = −x_p.
    // Dual: NNLS on E = [Gᵀ; hᵀ], f = e_{k+1}.
    let mut e = DMatrix::zeros(k + 1, n);
    e.view_mut((0, 0), (k, n)).copy_from(&basis.transpose());
    for i in 0..n {
        e[(k, i)] = -x_p[i];
    }
    let mut f = DVector::zeros(k + 1);
    f[k] = 1.0;
    let (u, _, ok) = lawson_hanson(&e, &f, tolerance, 10 * n);
    if !ok {
        return None;
    }
    let r = &e * &u - &f;
    if r.norm() <= 1e-14 || r[k].abs() <= f64::MIN_POSITIVE {
        return None;
    }
    let z = DVector::from_fn(k, |i, _| -r[i] / r[k]);
    let x = (x_p + &basis * z).map(|v| v.max(0.0));
    Some(x)
}
