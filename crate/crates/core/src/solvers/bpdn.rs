//! Basis pursuit denoising: `min ‖x‖₁ s.t. ‖y − A x‖₂ ≤ η`.

use nalgebra::{DMatrix, DVector};

use super::nnls::lawson_hanson;
use super::{check_problem, BpdnAlgorithm, SolveResult, SolverOptions};
use crate::error::{invalid, Error, Result};
use crate::linalg::{min_norm_lstsq, select_columns, singular_values, svd, RANK_RTOL};

const DEFAULT_MAX_ITERATIONS: usize = 100_000;

/// Solves BPDN with the algorithm selected in `opts`.
///
/// The homotopy follows the ℓ₁-penalized path from `x = 0` down to the
/// penalty at which the residual norm equals `η`. The primal-dual method is
/// slower and mainly serves as an independent check.
pub fn solve_bpdn(a: &DMatrix<f64>, y: &DVector<f64>, eta: f64, opts: &SolverOptions) -> Result<SolveResult> {
    check_bpdn(a, y, eta, opts)?;
    if y.norm() <= eta {
        return Ok(finish(a, y, eta, DVector::zeros(a.ncols()), 0, true, opts));
    }
    match opts.bpdn_algorithm {
        BpdnAlgorithm::Homotopy => homotopy(a, y, eta, opts),
        BpdnAlgorithm::PrimalDual => primal_dual(a, y, eta, opts, DVector::zeros(a.ncols())),
    }
}

/// Primal-dual BPDN started from `start` (ignores `opts.bpdn_algorithm`).
pub fn solve_bpdn_from(
    a: &DMatrix<f64>,
    y: &DVector<f64>,
    eta: f64,
    opts: &SolverOptions,
    start: &DVector<f64>,
) -> Result<SolveResult> {
    check_bpdn(a, y, eta, opts)?;
    if start.len() != a.ncols() {
        return Err(crate::error::dim("start point has the wrong length"));
    }
    if y.norm() <= eta {
        return Ok(finish(a, y, eta, DVector::zeros(a.ncols()), 0, true, opts));
    }
    primal_dual(a, y, eta, opts, start.clone())
}

/// First-order optimality residual of BPDN at `x`.
///
/// For `x ≠ 0` the conditions are `‖r‖ = η` and `Aᵀr = λ sign(x)` on the
/// support with `λ = ‖Aᵀr‖∞`; for `x = 0` they reduce to `‖y‖ ≤ η`.
/// Coordinates below `10⁻⁶ ‖x‖∞` are not held to the sign condition, and
/// neither is any coordinate when `λ` vanishes relative to `‖Aᵀy‖∞`.
pub fn bpdn_kkt_violation(a: &DMatrix<f64>, y: &DVector<f64>, eta: f64, x: &DVector<f64>) -> f64 {
    let r = y - a * x;
    let rn = r.norm();
    let xmax = x.amax();
    if xmax == 0.0 {
        return (rn - eta).max(0.0) / (1.0 + y.norm());
    }
    let c = a.tr_mul(&r);
    let lambda = c.amax();
    let mut worst = (rn - eta).abs() / (1.0 + eta);
    if lambda <= 1e-10 * (1.0 + a.tr_mul(y).amax()) {
        // Least-squares point: the sign conditions carry no information.
        return worst;
    }
    for (ci, xi) in c.iter().zip(x.iter()) {
        if xi.abs() > 1e-6 * xmax {
            worst = worst.max((ci / lambda - xi.signum()).abs());
        }
    }
    worst
}

fn check_bpdn(a: &DMatrix<f64>, y: &DVector<f64>, eta: f64, opts: &SolverOptions) -> Result<()> {
    check_problem(a, y)?;
    opts.validate()?;
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(invalid(format!("eta must be finite and non-negative, got {eta}")));
    }
    Ok(())
}

fn finish(
    a: &DMatrix<f64>,
    y: &DVector<f64>,
    eta: f64,
    x: DVector<f64>,
    iterations: usize,
    converged: bool,
    opts: &SolverOptions,
) -> SolveResult {
    let residual_norm = (y - a * &x).norm();
    let kkt_violation = bpdn_kkt_violation(a, y, eta, &x);
    let feasible = residual_norm <= eta + opts.tolerance * (eta + y.norm());
    SolveResult {
        x_hat: x.iter().copied().collect(),
        residual_norm,
        iterations,
        converged: converged && feasible,
        kkt_violation,
    }
}

/// `(A_Sᵀ A_S)⁺ s` through the SVD of `A_S`.
fn gram_solve(a_s: &DMatrix<f64>, s: &DVector<f64>) -> DVector<f64> {
    let svd = svd(a_s);
    let v_t = svd.v_t;
    let smax = svd.singular_values.max();
    let mut d = DVector::zeros(s.len());
    for (k, &sv) in svd.singular_values.iter().enumerate() {
        if sv > RANK_RTOL * smax {
            let row = v_t.row(k).transpose();
            d.axpy(row.dot(s) / (sv * sv), &row, 1.0);
        }
    }
    d
}

/// Direction of the penalized path on the equicorrelation set `set`.
///
/// With `B = A_E diag(s)` and `w = r/λ` (so `Bᵀw = 1`), the direction
/// minimizes `‖B d − w‖` with `d ≥ 0` on coordinates currently at zero and
/// free elsewhere. The plain Gram solve is tried first; the sign-constrained
/// problem goes through Lawson–Hanson with free coordinates split in two.
fn path_direction(
    a: &DMatrix<f64>,
    r: &DVector<f64>,
    lambda: f64,
    set: &[usize],
    signs: &[f64],
    free: &[bool],
) -> DVector<f64> {
    let a_e = select_columns(a, set);
    let s = DVector::from_column_slice(signs);
    let d = gram_solve(&a_e, &s);
    let g_d = a_e.tr_mul(&(&a_e * &d));
    let fits = (&g_d - &s).amax() <= 1e-9;
    let signs_ok = d.iter().zip(signs).zip(free).all(|((v, sg), &f)| f || v * sg >= 0.0);
    if fits && signs_ok {
        return d;
    }
    let mut cols = Vec::with_capacity(2 * set.len());
    let mut owner = Vec::with_capacity(2 * set.len());
    for (k, &j) in set.iter().enumerate() {
        let col = a.column(j) * signs[k];
        if free[k] {
            cols.push(-&col);
            owner.push((k, -1.0));
        }
        cols.push(col);
        owner.push((k, 1.0));
    }
    let b = DMatrix::from_columns(&cols);
    let (z, _, _) = lawson_hanson(&b, &(r / lambda), 1e-12, 10 * cols.len() + 10);
    let mut d = DVector::zeros(set.len());
    for (zi, &(k, dir)) in z.iter().zip(&owner) {
        d[k] += dir * signs[k] * zi;
    }
    d
}

fn homotopy(a: &DMatrix<f64>, y: &DVector<f64>, eta: f64, opts: &SolverOptions) -> Result<SolveResult> {
    let n = a.ncols();
    let max_iter = opts.max_iterations.unwrap_or(DEFAULT_MAX_ITERATIONS);
    let mut x = DVector::<f64>::zeros(n);
    let mut lambda = a.tr_mul(y).amax();
    if lambda == 0.0 {
        return Err(Error::Infeasible(format!(
            "y is orthogonal to range(A); residual floor {} exceeds eta {eta}",
            y.norm()
        )));
    }
    let eps = 1e-13;

    let lambda0 = lambda;
    for iter in 1..=max_iter {
        let r = y - a * &x;
        if r.norm() <= eta {
            return Ok(finish(a, y, eta, x, iter, true, opts));
        }
        let c = a.tr_mul(&r);
        // Equicorrelation set: the support plus zero columns at the penalty.
        let mut set = Vec::new();
        let mut signs = Vec::new();
        let mut free = Vec::new();
        for j in 0..n {
            if x[j] != 0.0 {
                set.push(j);
                signs.push(x[j].signum());
                free.push(true);
            } else if c[j].abs() >= lambda * (1.0 - 1e-9) {
                set.push(j);
                signs.push(c[j].signum());
                free.push(false);
            }
        }
        let d = path_direction(a, &r, lambda, &set, &signs, &free);
        let mut u = DVector::zeros(a.nrows());
        for (k, &j) in set.iter().enumerate() {
            if d[k] != 0.0 {
                u.axpy(d[k], &a.column(j), 1.0);
            }
        }
        let corr = a.tr_mul(&u);

        // Largest step before the residual reaches eta.
        let uu = u.norm_squared();
        let ru = r.dot(&u);
        let rr = r.norm_squared();
        let mut cross = f64::INFINITY;
        if uu > 0.0 {
            let disc = ru * ru - uu * (rr - eta * eta);
            if disc >= 0.0 {
                // Smaller root in the cancellation-free form.
                let root = (rr - eta * eta) / (ru + disc.sqrt());
                if root >= 0.0 {
                    cross = root;
                }
            }
        }

        let mut step = lambda;
        let mut leaving = None;
        // Zero coordinates that stay at zero can reach the penalty; a tied
        // one only on the side opposite its current sign.
        let mut tie_sign = vec![0.0; n];
        for (k, &j) in set.iter().enumerate() {
            tie_sign[j] = if x[j] == 0.0 && d[k] == 0.0 { signs[k] } else { f64::NAN };
        }
        for j in (0..n).filter(|&j| !tie_sign[j].is_nan()) {
            for (sg, cand) in [(1.0, (lambda - c[j]) / (1.0 - corr[j])), (-1.0, (lambda + c[j]) / (1.0 + corr[j]))] {
                if sg == tie_sign[j] {
                    continue;
                }
                if cand.is_finite() && cand > eps * lambda && cand < step {
                    step = cand;
                    leaving = None;
                }
            }
        }
        for (k, &j) in set.iter().enumerate() {
            if x[j] != 0.0 && d[k] * x[j] < 0.0 {
                let cand = -x[j] / d[k];
                if cand < step {
                    step = cand;
                    leaving = Some(j);
                }
            }
        }

        if cross <= step {
            for (k, &j) in set.iter().enumerate() {
                x[j] += cross * d[k];
            }
            if !exact_on_support(a, y, eta, &mut x) {
                pull_to_budget(a, y, eta, &mut x);
            }
            return Ok(finish(a, y, eta, x, iter, true, opts));
        }
        for (k, &j) in set.iter().enumerate() {
            x[j] += step * d[k];
        }
        if let Some(j) = leaving {
            x[j] = 0.0;
        }
        if step >= lambda || lambda - step <= 1e-14 * lambda0 {
            // End of the path without meeting eta: x is a least-squares
            // point, polished on its support.
            let support: Vec<usize> = (0..n).filter(|&j| x[j] != 0.0).collect();
            if !support.is_empty() {
                let fix = min_norm_lstsq(&select_columns(a, &support), &(y - a * &x));
                for (k, &j) in support.iter().enumerate() {
                    x[j] += fix[k];
                }
            }
            let floor = (y - a * &x).norm();
            if floor <= eta + opts.tolerance * (eta + y.norm()) {
                return Ok(finish(a, y, eta, x, iter, true, opts));
            }
            return Err(Error::Infeasible(format!("residual floor {floor} exceeds eta {eta}")));
        }
        lambda -= step;
        resolve_support(a, y, lambda, &mut x);
    }
    Ok(finish(a, y, eta, x, max_iter, false, opts))
}

/// With the support `S` and signs `s` fixed, the endpoint is
/// `x_S = A_S⁺y − λ G⁻¹s` where `λ` puts the residual norm at `η`. Applied
/// when `A_S` has full column rank and the signs survive.
fn exact_on_support(a: &DMatrix<f64>, y: &DVector<f64>, eta: f64, x: &mut DVector<f64>) -> bool {
    let support: Vec<usize> = (0..x.len()).filter(|&j| x[j] != 0.0).collect();
    if support.is_empty() || support.len() > a.nrows() {
        return false;
    }
    let a_s = select_columns(a, &support);
    let sv = singular_values(&a_s);
    if sv.min() <= 1e-8 * sv.max() {
        return false;
    }
    let signs = DVector::from_iterator(support.len(), support.iter().map(|&j| x[j].signum()));
    let x_ls = min_norm_lstsq(&a_s, y);
    let r_ls = y - &a_s * &x_ls;
    let w = gram_solve(&a_s, &signs);
    let u = &a_s * &w;
    let gap = eta * eta - r_ls.norm_squared();
    if gap < 0.0 || u.norm() == 0.0 {
        return false;
    }
    let lambda = gap.sqrt() / u.norm();
    let xs = &x_ls - &w * lambda;
    if !xs.iter().zip(signs.iter()).all(|(v, sg)| v * sg > 0.0) {
        return false;
    }
    for (k, &j) in support.iter().enumerate() {
        x[j] = xs[k];
    }
    true
}

/// Rounding can leave the crossing point slightly outside the η-ball. Moves
/// toward the least-squares point on the support just far enough to get back.
fn pull_to_budget(a: &DMatrix<f64>, y: &DVector<f64>, eta: f64, x: &mut DVector<f64>) {
    let r = y - a * &*x;
    let rn = r.norm();
    if rn <= eta {
        return;
    }
    let support: Vec<usize> = (0..x.len()).filter(|&j| x[j] != 0.0).collect();
    if support.is_empty() {
        return;
    }
    let a_s = select_columns(a, &support);
    let p = min_norm_lstsq(&a_s, &r);
    let v = &a_s * &p;
    // Smallest t in [0, 1] with ‖r − t v‖ = η.
    let (vv, rv) = (v.norm_squared(), r.dot(&v));
    let disc = rv * rv - vv * (rn * rn - eta * eta);
    let t = if vv > 0.0 && disc >= 0.0 { ((rn * rn - eta * eta) / (rv + disc.sqrt())).min(1.0) } else { 1.0 };
    for (k, &j) in support.iter().enumerate() {
        x[j] += t * p[k];
    }
}

/// Recomputes the nonzero coordinates from the optimality conditions at
/// `lambda` so rounding does not accumulate along the path. Kept only when
/// the support has full column rank and the signs survive.
fn resolve_support(a: &DMatrix<f64>, y: &DVector<f64>, lambda: f64, x: &mut DVector<f64>) {
    let support: Vec<usize> = (0..x.len()).filter(|&j| x[j] != 0.0).collect();
    if support.is_empty() || support.len() > a.nrows() {
        return;
    }
    let a_s = select_columns(a, &support);
    let signs = DVector::from_iterator(support.len(), support.iter().map(|&j| x[j].signum()));
    let rhs = a_s.tr_mul(y) - &signs * lambda;
    let sv = singular_values(&a_s);
    if sv.min() <= 1e-8 * sv.max() {
        return;
    }
    let xs = gram_solve(&a_s, &rhs);
    if xs.iter().zip(signs.iter()).all(|(v, sg)| v * sg > 0.0) {
        for (k, &j) in support.iter().enumerate() {
            x[j] = xs[k];
        }
    }
}

fn soft(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Chambolle–Pock on `min ‖x‖₁ + ι(‖A x − y‖ ≤ η)`.
///
/// Stops when the relative duality gap (against the dual point rescaled to
/// `‖Aᵀp‖∞ ≤ 1`) and the primal infeasibility are both below the tolerance.
fn primal_dual(
    a: &DMatrix<f64>,
    y: &DVector<f64>,
    eta: f64,
    opts: &SolverOptions,
    start: DVector<f64>,
) -> Result<SolveResult> {
    let max_iter = opts.max_iterations.unwrap_or(DEFAULT_MAX_ITERATIONS);
    let l = singular_values(a).max();
    let ratio = opts.primal_dual_step_ratio;
    let tau = 0.99 / (l * ratio.sqrt());
    let sigma = ratio * tau;
    let tol = opts.tolerance;

    let mut x = start;
    let mut x_bar = x.clone();
    let mut p = DVector::<f64>::zeros(a.nrows());
    for iter in 1..=max_iter {
        // Dual step: prox of σF* via Moreau, F = indicator of the η-ball at y.
        let v = &p + (a * &x_bar) * sigma;
        let z = &v / sigma;
        let dz = &z - y;
        let dn = dz.norm();
        let proj = if dn > eta { y + dz * (eta / dn) } else { z };
        p = v - proj * sigma;

        let grad = a.tr_mul(&p);
        let x_new = (&x - grad * tau).map(|t| soft(t, tau));
        x_bar = &x_new * 2.0 - &x;
        x = x_new;

        if iter % 25 == 0 {
            let primal = x.lp_norm(1);
            let infeas = ((a * &x - y).norm() - eta).max(0.0);
            let scale = a.tr_mul(&p).amax().max(1.0);
            let pf = &p / scale;
            let dual = -pf.dot(y) - eta * pf.norm();
            let gap = (primal - dual).abs();
            if gap <= tol * (1.0 + primal.abs()) && infeas <= tol * (1.0 + eta) {
                return Ok(finish(a, y, eta, x, iter, true, opts));
            }
        }
    }
    Ok(finish(a, y, eta, x, max_iter, false, opts))
}
