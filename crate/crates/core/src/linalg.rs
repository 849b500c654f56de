//! Dense least-squares kernels shared by the solvers.

use nalgebra::{DMatrix, DVector};

/// Singular values below `RANK_RTOL * σ_max` are treated as zero.
pub const RANK_RTOL: f64 = 1e-10;

/// Thin SVD `a = u diag(s) v_t` with singular values in decreasing order.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub v_t: DMatrix<f64>,
}

/// SVD that checks its own reconstruction.
///
/// nalgebra's implicit-shift SVD occasionally returns factors that do not
/// reproduce the input (seen on tall matrices with a dominant singular
/// value). The input is scaled to unit max-entry first; if the factors still
/// miss, the transpose is tried and then one-sided Jacobi.
pub fn svd(a: &DMatrix<f64>) -> Svd {
    let (m, n) = a.shape();
    let k = m.min(n);
    let scale = a.amax();
    if k == 0 || scale == 0.0 || !scale.is_finite() {
        return Svd { u: DMatrix::identity(m, k), singular_values: DVector::zeros(k), v_t: DMatrix::identity(k, n) };
    }
    let b = a / scale;
    let tol = 1e-11 * ((m * n) as f64).sqrt();
    let fits = |f: &Svd, b: &DMatrix<f64>| {
        let rec = &f.u * DMatrix::from_diagonal(&f.singular_values) * &f.v_t;
        (rec - b).amax() <= tol
    };
    let mut out = nalgebra_svd(&b);
    if !fits(&out, &b) {
        let t = nalgebra_svd(&b.transpose());
        out = Svd { u: t.v_t.transpose(), singular_values: t.singular_values, v_t: t.u.transpose() };
        if !fits(&out, &b) {
            out = jacobi_svd(&b);
        }
    }
    out.singular_values *= scale;
    out
}

/// Singular values of `a` in decreasing order.
pub fn singular_values(a: &DMatrix<f64>) -> DVector<f64> {
    svd(a).singular_values
}

fn nalgebra_svd(b: &DMatrix<f64>) -> Svd {
    let s = b.clone().svd(true, true);
    let mut out = Svd {
        u: s.u.expect("u requested"),
        singular_values: s.singular_values,
        v_t: s.v_t.expect("v_t requested"),
    };
    sort_desc(&mut out);
    out
}

fn sort_desc(f: &mut Svd) {
    let k = f.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| f.singular_values[j].total_cmp(&f.singular_values[i]));
    if order.iter().enumerate().all(|(i, &j)| i == j) {
        return;
    }
    let u = DMatrix::from_fn(f.u.nrows(), k, |r, c| f.u[(r, order[c])]);
    let v_t = DMatrix::from_fn(k, f.v_t.ncols(), |r, c| f.v_t[(order[r], c)]);
    let s = DVector::from_fn(k, |i, _| f.singular_values[order[i]]);
    *f = Svd { u, singular_values: s, v_t };
}

/// One-sided Jacobi (Hestenes) on the taller orientation.
fn jacobi_svd(b: &DMatrix<f64>) -> Svd {
    if b.nrows() < b.ncols() {
        let t = jacobi_svd(&b.transpose());
        return Svd { u: t.v_t.transpose(), singular_values: t.singular_values, v_t: t.u.transpose() };
    }
    let n = b.ncols();
    let mut u = b.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = u.column(p).norm_squared();
                let beta = u.column(q).norm_squared();
                let gamma = u.column(p).dot(&u.column(q));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for mat in [&mut u, &mut v] {
                    for r in 0..mat.nrows() {
                        let (xp, xq) = (mat[(r, p)], mat[(r, q)]);
                        mat[(r, p)] = c * xp - s * xq;
                        mat[(r, q)] = s * xp + c * xq;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv = DVector::zeros(n);
    for j in 0..n {
        let norm = u.column(j).norm();
        sv[j] = norm;
        if norm > 0.0 {
            u.column_mut(j).unscale_mut(norm);
        }
    }
    let mut out = Svd { u, singular_values: sv, v_t: v.transpose() };
    sort_desc(&mut out);
    out
}

/// Minimum-norm least-squares solution of `a x ≈ b` via the SVD.
///
/// Rank is decided relative to the largest singular value, so
/// rank-deficient and underdetermined systems return the pseudo-inverse
/// solution.
pub fn min_norm_lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    if n == 0 || a.nrows() == 0 {
        return DVector::zeros(n);
    }
    let svd = svd(a);
    let smax = svd.singular_values.max();
    if smax == 0.0 || !smax.is_finite() {
        return DVector::zeros(n);
    }
    let (u, v_t) = (&svd.u, &svd.v_t);
    let cutoff = RANK_RTOL * smax;
    let mut x = DVector::zeros(n);
    for (k, &sv) in svd.singular_values.iter().enumerate() {
        if sv > cutoff {
            let coef = u.column(k).dot(b) / sv;
            x.axpy(coef, &v_t.row(k).transpose(), 1.0);
        }
    }
    x
}

/// Orthonormal basis of the null space of `a`, one basis vector per column.
pub fn null_space(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (m, n) = a.shape();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    // Pad to at least n rows so the SVD returns a full right basis.
    let padded = if m >= n {
        a.clone()
    } else {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (m, n)).copy_from(a);
        p
    };
    let svd = svd(&padded);
    let v_t = svd.v_t;
    let smax = svd.singular_values.max();
    let cutoff = RANK_RTOL * smax.max(f64::MIN_POSITIVE);
    let null_rows: Vec<usize> = (0..v_t.nrows())
        .filter(|&k| smax == 0.0 || svd.singular_values[k] <= cutoff)
        .collect();
    DMatrix::from_fn(n, null_rows.len(), |i, c| v_t[(null_rows[c], i)])
}

/// Columns of `a` listed in `cols`, in that order.
pub fn select_columns(a: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), cols.len(), |i, j| a[(i, cols[j])])
}

pub fn lp_norm(v: &[f64], p: f64) -> f64 {
    if p == 1.0 {
        v.iter().map(|x| x.abs()).sum()
    } else if p == 2.0 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    } else if p.is_infinite() {
        v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
    } else {
        // Scale by the max entry to avoid overflow for large p.
        let scale = v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        scale * v.iter().map(|x| (x.abs() / scale).powf(p)).sum::<f64>().powf(1.0 / p)
    }
}
