//! Small-ball quantities: the marginal tail `Q`, the mean width `W`, their
//! analytic bounds and the assembled lower bounds on `inf ‖A v‖₂`.

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::probe::sample_cone_vector;
use crate::ensembles::{EnsembleSpec, RowModel, RowSampler};
use crate::error::{invalid, Result};
use crate::geometry::sup_sparse_inner_product;
use crate::linalg::lp_norm;
use crate::seeding::{child_seed, derive_seed, rng_from_seed};
use crate::stats::{binomial_se, mean_and_se};

/// Index set over which the width is taken.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "set")]
pub enum WidthSet {
    /// `Σ_s^q`: s-sparse vectors of unit ℓq norm.
    SparseBall,
    /// `T_{ρ,s}^q`, through `W(T) ≤ (3/ρ) W(Σ_s^q)`.
    Cone { rho: f64 },
}

/// How many directions of each type `estimate_q` minimizes over.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionPlan {
    pub sparse: usize,
    pub cone: usize,
    pub s: usize,
    pub q: f64,
    pub rho: f64,
}

impl DirectionPlan {
    /// 64 sparse and 64 cone directions.
    pub fn new(s: usize, q: f64, rho: f64) -> Self {
        Self { sparse: 64, cone: 64, s, q, rho }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QEstimate {
    /// Smallest empirical `P(|⟨a,u⟩| ≥ ξ)` over the sampled directions. This
    /// overestimates the infimum over the whole set.
    pub q_hat: f64,
    pub std_err: f64,
    pub directions: usize,
    pub draws: usize,
    pub worst_direction: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthEstimate {
    pub w_hat: f64,
    pub std_err: f64,
    pub trials: usize,
    /// Rows entering `h = m^{-1/2} Σ ε_k a_k`.
    pub rows: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmallBallEstimate {
    pub q_hat: f64,
    pub w_hat: f64,
    pub xi: f64,
    pub t_param: f64,
    pub lower_bound: f64,
    pub trials: usize,
    pub std_err_w: f64,
}

/// Inputs of [`estimate_smallball`].
#[derive(Clone, Debug, PartialEq)]
pub struct SmallBallRequest {
    pub spec: EnsembleSpec,
    pub model: RowModel,
    pub s: usize,
    pub q: f64,
    pub rho: f64,
    pub xi: f64,
    pub t_param: f64,
    pub plan: DirectionPlan,
    /// Row draws per direction for `Q`.
    pub q_draws: usize,
    /// Replicates for `W`.
    pub w_trials: usize,
}

fn normalize_q(v: &mut [f64], q: f64) -> bool {
    let norm = lp_norm(v, q);
    if norm == 0.0 || !norm.is_finite() {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    true
}

/// Draws the direction sample of a plan: random s-sparse unit-ℓq vectors
/// followed by rejection samples from the cone.
pub fn sample_directions(plan: &DirectionPlan, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if plan.sparse + plan.cone == 0 {
        return Err(invalid("direction plan is empty"));
    }
    if plan.s == 0 || plan.s > n {
        return Err(invalid(format!("need 1 <= s <= n, got s = {}, n = {n}", plan.s)));
    }
    let mut out = Vec::with_capacity(plan.sparse + plan.cone);
    for k in 0..plan.sparse {
        let mut rng = rng_from_seed(derive_seed(seed, &[0, k as u64]));
        loop {
            let mut v = vec![0.0; n];
            for i in sample(&mut rng, n, plan.s).iter() {
                v[i] = StandardNormal.sample(&mut rng);
            }
            if normalize_q(&mut v, plan.q) {
                out.push(v);
                break;
            }
        }
    }
    for k in 0..plan.cone {
        let mut rng = rng_from_seed(derive_seed(seed, &[1, k as u64]));
        for _ in 0..20 {
            if let Some(v) = sample_cone_vector(n, plan.s, plan.rho, plan.q, &mut rng) {
                out.push(v);
                break;
            }
        }
    }
    Ok(out)
}

/// Empirical `P(|⟨a, z⟩| ≥ θ)` for each threshold, from `draws` fresh rows.
///
/// Returns `(p, √(p(1−p)/draws))` per threshold.
pub fn tail_probabilities(
    sampler: &RowSampler,
    z: &[f64],
    thresholds: &[f64],
    draws: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    if draws == 0 {
        return Err(invalid("need at least one draw"));
    }
    if z.len() != sampler.n {
        return Err(crate::error::dim(format!("direction has length {}, rows have {}", z.len(), sampler.n)));
    }
    let mut rng = rng_from_seed(seed);
    let mut row = vec![0.0; sampler.n];
    let mut scratch = vec![0.0; sampler.n];
    let mut hits = vec![0usize; thresholds.len()];
    for _ in 0..draws {
        sampler.fill_row(&mut rng, &mut row, &mut scratch);
        let dot: f64 = row.iter().zip(z).map(|(a, b)| a * b).sum::<f64>().abs();
        for (h, &t) in hits.iter_mut().zip(thresholds) {
            if dot >= t {
                *h += 1;
            }
        }
    }
    let d = draws as f64;
    Ok(hits
        .into_iter()
        .map(|h| {
            let p = h as f64 / d;
            (p, binomial_se(p, draws))
        })
        .collect())
}

/// Minimum over `directions` of the empirical `P(|⟨a,u⟩| ≥ ξ)`.
pub fn estimate_q(
    sampler: &RowSampler,
    directions: &[Vec<f64>],
    xi: f64,
    draws: usize,
    seed: u64,
) -> Result<QEstimate> {
    if directions.is_empty() {
        return Err(invalid("no directions to minimize over"));
    }
    if !(xi > 0.0 && xi.is_finite()) {
        return Err(invalid(format!("xi must be positive, got {xi}")));
    }
    let per: Vec<(f64, f64)> = directions
        .par_iter()
        .enumerate()
        .map(|(k, u)| tail_probabilities(sampler, u, &[xi], draws, child_seed(seed, k as u64)).map(|v| v[0]))
        .collect::<Result<_>>()?;
    let (worst, &(q_hat, std_err)) = per
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0).then(a.0.cmp(&b.0)))
        .expect("non-empty");
    Ok(QEstimate { q_hat, std_err, directions: directions.len(), draws, worst_direction: worst })
}

/// Monte Carlo estimate of `W = E sup_{u ∈ E} ⟨h, u⟩` with
/// `h = r^{-1/2} Σ_k ε_k a_k` over the `r` effective rows of `spec`.
///
/// Replicate `k` uses the seed `child_seed(spec.seed, k)`. Biased rows add μ
/// after the centered draw, so sweeping μ at a fixed seed reuses the same
/// centered rows and signs.
pub fn estimate_w(
    spec: &EnsembleSpec,
    model: RowModel,
    s: usize,
    q: f64,
    set: WidthSet,
    trials: usize,
) -> Result<WidthEstimate> {
    spec.validate()?;
    if trials < 2 {
        return Err(invalid("width estimation needs at least 2 replicates"));
    }
    if s == 0 || s > spec.n {
        return Err(invalid(format!("need 1 <= s <= n, got s = {s}, n = {}", spec.n)));
    }
    let factor = match set {
        WidthSet::SparseBall => 1.0,
        WidthSet::Cone { rho } => {
            if !(rho > 0.0 && rho < 1.0) {
                return Err(invalid(format!("rho must lie in (0, 1), got {rho}")));
            }
            3.0 / rho
        }
    };
    let sampler = RowSampler::new(spec.kind, spec.mu, spec.n, model);
    let rows = sampler.effective_rows(spec.m);
    if rows == 0 {
        return Err(invalid("no effective rows (debiasing needs m >= 2)"));
    }
    let scale = 1.0 / (rows as f64).sqrt();
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_from_seed(child_seed(spec.seed, k as u64));
            let mut h = vec![0.0; spec.n];
            let mut row = vec![0.0; spec.n];
            let mut scratch = vec![0.0; spec.n];
            for _ in 0..rows {
                sampler.fill_row(&mut rng, &mut row, &mut scratch);
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                for (hi, ri) in h.iter_mut().zip(&row) {
                    *hi += sign * ri;
                }
            }
            h.iter_mut().for_each(|v| *v *= scale);
            factor * sup_sparse_inner_product(&h, s, q).expect("s checked above")
        })
        .collect();
    let (w_hat, std_err) = mean_and_se(&values);
    Ok(WidthEstimate { w_hat, std_err, trials, rows })
}

/// Estimates `Q_{2ξ}` and the cone width, then assembles the lower bound
/// for the chosen row model.
pub fn estimate_smallball(req: &SmallBallRequest) -> Result<SmallBallEstimate> {
    let seed = req.spec.seed;
    let directions = sample_directions(&req.plan, req.spec.n, derive_seed(seed, &[0]))?;
    let sampler = RowSampler::new(req.spec.kind, req.spec.mu, req.spec.n, req.model);
    let q = estimate_q(&sampler, &directions, 2.0 * req.xi, req.q_draws, derive_seed(seed, &[1]))?;
    let w_spec = req.spec.clone().with_seed(derive_seed(seed, &[2]));
    let w = estimate_w(&w_spec, req.model, req.s, req.q, WidthSet::Cone { rho: req.rho }, req.w_trials)?;
    let lower_bound = match req.model {
        RowModel::Biased => smallball_lower_bound(q.q_hat, w.w_hat, req.xi, req.t_param, req.spec.m)?,
        RowModel::Debiased => smallball_lower_bound_debiased(q.q_hat, w.w_hat, req.xi, req.t_param, req.spec.m)?,
    };
    Ok(SmallBallEstimate {
        q_hat: q.q_hat,
        w_hat: w.w_hat,
        xi: req.xi,
        t_param: req.t_param,
        lower_bound,
        trials: req.w_trials,
        std_err_w: w.std_err,
    })
}

fn check_assembly(q_hat: f64, w_hat: f64, xi: f64, t_param: f64) -> Result<()> {
    if ![q_hat, w_hat, xi, t_param].iter().all(|v| v.is_finite()) {
        return Err(invalid("small-ball inputs must be finite"));
    }
    if xi <= 0.0 {
        return Err(invalid(format!("xi must be positive, got {xi}")));
    }
    if t_param < 0.0 {
        return Err(invalid(format!("t must be non-negative, got {t_param}")));
    }
    Ok(())
}

/// `ξ√m q − ξ t − 2 w`. May be negative.
pub fn smallball_lower_bound(q_hat: f64, w_hat: f64, xi: f64, t_param: f64, m: usize) -> Result<f64> {
    check_assembly(q_hat, w_hat, xi, t_param)?;
    Ok(xi * (m as f64).sqrt() * q_hat - xi * t_param - 2.0 * w_hat)
}

/// `ξ√((m−1)/2) q − ξ t − 2 w` for quantities computed on paired rows.
pub fn smallball_lower_bound_debiased(q_hat: f64, w_hat: f64, xi: f64, t_param: f64, m: usize) -> Result<f64> {
    check_assembly(q_hat, w_hat, xi, t_param)?;
    if m < 2 {
        return Err(invalid(format!("row pairing needs m >= 2, got {m}")));
    }
    Ok(xi * ((m as f64 - 1.0) / 2.0).sqrt() * q_hat - xi * t_param - 2.0 * w_hat)
}

fn check_sn(s: usize, n: usize) -> Result<()> {
    if s == 0 || s > n {
        return Err(invalid(format!("need 1 <= s <= n, got s = {s}, n = {n}")));
    }
    Ok(())
}

/// `log(e n / s)`, evaluated as `1 + ln(n/s)` so that `n = s` gives exactly 1.
pub(crate) fn log_en_s(s: usize, n: usize) -> f64 {
    1.0 + (n as f64 / s as f64).ln()
}

/// `√(2s log(n/s) + 2s) + μ√(2s)`: bound on the width of `Σ_s²` for
/// `N(μ, 1)` rows.
pub fn analytic_w_bound(s: usize, n: usize, mu: f64) -> Result<f64> {
    check_sn(s, n)?;
    let s = s as f64;
    Ok((2.0 * s * (n as f64 / s).ln() + 2.0 * s).sqrt() + mu * (2.0 * s).sqrt())
}

/// `4√2 (2√s + √(s log(en/s)))`: width bound for paired rows.
pub fn debiased_w_bound(s: usize, n: usize) -> Result<f64> {
    check_sn(s, n)?;
    let sf = s as f64;
    Ok(4.0 * std::f64::consts::SQRT_2 * (2.0 * sf.sqrt() + (sf * log_en_s(s, n)).sqrt()))
}

/// Paley–Zygmund floor `(1 − θ²)² / 3` on `P(|⟨a, z⟩| ≥ θ)` for unit `z`.
pub fn paley_zygmund_floor(theta: f64) -> f64 {
    let t2 = theta * theta;
    ((1.0 - t2).max(0.0).powi(2) / 3.0).clamp(0.0, 1.0)
}

/// Biased lower bound at `ξ² = 1/8`, `t = √m/24`, `Q ≥ (1 − 4ξ²)²/3` and
/// `W(T) ≤ (3/ρ)·analytic_w_bound`.
pub fn naive_plugin_bound(m: usize, s: usize, n: usize, rho: f64, mu: f64) -> Result<f64> {
    let xi = (1.0f64 / 8.0).sqrt();
    let q_hat = paley_zygmund_floor(2.0 * xi);
    let w_hat = 3.0 / rho * analytic_w_bound(s, n, mu)?;
    smallball_lower_bound(q_hat, w_hat, xi, (m as f64).sqrt() / 24.0, m)
}

/// Paired-row lower bound at `ξ² = 1/2`, `t = √(m−1)/(8√2)`, `Q ≥ (1 − ξ²)²`
/// and `W(T) ≤ (3 s^{1/2−1/q}/ρ)·debiased_w_bound`.
pub fn debiased_plugin_bound(m: usize, s: usize, n: usize, q: f64, rho: f64) -> Result<f64> {
    if m < 2 {
        return Err(invalid(format!("row pairing needs m >= 2, got {m}")));
    }
    let xi = std::f64::consts::FRAC_1_SQRT_2;
    let q_hat = (1.0 - xi * xi).powi(2);
    let w_hat = 3.0 * (s as f64).powf(0.5 - 1.0 / q) / rho * debiased_w_bound(s, n)?;
    let t = (m as f64 - 1.0).sqrt() / (8.0 * std::f64::consts::SQRT_2);
    smallball_lower_bound_debiased(q_hat, w_hat, xi, t, m)
}
