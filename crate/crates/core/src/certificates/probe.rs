//! Sampled probe of `inf_{v ∈ T} ‖A v‖₂`.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::in_cone_t;
use crate::linalg::lp_norm;
use crate::seeding::{child_seed, rng_from_seed};

/// Outcome of [`empirical_nsp_probe`].
///
/// `min_norm` is the smallest `‖A v‖₂` over the accepted samples. It is an
/// upper bound on the true infimum, so `tau = 1 / min_norm` is optimistic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub min_norm: Option<f64>,
    pub tau: Option<f64>,
    pub accepted: usize,
    pub attempts: usize,
}

/// One draw of `spike + λ·noise` normalized to unit ℓq, kept only if it
/// lies in `T_{ρ,s}^q`. `λ` is log-uniform on `[10⁻³, 10]`.
pub fn sample_cone_vector<R: Rng + ?Sized>(n: usize, s: usize, rho: f64, q: f64, rng: &mut R) -> Option<Vec<f64>> {
    let s = s.min(n);
    let mut v = vec![0.0; n];
    for i in sample(rng, n, s).iter() {
        v[i] = StandardNormal.sample(rng);
    }
    let lambda = 10f64.powf(rng.random_range(-3.0..=1.0));
    for x in v.iter_mut() {
        let z: f64 = StandardNormal.sample(rng);
        *x += lambda * z;
    }
    let norm = lp_norm(&v, q);
    if norm == 0.0 || !norm.is_finite() {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    in_cone_t(&v, s, rho, q).then_some(v)
}

/// Samples up to `trials` members of `T_{ρ,s}^q` (at most `20·trials`
/// attempts) and reports the smallest `‖A v‖₂` seen.
///
/// This is a necessary-condition probe. It never proves the nullspace
/// property.
pub fn empirical_nsp_probe(a: &DMatrix<f64>, s: usize, rho: f64, q: f64, trials: usize, seed: u64) -> Result<ProbeReport> {
    if trials == 0 {
        return Err(invalid("probe needs at least one trial"));
    }
    let n = a.ncols();
    if s == 0 || s > n {
        return Err(invalid(format!("need 1 <= s <= n, got s = {s}, n = {n}")));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(invalid(format!("rho must lie in (0, 1), got {rho}")));
    }
    if !(q >= 1.0 && q.is_finite()) {
        return Err(invalid(format!("q must be finite and at least 1, got {q}")));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidData("matrix entries must be finite".into()));
    }
    let budget = 20 * trials;
    let mut accepted = 0;
    let mut attempts = 0;
    let mut min_norm = f64::INFINITY;
    while accepted < trials && attempts < budget {
        let mut rng = rng_from_seed(child_seed(seed, attempts as u64));
        attempts += 1;
        if let Some(v) = sample_cone_vector(n, s, rho, q, &mut rng) {
            accepted += 1;
            min_norm = min_norm.min((a * DVector::from_vec(v)).norm());
        }
    }
    let min_norm = (accepted > 0).then_some(min_norm);
    let tau = min_norm.filter(|&v| v > 0.0).map(|v| 1.0 / v);
    Ok(ProbeReport { min_norm, tau, accepted, attempts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{generate_matrix, EnsembleKind, EnsembleSpec};

    #[test]
    fn zero_map_has_no_tau() {
        let r = empirical_nsp_probe(&DMatrix::zeros(4, 10), 2, 0.5, 2.0, 50, 1).unwrap();
        assert_eq!(r.min_norm, Some(0.0));
        assert_eq!(r.tau, None);
        assert!(r.accepted > 0);
    }

    #[test]
    fn isometry_gives_unit_minimum() {
        let r = empirical_nsp_probe(&DMatrix::identity(12, 12), 3, 0.5, 2.0, 100, 2).unwrap();
        assert!((r.min_norm.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn samples_are_unit_cone_members() {
        let mut rng = rng_from_seed(3);
        let mut got = 0;
        for _ in 0..200 {
            if let Some(v) = sample_cone_vector(30, 4, 0.5, 2.0, &mut rng) {
                assert!((lp_norm(&v, 2.0) - 1.0).abs() < 1e-12);
                assert!(in_cone_t(&v, 4, 0.5, 2.0));
                got += 1;
            }
        }
        assert!(got > 20);
    }

    #[test]
    fn more_rows_give_larger_minimum() {
        let (n, s) = (60, 3);
        let mut wins = 0;
        for seed in 0..5 {
            let tall = generate_matrix(&EnsembleSpec::new(EnsembleKind::Gaussian, 0.0, 240, n, seed)).unwrap();
            let short = generate_matrix(&EnsembleSpec::new(EnsembleKind::Gaussian, 0.0, 8, n, seed)).unwrap();
            let a = empirical_nsp_probe(&tall, s, 0.5, 2.0, 200, seed).unwrap().min_norm.unwrap();
            let b = empirical_nsp_probe(&short, s, 0.5, 2.0, 200, seed).unwrap().min_norm.unwrap();
            if a > 2.0 * b {
                wins += 1;
            }
        }
        assert_eq!(wins, 5);
    }
}
