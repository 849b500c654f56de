//! Random measurement matrices, sparse non-negative signals and noise.
//!
//! Matrix entries are a centered variate plus a constant bias μ. The centered
//! part is drawn row-major from a generator seeded by the spec, so the same
//! seed yields the same centered draws for every μ.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{dim, invalid, Error, Result};
use crate::seeding::rng_from_seed;

/// Distribution of the centered part of every matrix entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    Gaussian,
    Rademacher,
}

impl EnsembleKind {
    #[inline]
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            EnsembleKind::Gaussian => StandardNormal.sample(rng),
            EnsembleKind::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }
}

impl fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnsembleKind::Gaussian => "gaussian",
            EnsembleKind::Rademacher => "rademacher",
        })
    }
}

impl FromStr for EnsembleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(EnsembleKind::Gaussian),
            "rademacher" => Ok(EnsembleKind::Rademacher),
            other => Err(invalid(format!("unknown ensemble kind `{other}`"))),
        }
    }
}

/// Parameterization of a biased random matrix distribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub mu: f64,
    pub m: usize,
    pub n: usize,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn new(kind: EnsembleKind, mu: f64, m: usize, n: usize, seed: u64) -> Self {
        Self { kind, mu, m, n, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(dim(format!("matrix must be non-empty, got {}x{}", self.m, self.n)));
        }
        if !self.mu.is_finite() || self.mu < 0.0 {
            return Err(invalid(format!("bias must be finite and non-negative, got {}", self.mu)));
        }
        Ok(())
    }

    pub fn with_mu(self, mu: f64) -> Self {
        Self { mu, ..self }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

/// Distribution of the non-zero amplitudes of a sparse signal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    Binary,
    HalfNormal,
}

impl fmt::Display for SignalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SignalKind::Binary => "binary",
            SignalKind::HalfNormal => "half_normal",
        })
    }
}

impl FromStr for SignalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "binary" => Ok(SignalKind::Binary),
            "half_normal" => Ok(SignalKind::HalfNormal),
            other => Err(invalid(format!("unknown signal kind `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignalSpec {
    pub kind: SignalKind,
    pub n: usize,
    pub s: usize,
    pub seed: u64,
}

/// A measurement model `y = A x0 + noise` bound together for one trial.
#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryInstance {
    pub a: DMatrix<f64>,
    pub x0: DVector<f64>,
    pub noise: DVector<f64>,
    pub y: DVector<f64>,
}

impl RecoveryInstance {
    /// Builds the instance, computing `y` from the other three parts.
    pub fn new(a: DMatrix<f64>, x0: DVector<f64>, noise: DVector<f64>) -> Result<Self> {
        if a.ncols() != x0.len() {
            return Err(dim(format!("A has {} columns but x0 has length {}", a.ncols(), x0.len())));
        }
        if a.nrows() != noise.len() {
            return Err(dim(format!("A has {} rows but noise has length {}", a.nrows(), noise.len())));
        }
        let y = &a * &x0 + &noise;
        Ok(Self { a, x0, noise, y })
    }

    /// Largest deviation of `y` from `A x0 + noise`.
    pub fn identity_defect(&self) -> f64 {
        let recomputed = &self.a * &self.x0 + &self.noise;
        (&self.y - recomputed).amax()
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }
}

/// Draws an `m x n` matrix with entries `centered + μ`.
pub fn generate_matrix(spec: &EnsembleSpec) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let mut rng = rng_from_seed(spec.seed);
    let mut a = DMatrix::zeros(spec.m, spec.n);
    for i in 0..spec.m {
        for j in 0..spec.n {
            a[(i, j)] = spec.kind.sample(&mut rng) + spec.mu;
        }
    }
    Ok(a)
}

/// Draws an `n`-vector with exactly `s` strictly positive entries on a uniform support.
pub fn generate_signal(spec: &SignalSpec) -> Result<DVector<f64>> {
    if spec.n == 0 {
        return Err(dim("signal length must be positive"));
    }
    if spec.s == 0 || spec.s > spec.n {
        return Err(invalid(format!("sparsity must satisfy 1 <= s <= n, got s={} n={}", spec.s, spec.n)));
    }
    let mut rng = rng_from_seed(spec.seed);
    let support = sample(&mut rng, spec.n, spec.s);
    let mut x = DVector::zeros(spec.n);
    for idx in support.iter() {
        x[idx] = match spec.kind {
            SignalKind::Binary => 1.0,
            SignalKind::HalfNormal => loop {
                let v: f64 = StandardNormal.sample(&mut rng);
                if v != 0.0 {
                    break v.abs();
                }
            },
        };
    }
    Ok(x)
}

/// I.i.d. zero-mean Gaussian noise with the given per-component variance.
pub fn generate_noise(m: usize, variance: f64, seed: u64) -> Result<DVector<f64>> {
    if m == 0 {
        return Err(dim("noise length must be positive"));
    }
    if !variance.is_finite() || variance < 0.0 {
        return Err(invalid(format!("noise variance must be finite and >= 0, got {variance}")));
    }
    if variance == 0.0 {
        return Ok(DVector::zeros(m));
    }
    let sd = variance.sqrt();
    let mut rng = rng_from_seed(seed);
    Ok(DVector::from_fn(m, |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        sd * z
    }))
}

/// Converts a noise level in dB into a variance (`10^(dB/10)`).
pub fn db_to_variance(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[inline]
fn pair_difference(a: f64, b: f64) -> f64 {
    (a - b) * std::f64::consts::FRAC_1_SQRT_2
}

/// Pairs consecutive rows into `(a_{2i-1} - a_{2i}) / √2`.
///
/// An odd final row is dropped. The constant part of every row cancels, and
/// `‖A v‖₂ ≥ ‖B v‖₂` holds for every `v`.
pub fn debias_rows(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m = a.nrows();
    if m < 2 {
        return Err(dim(format!("row pairing needs at least 2 rows, got {m}")));
    }
    let half = m / 2;
    Ok(DMatrix::from_fn(half, a.ncols(), |i, j| {
        pair_difference(a[(2 * i, j)], a[(2 * i + 1, j)])
    }))
}

/// Which rows a Monte Carlo estimator sees: the biased rows `a` or the
/// paired rows `b = (a - a') / √2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowModel {
    Biased,
    Debiased,
}

/// Streams i.i.d. rows of an ensemble for Monte Carlo estimators.
///
/// Debiased rows are formed from the centered draws directly; the bias
/// cancels algebraically in `b`, so the stream is identical for every μ.
#[derive(Clone, Copy, Debug)]
pub struct RowSampler {
    pub kind: EnsembleKind,
    pub mu: f64,
    pub n: usize,
    pub model: RowModel,
}

impl RowSampler {
    pub fn new(kind: EnsembleKind, mu: f64, n: usize, model: RowModel) -> Self {
        Self { kind, mu, n, model }
    }

    pub fn biased(spec: &EnsembleSpec) -> Self {
        Self::new(spec.kind, spec.mu, spec.n, RowModel::Biased)
    }

    pub fn debiased(spec: &EnsembleSpec) -> Self {
        Self::new(spec.kind, spec.mu, spec.n, RowModel::Debiased)
    }

    /// Number of rows a matrix with `m` rows contributes under this model.
    pub fn effective_rows(&self, m: usize) -> usize {
        match self.model {
            RowModel::Biased => m,
            RowModel::Debiased => m / 2,
        }
    }

    /// Fills `out` with one row. `scratch` must have the same length and is
    /// only touched for debiased rows.
    pub fn fill_row<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64], scratch: &mut [f64]) {
        match self.model {
            RowModel::Biased => {
                for v in out.iter_mut() {
                    *v = self.kind.sample(rng) + self.mu;
                }
            }
            RowModel::Debiased => {
                for v in out.iter_mut() {
                    *v = self.kind.sample(rng);
                }
                for v in scratch.iter_mut() {
                    *v = self.kind.sample(rng);
                }
                for (o, &s) in out.iter_mut().zip(scratch.iter()) {
                    *o = pair_difference(*o, s);
                }
            }
        }
    }
}

/// The paired matrix of a spec, built from its centered draws.
///
/// Consumes the generator in the same order as [`generate_matrix`], so for
/// μ = 0 it coincides bit-for-bit with `debias_rows(generate_matrix(spec))`.
pub fn debiased_matrix(spec: &EnsembleSpec) -> Result<DMatrix<f64>> {
    spec.validate()?;
    if spec.m < 2 {
        return Err(dim(format!("row pairing needs at least 2 rows, got {}", spec.m)));
    }
    let sampler = RowSampler::debiased(spec);
    let mut rng = rng_from_seed(spec.seed);
    let mut out = DMatrix::zeros(spec.m / 2, spec.n);
    let mut row = vec![0.0; spec.n];
    let mut scratch = vec![0.0; spec.n];
    for i in 0..spec.m / 2 {
        sampler.fill_row(&mut rng, &mut row, &mut scratch);
        for (j, &v) in row.iter().enumerate() {
            out[(i, j)] = v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(kind: EnsembleKind, mu: f64, m: usize, n: usize) -> EnsembleSpec {
        EnsembleSpec::new(kind, mu, m, n, 42)
    }

    #[test]
    fn rejects_empty_dimensions() {
        assert!(matches!(generate_matrix(&spec(EnsembleKind::Gaussian, 0.0, 0, 3)), Err(Error::Dimension(_))));
        assert!(matches!(generate_matrix(&spec(EnsembleKind::Gaussian, 0.0, 3, 0)), Err(Error::Dimension(_))));
        assert!(generate_matrix(&spec(EnsembleKind::Gaussian, -1.0, 3, 3)).is_err());
        assert!(generate_matrix(&spec(EnsembleKind::Gaussian, f64::NAN, 3, 3)).is_err());
    }

    #[test]
    fn gaussian_moments() {
        let a = generate_matrix(&spec(EnsembleKind::Gaussian, 0.0, 1000, 1000)).unwrap();
        let n = a.len() as f64;
        let mean = a.sum() / n;
        let var = a.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        // SE of the mean is 1e-3, SE of the variance is sqrt(2/N) ~ 1.4e-3.
        assert!(mean.abs() < 3e-3, "mean {mean}");
        assert!((var - 1.0).abs() < 3.0 * (2.0 / n).sqrt(), "var {var}");
    }

    #[test]
    fn biased_gaussian_mean() {
        let a = generate_matrix(&spec(EnsembleKind::Gaussian, 20.0, 1000, 1000)).unwrap();
        let mean = a.sum() / a.len() as f64;
        assert!((mean - 20.0).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn rademacher_support() {
        let a = generate_matrix(&spec(EnsembleKind::Rademacher, 0.0, 50, 40)).unwrap();
        assert!(a.iter().all(|&v| v == 1.0 || v == -1.0));
        let mean = a.sum() / a.len() as f64;
        assert!(mean.abs() < 0.1);
    }

    #[test]
    fn matrix_determinism() {
        let s = spec(EnsembleKind::Gaussian, 3.0, 7, 9);
        assert_eq!(generate_matrix(&s).unwrap(), generate_matrix(&s).unwrap());
        assert_ne!(generate_matrix(&s).unwrap(), generate_matrix(&s.with_seed(43)).unwrap());
    }

    #[test]
    fn bias_shifts_the_same_centered_draws() {
        for kind in [EnsembleKind::Gaussian, EnsembleKind::Rademacher] {
            let centered = generate_matrix(&spec(kind, 0.0, 6, 5)).unwrap();
            let mu = 20.0;
            let biased = generate_matrix(&spec(kind, mu, 6, 5)).unwrap();
            assert_eq!(biased, centered.map(|g| g + mu));
            let diff = &biased - &centered;
            assert!(diff.iter().all(|d| (d - mu).abs() <= 4.0 * f64::EPSILON * mu));
        }
    }

    #[test]
    fn signal_examples() {
        let x = generate_signal(&SignalSpec { kind: SignalKind::Binary, n: 100, s: 5, seed: 1 }).unwrap();
        assert_eq!(x.iter().filter(|&&v| v != 0.0).count(), 5);
        assert!(x.iter().all(|&v| v == 0.0 || v == 1.0));

        let x = generate_signal(&SignalSpec { kind: SignalKind::HalfNormal, n: 10, s: 10, seed: 2 }).unwrap();
        assert!(x.iter().all(|&v| v > 0.0));

        let x = generate_signal(&SignalSpec { kind: SignalKind::Binary, n: 4, s: 4, seed: 3 }).unwrap();
        assert_eq!(x, DVector::from_element(4, 1.0));

        let err = generate_signal(&SignalSpec { kind: SignalKind::Binary, n: 4, s: 5, seed: 3 });
        assert!(matches!(err, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn signal_support_is_uniform() {
        let n = 10;
        let mut hits = vec![0usize; n];
        let reps = 20_000;
        for seed in 0..reps {
            let x = generate_signal(&SignalSpec { kind: SignalKind::Binary, n, s: 3, seed }).unwrap();
            for (i, &v) in x.iter().enumerate() {
                if v > 0.0 {
                    hits[i] += 1;
                }
            }
        }
        // Each index is hit with probability 0.3.
        let se = (0.3 * 0.7 / reps as f64).sqrt();
        for h in hits {
            assert!((h as f64 / reps as f64 - 0.3).abs() < 4.0 * se);
        }
    }

    #[test]
    fn noise_examples() {
        let m = 1_000_000;
        let z = generate_noise(m, 0.01, 5).unwrap();
        let var = z.iter().map(|v| v * v).sum::<f64>() / m as f64;
        let se = 0.01 * (2.0 / m as f64).sqrt();
        assert!((var - 0.01).abs() < 3.0 * se, "var {var}");

        assert_eq!(generate_noise(5, 0.0, 9).unwrap(), DVector::zeros(5));
        assert_eq!(generate_noise(8, 0.3, 9).unwrap(), generate_noise(8, 0.3, 9).unwrap());
        assert!(matches!(generate_noise(3, -1.0, 1), Err(Error::InvalidParameter(_))));
        assert!((db_to_variance(-20.0) - 0.01).abs() < 1e-15);
    }

    #[test]
    fn debias_examples() {
        let a = DMatrix::from_element(4, 3, 7.5);
        assert_eq!(debias_rows(&a).unwrap(), DMatrix::zeros(2, 3));

        let a = generate_matrix(&spec(EnsembleKind::Gaussian, 1.0, 5, 3)).unwrap();
        let b = debias_rows(&a).unwrap();
        assert_eq!(b.shape(), (2, 3));
        let expect = (a[(2, 1)] - a[(3, 1)]) / 2f64.sqrt();
        assert!((b[(1, 1)] - expect).abs() < 1e-15);

        assert!(matches!(debias_rows(&DMatrix::zeros(1, 3)), Err(Error::Dimension(_))));
    }

    #[test]
    fn debiased_matrix_matches_pairing_of_centered_draws() {
        let s = spec(EnsembleKind::Gaussian, 0.0, 9, 6);
        assert_eq!(debiased_matrix(&s).unwrap(), debias_rows(&generate_matrix(&s).unwrap()).unwrap());
        // With a bias the two routes agree up to the rounding of `g + μ`.
        let biased = s.with_mu(20.0);
        let via_rows = debias_rows(&generate_matrix(&biased).unwrap()).unwrap();
        let direct = debiased_matrix(&biased).unwrap();
        assert!((via_rows - &direct).amax() < 1e-13);
        assert_eq!(direct, debiased_matrix(&s).unwrap());
    }

    #[test]
    fn instance_identity() {
        let a = generate_matrix(&spec(EnsembleKind::Gaussian, 2.0, 6, 4)).unwrap();
        let x0 = DVector::from_vec(vec![1.0, 0.0, 0.5, 0.0]);
        let noise = generate_noise(6, 0.01, 3).unwrap();
        let inst = RecoveryInstance::new(a, x0, noise).unwrap();
        assert_eq!(inst.identity_defect(), 0.0);
        assert!(RecoveryInstance::new(DMatrix::zeros(2, 3), DVector::zeros(2), DVector::zeros(2)).is_err());
    }

    proptest! {
        #[test]
        fn debias_dominates(seed in any::<u64>(), m in 2usize..12, n in 1usize..8, mu in 0.0f64..30.0) {
            let a = generate_matrix(&EnsembleSpec::new(EnsembleKind::Gaussian, mu, m, n, seed)).unwrap();
            let v = generate_noise(n, 1.0, seed ^ 0xABCD).unwrap();
            let b = debias_rows(&a).unwrap();
            let av = (&a * &v).norm();
            let bv = (&b * &v).norm();
            prop_assert!(av - bv >= -1e-12 * av.max(1.0));
        }
    }
}
