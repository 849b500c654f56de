//! Width of the sparse unit ball as a function of the bias.

use serde::{Deserialize, Serialize};

use crate::certificates::{estimate_w, WidthSet};
use crate::ensembles::{EnsembleKind, EnsembleSpec, RowModel};
use crate::error::{invalid, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthSweepConfig {
    pub kind: EnsembleKind,
    pub n: usize,
    pub s: usize,
    /// Rows per replicate.
    pub m: usize,
    pub q: f64,
    pub model: RowModel,
    pub mu_lo: f64,
    pub mu_hi: f64,
    /// Grid points, endpoints included.
    pub steps: usize,
    pub trials: usize,
    pub seed: u64,
}

impl WidthSweepConfig {
    /// s = 128, n = 1000, μ ∈ [0, 30] on 31 points, 500 replicates of 100 rows.
    pub fn sweep_defaults() -> Self {
        Self {
            kind: EnsembleKind::Gaussian,
            n: 1000,
            s: 128,
            m: 100,
            q: 2.0,
            model: RowModel::Biased,
            mu_lo: 0.0,
            mu_hi: 30.0,
            steps: 31,
            trials: 500,
            seed: 0,
        }
    }

    pub fn grid(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.mu_lo];
        }
        (0..self.steps)
            .map(|k| self.mu_lo + (self.mu_hi - self.mu_lo) * k as f64 / (self.steps - 1) as f64)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthPoint {
    pub mu: f64,
    pub w_hat: f64,
    pub std_err: f64,
}

/// Estimates the width of `Σ_s^q` at every grid point.
///
/// All grid points share the seed, hence the same centered rows and signs.
pub fn run_width_sweep(cfg: &WidthSweepConfig) -> Result<Vec<WidthPoint>> {
    if cfg.steps == 0 {
        return Err(invalid("the μ grid needs at least one point"));
    }
    if !(cfg.mu_lo.is_finite() && cfg.mu_hi.is_finite() && cfg.mu_lo >= 0.0 && cfg.mu_hi >= cfg.mu_lo) {
        return Err(invalid(format!("need 0 <= mu_lo <= mu_hi, got {}:{}", cfg.mu_lo, cfg.mu_hi)));
    }
    cfg.grid()
        .into_iter()
        .map(|mu| {
            let spec = EnsembleSpec::new(cfg.kind, mu, cfg.m, cfg.n, cfg.seed);
            let w = estimate_w(&spec, cfg.model, cfg.s, cfg.q, WidthSet::SparseBall, cfg.trials)?;
            Ok(WidthPoint { mu, w_hat: w.w_hat, std_err: w.std_err })
        })
        .collect()
}

pub fn width_points_to_csv(points: &[WidthPoint]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for p in points {
        w.serialize(p)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidData(e.to_string()))
}

/// Least-squares line `y ≈ intercept + slope·x` with its coefficient of determination.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn affine_fit(xs: &[f64], ys: &[f64]) -> Result<AffineFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(invalid("affine fit needs at least two paired points"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("affine fit needs distinct x values"));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(AffineFit { slope, intercept, r_squared })
}
