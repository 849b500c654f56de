//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::StandardNormal;

use nnlscs::certificates::{
    analytic_w_bound, certify_mplus_biased, estimate_w, hoeffding_probability, paley_zygmund_floor,
    sample_complexity, tail_probabilities, ThresholdKind, WidthSet,
};
use nnlscs::ensembles::{
    debias_rows, debiased_matrix, generate_matrix, EnsembleKind, EnsembleSpec, RowModel, RowSampler,
};
use nnlscs::experiments::{
    affine_fit, run_bound_validation, run_nmse_experiment, run_width_sweep, AggregateRow, Algorithm,
    ExperimentConfig, WidthSweepConfig,
};
use nnlscs::geometry::{best_s_term_error, nsp_inequality_holds, sup_sparse_inner_product, top_s_indices, NspParams};
use nnlscs::seeding::{child_seed, rng_from_seed};
use nnlscs::solvers::{oracle_nnls, solve_nnls, SolverOptions};
use nnlscs::stats::binomial_se;
use nnlscs::{DMatrix, DVector};

type Verdict = Result<String, String>;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn gaussian_vec<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn oracle_equivalence() -> Verdict {
    let start = Instant::now();
    let opts = SolverOptions::default();
    let mut rng = rng_from_seed(0xC1);
    let (mut worst_res, mut worst_x) = (0.0f64, 0.0f64);
    for k in 0..500u64 {
        let m = rng.random_range(3..=10);
        let n = rng.random_range(2..=12);
        let kind = if k % 2 == 0 { EnsembleKind::Gaussian } else { EnsembleKind::Rademacher };
        let mu = [0.0, 0.5, 2.0, 5.0][(k / 2 % 4) as usize];
        let a = generate_matrix(&EnsembleSpec::new(kind, mu, m, n, child_seed(1, k))).map_err(|e| e.to_string())?;
        let y = if k % 3 == 0 {
            DVector::from_vec(gaussian_vec(&mut rng, m))
        } else {
            let x0 = DVector::from_fn(n, |_, _| if rng.random::<f64>() < 0.3 { rng.random::<f64>() } else { 0.0 });
            &a * x0 + DVector::from_vec(gaussian_vec(&mut rng, m)) * 0.05
        };
        let got = solve_nnls(&a, &y, &opts).map_err(|e| format!("instance {k}: {e}"))?;
        let want = oracle_nnls(&a, &y).map_err(|e| format!("instance {k}: oracle {e}"))?;
        let dr = (got.residual_norm - want.residual_norm).abs();
        let dx = got.x_hat.iter().zip(&want.x_hat).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst_res = worst_res.max(dr / (1.0 + y.norm()));
        worst_x = worst_x.max(dx);
        if dr > 1e-8 * (1.0 + y.norm()) || dx > 1e-6 {
            return Err(format!("instance {k} ({m}x{n}, {kind}, mu={mu}): residual gap {dr:e}, coordinate gap {dx:e}"));
        }
    }
    let elapsed = start.elapsed();
    check(
        elapsed < Duration::from_secs(60),
        format!("500 instances, worst scaled residual gap {worst_res:.2e}, worst coordinate gap {worst_x:.2e}, {elapsed:.2?}"),
    )
}

fn debias_domination() -> Verdict {
    let mut rng = rng_from_seed(0xC2);
    let mut worst = f64::INFINITY;
    for k in 0..1000u64 {
        let m = rng.random_range(2..=20);
        let n = rng.random_range(1..=15);
        let kind = if k % 2 == 0 { EnsembleKind::Gaussian } else { EnsembleKind::Rademacher };
        let mu = rng.random::<f64>() * 30.0;
        let a = generate_matrix(&EnsembleSpec::new(kind, mu, m, n, child_seed(2, k))).map_err(|e| e.to_string())?;
        let b = debias_rows(&a).map_err(|e| e.to_string())?;
        let v = DVector::from_vec(gaussian_vec(&mut rng, n));
        let (av, bv) = ((&a * &v).norm(), (&b * &v).norm());
        let slack = if av == 0.0 { if bv == 0.0 { 0.0 } else { -1.0 } } else { (av - bv) / av };
        worst = worst.min(slack);
        if slack < -1e-12 {
            return Err(format!("pair {k}: ‖Av‖ = {av}, ‖Bv‖ = {bv}"));
        }
    }
    // Debiased statistics at a fixed centered seed, for three biases.
    let stats = |mu: f64| -> nnlscs::Result<(DMatrix<f64>, f64, Vec<(f64, f64)>)> {
        let spec = EnsembleSpec::new(EnsembleKind::Gaussian, mu, 40, 30, 77);
        let b = debiased_matrix(&spec)?;
        let w = estimate_w(&spec, RowModel::Debiased, 4, 2.0, WidthSet::SparseBall, 50)?;
        let z: Vec<f64> = (0..30).map(|i| if i < 3 { 1.0 / 3f64.sqrt() } else { 0.0 }).collect();
        let tails = tail_probabilities(&RowSampler::debiased(&spec), &z, &[0.1, 0.5], 2000, 5)?;
        Ok((b, w.w_hat, tails))
    };
    let base = stats(0.0).map_err(|e| e.to_string())?;
    for mu in [5.0, 20.0] {
        let other = stats(mu).map_err(|e| e.to_string())?;
        let same = base.0.iter().zip(other.0.iter()).all(|(x, y)| x.to_bits() == y.to_bits())
            && base.1.to_bits() == other.1.to_bits()
            && base.2.iter().zip(&other.2).all(|(x, y)| x.0.to_bits() == y.0.to_bits());
        if !same {
            return Err(format!("debiased statistics differ between mu = 0 and mu = {mu}"));
        }
    }
    Ok(format!("1000 pairs, smallest relative slack {worst:.3e}; debiased matrix, width and tails bit-identical for mu in {{0, 5, 20}}"))
}

fn paley_zygmund() -> Verdict {
    let start = Instant::now();
    let n = 50;
    let thetas = [0.1, 0.25, 0.5];
    let mut rng = rng_from_seed(0xC3);
    let mut tightest = f64::INFINITY;
    let mut cells = 0;
    for mu in [0.0, 1.0, 20.0] {
        let sampler = RowSampler::new(EnsembleKind::Gaussian, mu, n, RowModel::Biased);
        for d in 0..20u64 {
            let mut z = gaussian_vec(&mut rng, n);
            let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            z.iter_mut().for_each(|v| *v /= norm);
            let tails = tail_probabilities(&sampler, &z, &thetas, 100_000, child_seed(3, d)).map_err(|e| e.to_string())?;
            for (&theta, &(p, se)) in thetas.iter().zip(&tails) {
                let margin = p - (paley_zygmund_floor(theta) - 3.0 * se);
                tightest = tightest.min(margin);
                cells += 1;
                if margin < 0.0 {
                    return Err(format!("mu = {mu}, direction {d}, theta = {theta}: p = {p}, se = {se}"));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    check(
        elapsed < Duration::from_secs(120),
        format!("{cells} cells at 1e5 draws, smallest margin over the floor {tightest:.4}, {elapsed:.2?}"),
    )
}

fn width_bound() -> Verdict {
    let mut cells = 0;
    let mut tightest = f64::INFINITY;
    for n in [100, 1000] {
        for s in [4, 16, 128].into_iter().filter(|&s| s <= n) {
            for mu in [0.0, 5.0, 20.0] {
                let spec = EnsembleSpec::new(EnsembleKind::Gaussian, mu, 100, n, derive(4, s, n));
                let w = estimate_w(&spec, RowModel::Biased, s, 2.0, WidthSet::SparseBall, 500).map_err(|e| e.to_string())?;
                let bound = analytic_w_bound(s, n, mu).map_err(|e| e.to_string())?;
                let margin = bound + 3.0 * w.std_err - w.w_hat;
                tightest = tightest.min(margin / bound);
                cells += 1;
                if margin < 0.0 {
                    return Err(format!("s = {s}, n = {n}, mu = {mu}: w_hat = {} > {bound} + 3·{}", w.w_hat, w.std_err));
                }
            }
        }
    }
    let cfg = WidthSweepConfig { seed: 40, ..WidthSweepConfig::sweep_defaults() };
    let pts = run_width_sweep(&cfg).map_err(|e| e.to_string())?;
    let xs: Vec<f64> = pts.iter().map(|p| p.mu).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.w_hat).collect();
    let fit = affine_fit(&xs, &ys).map_err(|e| e.to_string())?;
    check(
        fit.r_squared >= 0.99 && fit.slope > 0.0,
        format!(
            "{cells} cells under the bound (smallest relative margin {tightest:.3}); sweep over mu in [0, 30]: slope {:.3}, R² {:.5}",
            fit.slope, fit.r_squared
        ),
    )
}

fn derive(tag: u64, s: usize, n: usize) -> u64 {
    child_seed(child_seed(tag, s as u64), n as u64)
}

fn mplus_concentration() -> Verdict {
    let (mu, m, n, seeds) = (2.0, 64, 100, 1000usize);
    let mut good = 0;
    for k in 0..seeds as u64 {
        let a = generate_matrix(&EnsembleSpec::new(EnsembleKind::Gaussian, mu, m, n, child_seed(5, k))).map_err(|e| e.to_string())?;
        let cert = certify_mplus_biased(&a, mu).map_err(|e| e.to_string())?;
        if cert.valid && cert.kappa_upper.is_some_and(|k| k <= 3.0) {
            good += 1;
        }
    }
    let freq = good as f64 / seeds as f64;
    let p = hoeffding_probability(n, m, mu);
    let floor = p - 3.0 * binomial_se(p, seeds);
    check(freq >= floor, format!("{good}/{seeds} valid with κ ≤ 3 (frequency {freq}), required {floor:.6}"))
}

/// Frozen from an independent 60-digit evaluation of both closed forms.
/// Columns: s, n, q, ρ, μ, debiased, naive.
const THRESHOLD_GRID: [(usize, usize, f64, f64, f64, u64, u64); 10] = [
    (1, 1, 2.0, 1.0, 0.0, 2654209, 82944),
    (1, 10, 2.0, 0.5, 0.0, 17189586, 1095719),
    (5, 100, 2.0, 0.3, 0.0, 262004138, 18412335),
    (5, 100, 2.0, 0.3, 20.0, 262004138, 2230055625),
    (4, 1000, 3.0, 0.25, 1.0, 621284900, 67039408),
    (16, 1000, 4.0, 0.9, 5.0, 424079762, 86501086),
    (128, 1000, 2.0, 0.1, 2.5, 53029340865, 19159178670),
    (3, 7, 2.5, 0.75, 0.5, 22109306, 1529024),
    (50, 50, 6.0, 0.625, 10.0, 4610962532, 1284636672),
    (10, 100000, 2.0, 0.05, 0.1, 31840810693, 3602892554),
];

fn thresholds() -> Verdict {
    for &(s, n, q, rho, mu, deb, naive) in &THRESHOLD_GRID {
        let d = sample_complexity(ThresholdKind::Debiased, s, n, q, rho, mu).map_err(|e| e.to_string())?;
        let v = sample_complexity(ThresholdKind::NaiveBiased, s, n, q, rho, mu).map_err(|e| e.to_string())?;
        if (d, v) != (deb, naive) {
            return Err(format!("(s={s}, n={n}, q={q}, rho={rho}, mu={mu}): got ({d}, {v}), want ({deb}, {naive})"));
        }
    }
    for &(s, n, q, rho, _, _, _) in &THRESHOLD_GRID {
        let mus: Vec<f64> = (0..=30).map(|k| k as f64).collect();
        let deb: Vec<u64> = mus
            .iter()
            .map(|&mu| sample_complexity(ThresholdKind::Debiased, s, n, q, rho, mu))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let naive: Vec<u64> = mus
            .iter()
            .map(|&mu| sample_complexity(ThresholdKind::NaiveBiased, s, n, q, rho, mu))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        if deb.iter().any(|&d| d != deb[0]) {
            return Err(format!("debiased threshold varies with mu at s={s}, n={n}"));
        }
        if naive.windows(2).any(|w| w[1] <= w[0]) {
            return Err(format!("naive threshold not strictly increasing in mu at s={s}, n={n}"));
        }
    }
    Ok("10 grid points exact for both forms; debiased constant and naive strictly increasing over mu = 0..30".into())
}

fn nmse_config() -> ExperimentConfig {
    ExperimentConfig { trials: 100, master_seed: 7, ..ExperimentConfig::study_defaults() }
}

fn cell(rows: &[AggregateRow], alg: Algorithm, mu: f64, m: usize) -> Result<f64, String> {
    rows.iter()
        .find(|r| r.algorithm == alg && r.mu == mu && r.m == m)
        .map(|r| r.mean_nmse)
        .ok_or_else(|| format!("missing cell {alg} mu={mu} m={m}"))
}

fn nmse_experiment() -> Verdict {
    let start = Instant::now();
    let cfg = nmse_config();
    let out = run_nmse_experiment(&cfg, &SolverOptions::default()).map_err(|e| e.to_string())?;
    let rows = &out.aggregates;
    let mut notes = Vec::new();
    let mut ok = out.failures.is_empty();
    if !ok {
        notes.push(format!("{} trial failures", out.failures.len()));
    }
    let a = cell(rows, Algorithm::Nnls, 20.0, 80)?;
    ok &= a <= 0.1;
    notes.push(format!("(a) biased NNLS at m=80: {a:.4}"));
    let mut worst_b = f64::INFINITY;
    let mut series = Vec::new();
    for &m in cfg.m_list.iter().filter(|&&m| m <= 50) {
        let v = cell(rows, Algorithm::Nnls, 0.0, m)?;
        worst_b = worst_b.min(v);
        series.push(format!("{m}:{v:.3}"));
    }
    ok &= worst_b >= 0.5;
    notes.push(format!("(b) centered NNLS min over m<=50: {worst_b:.4} [{}]", series.join(" ")));
    let mut worst_c = f64::NEG_INFINITY;
    for m in [60, 70, 80] {
        let biased = cell(rows, Algorithm::Nnls, 20.0, m)?;
        for (alg, mu) in [(Algorithm::Nnls, 0.0), (Algorithm::Bpdn, 0.0), (Algorithm::Bpdn, 20.0)] {
            worst_c = worst_c.max(biased - cell(rows, alg, mu, m)?);
        }
    }
    ok &= worst_c <= 0.05;
    notes.push(format!("(c) largest excess of biased NNLS over the others: {worst_c:.4}"));
    let mut worst_d = 0.0f64;
    for &m in cfg.m_list.iter().filter(|&&m| m >= 60) {
        worst_d = worst_d.max((cell(rows, Algorithm::Bpdn, 20.0, m)? - cell(rows, Algorithm::Bpdn, 0.0, m)?).abs());
    }
    ok &= worst_d <= 0.05;
    notes.push(format!("(d) largest BPDN gap between mu=20 and mu=0: {worst_d:.4}"));
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(1800);
    notes.push(format!("{elapsed:.2?}"));
    check(ok, notes.join("; "))
}

fn bound_validity() -> Verdict {
    let s = run_bound_validation(&nmse_config(), &SolverOptions::default(), 0.5, 200).map_err(|e| e.to_string())?;
    let valid = s.trials.iter().filter(|t| t.cert_valid).count();
    let rate = if s.probe_checked == 0 { 0.0 } else { s.probe_violations as f64 / s.probe_checked as f64 };
    for t in s.trials.iter().filter(|t| t.probe_holds == Some(false)) {
        eprintln!(
            "probe violation: mu={} m={} trial={} error={} total={:?}",
            t.mu, t.m, t.trial_index, t.error, t.probe_total
        );
    }
    check(
        s.certified_violations == 0 && rate < 0.01 && s.probe_checked > 0,
        format!(
            "{} biased trials, {valid} with a valid certificate; probe path {}/{} violations; certified path {} checked, {} violations",
            s.trials.len(),
            s.probe_violations,
            s.probe_checked,
            s.certified_checked,
            s.certified_violations
        ),
    )
}

fn subsets(n: usize, max: usize) -> impl Iterator<Item = Vec<usize>> {
    (0u32..1 << n)
        .filter(move |mask| mask.count_ones() as usize <= max)
        .map(move |mask| (0..n).filter(|&i| mask >> i & 1 == 1).collect())
}

fn pnorm(v: impl Iterator<Item = f64>, p: f64) -> f64 {
    if p.is_infinite() {
        v.fold(0.0, |m, x| m.max(x.abs()))
    } else {
        v.map(|x| x.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

fn geometry_enumeration() -> Verdict {
    let mut rng = rng_from_seed(0xC9);
    let mut worst = 0.0f64;
    let mut checks = 0;
    for trial in 0..200 {
        let n = rng.random_range(1..=8);
        let x = gaussian_vec(&mut rng, n);
        let s = rng.random_range(1..=n);
        for p in [1.0, 1.5, 2.0, 3.0] {
            let brute = subsets(n, s)
                .map(|sup| pnorm((0..n).filter(|i| !sup.contains(i)).map(|i| x[i]), p))
                .fold(f64::INFINITY, f64::min);
            let got = best_s_term_error(&x, s, p).map_err(|e| e.to_string())?;
            worst = worst.max((got - brute).abs());
            checks += 1;
        }

        let v = DVector::from_vec(x.clone());
        let a = DMatrix::from_fn(3, n, |_, _| rng.sample(StandardNormal));
        for q in [1.0, 2.0, 4.0] {
            let params = NspParams { s, q, rho: 0.4, tau: 0.3 };
            let mut min_slack = f64::INFINITY;
            for sup in subsets(n, s) {
                min_slack = min_slack.min(nsp_inequality_holds(&v, &sup, &params, &a).map_err(|e| e.to_string())?.slack);
            }
            let top = nsp_inequality_holds(&v, &top_s_indices(&x, s), &params, &a).map_err(|e| e.to_string())?;
            worst = worst.max((top.slack - min_slack).abs());
            checks += 1;
        }

        let n10 = rng.random_range(1..=10);
        let h = gaussian_vec(&mut rng, n10);
        let s10 = rng.random_range(1..=n10);
        for q in [1.0, 1.5, 2.0, 3.0] {
            let qs = if q == 1.0 { f64::INFINITY } else { q / (q - 1.0) };
            let brute = subsets(n10, s10)
                .filter(|sup| sup.len() == s10)
                .map(|sup| pnorm(sup.iter().map(|&i| h[i]), qs))
                .fold(0.0, f64::max);
            let got = sup_sparse_inner_product(&h, s10, q).map_err(|e| e.to_string())?;
            worst = worst.max((got - brute).abs());
            checks += 1;
        }
        if worst > 1e-10 {
            return Err(format!("trial {trial}: enumeration gap {worst:e}"));
        }
    }
    Ok(format!("{checks} enumerations, largest gap {worst:.1e}"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("oracle equivalence", oracle_equivalence),
        ("debias domination and mu cancellation", debias_domination),
        ("Paley-Zygmund floor", paley_zygmund),
        ("width bound and affine sweep", width_bound),
        ("M+ certificate concentration", mplus_concentration),
        ("threshold formulas", thresholds),
        ("NMSE experiment", nmse_experiment),
        ("bound validity", bound_validity),
        ("geometry enumeration", geometry_enumeration),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let verdict = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match verdict {
            Ok(detail) => println!("PASS {}. {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {}. {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
