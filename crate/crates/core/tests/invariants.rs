use proptest::prelude::*;

use nnlscs::certificates::{
    certify_mplus_biased, debiased_plugin_bound, naive_plugin_bound, sample_cone_vector, tail_probabilities,
    threshold_value, sample_complexity, ThresholdKind,
};
use nnlscs::ensembles::{
    debiased_matrix, generate_matrix, generate_noise, generate_signal, EnsembleKind, EnsembleSpec, RowSampler,
    SignalKind, SignalSpec,
};
use nnlscs::geometry::{nsp_inequality_holds, sup_sparse_inner_product, top_s_indices, NspParams};
use nnlscs::seeding::rng_from_seed;
use nnlscs::solvers::{oracle_nnls, solve_nnls, SolverOptions};
use nnlscs::{DMatrix, DVector};

fn kind_of(flag: bool) -> EnsembleKind {
    if flag {
        EnsembleKind::Gaussian
    } else {
        EnsembleKind::Rademacher
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generators_are_pure(seed in any::<u64>(), m in 1usize..8, n in 1usize..8, mu in 0.0f64..10.0, g in any::<bool>()) {
        let spec = EnsembleSpec::new(kind_of(g), mu, m, n, seed);
        prop_assert_eq!(generate_matrix(&spec).unwrap(), generate_matrix(&spec).unwrap());
        let sig = SignalSpec { kind: SignalKind::HalfNormal, n, s: n.min(3), seed };
        prop_assert_eq!(generate_signal(&sig).unwrap(), generate_signal(&sig).unwrap());
        prop_assert_eq!(generate_noise(m, 0.5, seed).unwrap(), generate_noise(m, 0.5, seed).unwrap());
    }

    #[test]
    fn bias_is_an_exact_shift(seed in any::<u64>(), m in 1usize..8, n in 1usize..8, mu in 0.0f64..40.0, g in any::<bool>()) {
        let centered = generate_matrix(&EnsembleSpec::new(kind_of(g), 0.0, m, n, seed)).unwrap();
        let biased = generate_matrix(&EnsembleSpec::new(kind_of(g), mu, m, n, seed)).unwrap();
        prop_assert_eq!(biased, centered.map(|c| c + mu));
    }

    #[test]
    fn nnls_matches_oracle(seed in any::<u64>(), m in 3usize..11, n in 2usize..13, mu in 0.0f64..4.0, g in any::<bool>()) {
        let a = generate_matrix(&EnsembleSpec::new(kind_of(g), mu, m, n, seed)).unwrap();
        let y = generate_noise(m, 1.0, seed ^ 0xABCD).unwrap();
        let got = solve_nnls(&a, &y, &SolverOptions::default()).unwrap();
        let want = oracle_nnls(&a, &y).unwrap();
        prop_assert!(got.x_hat.iter().all(|&v| v >= 0.0));
        prop_assert!((got.residual_norm - want.residual_norm).abs() <= 1e-8 * (1.0 + y.norm()));
    }

    #[test]
    fn top_s_support_decides_nsp(seed in any::<u64>(), n in 1usize..9, s_frac in 0.0f64..1.0, q in 1.0f64..4.0,
                                 rho in 0.05f64..0.95, tau in 0.0f64..2.0) {
        let s = 1 + ((n - 1) as f64 * s_frac) as usize;
        let v = generate_noise(n, 1.0, seed).unwrap();
        let a = generate_matrix(&EnsembleSpec::new(EnsembleKind::Gaussian, 0.0, 2, n, seed ^ 1)).unwrap();
        let params = NspParams { s, q, rho, tau: tau + 1e-3 };
        let top = nsp_inequality_holds(&v, &top_s_indices(v.as_slice(), s), &params, &a).unwrap();
        let mut all_hold = true;
        let mut min_slack = f64::INFINITY;
        for mask in 0u32..1 << n {
            if mask.count_ones() as usize > s {
                continue;
            }
            let sup: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
            let c = nsp_inequality_holds(&v, &sup, &params, &a).unwrap();
            all_hold &= c.holds;
            min_slack = min_slack.min(c.slack);
        }
        prop_assert!((top.slack - min_slack).abs() <= 1e-10);
        if (top.slack).abs() > 1e-10 {
            prop_assert_eq!(all_hold, top.holds);
        }
    }

    #[test]
    fn cone_members_obey_the_width_sandwich(seed in any::<u64>(), n in 2usize..30, s_frac in 0.0f64..1.0,
                                            rho in 0.1f64..0.9, q in 1.0f64..4.0) {
        let s = 1 + ((n - 1) as f64 * s_frac) as usize;
        let h = generate_noise(n, 1.0, seed).unwrap();
        let cap = 3.0 / rho * sup_sparse_inner_product(h.as_slice(), s, q).unwrap();
        let mut rng = rng_from_seed(seed ^ 7);
        for _ in 0..20 {
            if let Some(v) = sample_cone_vector(n, s, rho, q, &mut rng) {
                let dot: f64 = v.iter().zip(h.iter()).map(|(a, b)| a * b).sum();
                prop_assert!(dot <= cap * (1.0 + 1e-12), "{} > {}", dot, cap);
            }
        }
    }

    #[test]
    fn paired_rows_forget_mu(seed in any::<u64>(), m in 2usize..12, n in 1usize..10, mu in 0.0f64..50.0, g in any::<bool>()) {
        let base = EnsembleSpec::new(kind_of(g), 0.0, m, n, seed);
        let shifted = base.clone().with_mu(mu);
        let b0 = debiased_matrix(&base).unwrap();
        let b1 = debiased_matrix(&shifted).unwrap();
        prop_assert!(b0.iter().zip(b1.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
        let z = vec![1.0 / (n as f64).sqrt(); n];
        let t0 = tail_probabilities(&RowSampler::debiased(&base), &z, &[0.3], 200, seed).unwrap();
        let t1 = tail_probabilities(&RowSampler::debiased(&shifted), &z, &[0.3], 200, seed).unwrap();
        prop_assert_eq!(t0, t1);
    }

    #[test]
    fn biased_witness_identity(seed in any::<u64>(), m in 8usize..64, n in 1usize..40, mu in 1.0f64..30.0) {
        let a = generate_matrix(&EnsembleSpec::new(EnsembleKind::Gaussian, mu, m, n, seed)).unwrap();
        let cert = certify_mplus_biased(&a, mu).unwrap();
        if cert.valid {
            let wmin = cert.w.iter().copied().fold(f64::INFINITY, f64::min);
            let wmax = cert.w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(wmin > 0.0);
            prop_assert!((cert.kappa_upper.unwrap() * wmin - wmax).abs() <= f64::EPSILON * wmax);
        } else {
            prop_assert!(cert.kappa_upper.is_none());
        }
    }

    #[test]
    fn debiased_threshold_is_the_plugin_sign_change(s in 1usize..50, extra in 0usize..500, q in 2.0f64..6.0, rho in 0.05f64..0.99) {
        let n = s + extra;
        let m = sample_complexity(ThresholdKind::Debiased, s, n, q, rho, 0.0).unwrap() as usize;
        prop_assert!(debiased_plugin_bound(m + 1, s, n, q, rho).unwrap() > 0.0);
        prop_assert!(debiased_plugin_bound(m - 2, s, n, q, rho).unwrap() < 0.0);
    }

    // The plug-in bound turns positive at four times the printed naive threshold.
    #[test]
    fn naive_plugin_sign_change_is_four_times_the_printed_threshold(s in 1usize..50, extra in 0usize..500,
                                                                    rho in 0.05f64..0.99, mu in 0.0f64..20.0) {
        let n = s + extra;
        let v = threshold_value(ThresholdKind::NaiveBiased, s, n, 2.0, rho, mu).unwrap();
        let m = (4.0 * v).ceil() as usize;
        prop_assert!(naive_plugin_bound(m + 1, s, n, rho, mu).unwrap() > 0.0);
        prop_assert!(naive_plugin_bound(m - 2, s, n, rho, mu).unwrap() < 0.0);
    }

    #[test]
    fn nnls_is_scale_equivariant(seed in any::<u64>(), c in 0.01f64..100.0) {
        let a = generate_matrix(&EnsembleSpec::new(EnsembleKind::Gaussian, 1.0, 8, 6, seed)).unwrap();
        let y = generate_noise(8, 1.0, seed ^ 3).unwrap();
        let opts = SolverOptions::default();
        let x1 = solve_nnls(&a, &y, &opts).unwrap().x_hat_vector();
        let x2 = solve_nnls(&(&a * c), &(&y * c), &opts).unwrap().x_hat_vector();
        prop_assert!((x1 - x2).amax() <= 1e-8 * (1.0 + y.norm()));
    }
}

#[test]
fn exact_recovery_without_noise() {
    let a = generate_matrix(&EnsembleSpec::new(EnsembleKind::Gaussian, 20.0, 80, 100, 5)).unwrap();
    let x0 = generate_signal(&SignalSpec { kind: SignalKind::Binary, n: 100, s: 5, seed: 6 }).unwrap();
    let y: DVector<f64> = &a * &x0;
    let x = solve_nnls(&a, &y, &SolverOptions::default()).unwrap().x_hat_vector();
    assert!((x - &x0).norm() / x0.norm() <= 1e-6);
    // Small case cross-checked with the exhaustive oracle.
    let a: DMatrix<f64> = generate_matrix(&EnsembleSpec::new(EnsembleKind::Gaussian, 20.0, 8, 10, 5)).unwrap();
    let x0 = generate_signal(&SignalSpec { kind: SignalKind::Binary, n: 10, s: 2, seed: 6 }).unwrap();
    let o = oracle_nnls(&a, &(&a * &x0)).unwrap();
    assert!((o.x_hat_vector() - x0).amax() <= 1e-9);
}
