use gpc_core::gpc::GpcParams;
use gpc_core::pk::{concentration, ConcSeries, FitConfig, FitResult, Sample};
use gpc_core::resample::*;
use gpc_core::PrecisionContext;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const RESID: [f64; 14] = [
    0.12, -0.05, 0.31, -0.22, 0.08, 0.01, -0.14, 0.27, -0.09, 0.04, 0.19, -0.31, 0.02, 0.11,
];

fn normals(seed: u64, n: usize, sd: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = Normal::new(0.0, sd).unwrap();
    (0..n).map(|_| d.sample(&mut rng)).collect()
}

fn noisy_dog1(n: usize) -> ConcSeries {
    let p = GpcParams::dog1();
    let ctx = PrecisionContext::new(20);
    let (lo, hi) = ((1.0f64 / 3.0).ln(), 72f64.ln());
    let samples = (0..n)
        .map(|i| {
            let t = (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp();
            let c = concentration(&p, 31.16, t, &ctx).unwrap();
            Sample {
                time_h: t,
                conc_mg_per_l: c * (1.0 + RESID[i % RESID.len()] * 0.3),
            }
        })
        .collect();
    ConcSeries::new(samples, "dog1", 18.248).unwrap()
}

#[test]
fn weibull_small_cases() {
    assert_eq!(weibull_quantile(&[3.0, 1.0, 2.0], 0.5).unwrap(), 2.0);
    // h = 0.25·5 = 1.25
    let q = weibull_quantile(&[10.0, 20.0, 30.0, 40.0], 0.25).unwrap();
    assert!((q - 12.5).abs() < 1e-12);
    assert!(weibull_quantile(&[1.0; 5], 0.95).is_err());
    assert!(weibull_quantile(&[], 0.5).is_err());
    assert!(ci_weibull_quantile(&[1.0; 100], 1.5).is_err());
}

#[test]
fn student_t_at_n_degrees_of_freedom() {
    // t_{0.975, 40} = 2.0210753903062733
    let x = normals(3, 40, 1.0);
    let ci = ci_student_n(&x, 0.95).unwrap();
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let half = 2.0210753903062733 * sd / n.sqrt();
    assert!((ci.upper - mean - half).abs() < 1e-12);
    assert!((mean - ci.lower - half).abs() < 1e-12);
    assert_eq!(ci.method, IntervalMethod::StudentN);

    let flat = ci_student_n(&[2.5; 10], 0.9).unwrap();
    assert_eq!((flat.lower, flat.upper), (2.5, 2.5));
    assert!(ci_student_n(&[1.0], 0.95).is_err());
}

#[test]
fn student_width_shrinks_like_root_n() {
    // same sample repeated: s barely moves, width tracks t_n/√n
    let base = normals(9, 10, 1.0);
    let widths: Vec<f64> = [1usize, 4, 16]
        .iter()
        .map(|&k| {
            let x: Vec<f64> = base.iter().cycle().take(10 * k).copied().collect();
            let ci = ci_student_n(&x, 0.95).unwrap();
            (ci.upper - ci.lower) * ((10 * k) as f64).sqrt()
        })
        .collect();
    for w in widths.windows(2) {
        assert!((w[1] / w[0] - 1.0).abs() < 0.15, "{widths:?}");
    }
}

#[test]
fn dagostino_matches_reference_values() {
    let (k2, p) = dagostino_k2(&RESID).unwrap();
    assert!((k2 - 0.16575604924856244).abs() < 1e-10, "{k2}");
    assert!((p - 0.9204634142438671).abs() < 1e-10, "{p}");
    assert!(dagostino_k2(&RESID[..7]).is_err());
}

#[test]
fn abs_slope_matches_reference_values() {
    let pred: Vec<f64> = (1..=14).map(f64::from).collect();
    let (slope, _, p) = abs_residual_slope(&RESID, &pred).unwrap();
    assert!((slope + 0.0010989010989010987).abs() < 1e-14, "{slope}");
    assert!((p - 0.8806441498438887).abs() < 1e-9, "{p}");
}

#[test]
fn normal_residuals_usually_pass() {
    let pred: Vec<f64> = (0..20).map(|i| 0.5 + f64::from(i)).collect();
    let passed = (0..100u64)
        .filter(|&s| residual_tests(&normals(s, 20, 0.1), &pred).unwrap().passed())
        .count();
    assert!(passed >= 90, "{passed}");
}

#[test]
fn heteroscedastic_raw_residuals_fail_and_proportional_pass() {
    let pred: Vec<f64> = (0..40).map(|i| (f64::from(i) / 6.0).exp()).collect();
    let eps = normals(11, 40, 0.1);
    let obs: Vec<f64> = pred.iter().zip(&eps).map(|(p, e)| p * (1.0 + e)).collect();
    let raw: Vec<f64> = obs.iter().zip(&pred).map(|(o, p)| o - p).collect();
    let rep = residual_tests(&raw, &pred).unwrap();
    assert!(!rep.homoscedastic, "{rep:?}");
    let prop = proportional_residuals(&obs, &pred);
    for (r, e) in prop.iter().zip(&eps) {
        assert!((r - e).abs() < 1e-12);
    }
    assert!(residual_tests(&prop, &pred).unwrap().homoscedastic);
}

#[test]
fn constant_residuals_are_degenerate() {
    let pred: Vec<f64> = (1..=10).map(f64::from).collect();
    let rep = residual_tests(&[0.02; 10], &pred).unwrap();
    assert!(rep.degenerate && !rep.passed());
    assert!(residual_tests(&[0.0; 10], &pred).unwrap().degenerate);
}

#[test]
fn cv_correction() {
    let (cv, sd) = cv_sd_corrected(&[1.0, 3.0]).unwrap();
    // s = √2, c_2 = √(π/2)
    let want = 2f64.sqrt() * (std::f64::consts::PI / 2.0).sqrt();
    assert!((sd - want).abs() < 1e-14);
    assert!((cv - want / 2.0).abs() < 1e-14);
    assert!(cv_sd_corrected(&[-1.0, 1.0]).is_err());
}

#[test]
fn replicates_do_not_depend_on_draw_order() {
    let data = noisy_dog1(10);
    let ctx = PrecisionContext::new(20);
    let fit = FitResult::evaluate(GpcParams::dog1(), 31.16, &data, &ctx).unwrap();
    let forward: Vec<ConcSeries> = (0..4)
        .map(|i| make_replicate(&fit, &data, &mut replicate_rng(7, i), &ctx).unwrap())
        .collect();
    for i in (0..4).rev() {
        let again = make_replicate(&fit, &data, &mut replicate_rng(7, i), &ctx).unwrap();
        assert_eq!(again, forward[i as usize]);
    }
    assert_ne!(forward[0], forward[1]);
    // every replicate value is pred·(1 + some observed residual)
    let pred = fit.predictions(&data, &ctx).unwrap();
    let resid = proportional_residuals(&data.concentrations(), &pred);
    for rep in &forward {
        for (c, p) in rep.concentrations().iter().zip(&pred) {
            assert!(resid.iter().any(|r| (p * (1.0 + r) - c).abs() <= 1e-15 * c));
        }
    }
}

#[test]
fn small_bootstrap_is_deterministic() {
    let data = noisy_dog1(8);
    let ctx = PrecisionContext::new(16);
    let fit = FitResult::evaluate(GpcParams::dog1(), 31.16, &data, &ctx).unwrap();
    let cfg = FitConfig {
        digits: 16,
        restarts: 1,
        tolerance: 1e-3,
        max_iterations: 400,
        ..FitConfig::default()
    };
    let strip = |r: &BootstrapRun| -> Vec<[f64; 5]> {
        r.replicates.iter().map(|x| [x.a, x.b, x.alpha, x.beta_h, x.auc]).collect()
    };
    let one = bootstrap_run(&fit, &data, 2, &cfg, 42).unwrap();
    assert_eq!(one.n, 2);
    assert_eq!(one.replicates.len() + one.failures, 2);
    let two = bootstrap_run(&fit, &data, 2, &cfg, 42).unwrap();
    assert_eq!(strip(&one), strip(&two));
    assert!(bootstrap_run(&fit, &data, 1, &cfg, 42).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weibull_interval_within_range(x in prop::collection::vec(-100.0f64..100.0, 40..120), level in 0.5f64..0.95) {
        let ci = ci_weibull_quantile(&x, level).unwrap();
        let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lo <= ci.lower && ci.lower <= ci.upper && ci.upper <= hi);
    }

    #[test]
    fn student_interval_is_symmetric_and_equivariant(
        x in prop::collection::vec(-10.0f64..10.0, 2..60),
        shift in -5.0f64..5.0,
        scale in 0.1f64..10.0,
    ) {
        let ci = ci_student_n(&x, 0.95).unwrap();
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        prop_assert!(((ci.upper - mean) - (mean - ci.lower)).abs() < 1e-9);
        let y: Vec<f64> = x.iter().map(|v| shift + scale * v).collect();
        let cy = ci_student_n(&y, 0.95).unwrap();
        prop_assert!((cy.lower - (shift + scale * ci.lower)).abs() < 1e-8);
        prop_assert!((cy.upper - (shift + scale * ci.upper)).abs() < 1e-8);
    }

    #[test]
    fn residual_p_values_are_probabilities(seed in 0u64..1000, n in 8usize..60) {
        let pred: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let rep = residual_tests(&normals(seed, n, 0.2), &pred).unwrap();
        prop_assert!((0.0..=1.0).contains(&rep.normality_p));
        prop_assert!((0.0..=1.0).contains(&rep.slope_p));
    }
}
