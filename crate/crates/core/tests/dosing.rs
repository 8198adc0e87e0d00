use gpc_core::dosing::*;
use gpc_core::gpc::{eval_f64, GpcParams, Quantity};
use gpc_core::pk::FitResult;
use gpc_core::PrecisionContext;

fn dog1_fit() -> FitResult {
    FitResult {
        params: GpcParams::dog1(),
        auc: 31.16,
        clearance: 9.76,
        rrms: 0.087,
        r_squared: 0.9987,
        iterations: 0,
        converged: true,
        dose_mg_kg: 18.248,
    }
}

fn ctx() -> PrecisionContext {
    PrecisionContext::new(30)
}

#[test]
fn single_dose_regimen_is_the_single_dose_curve() {
    let fit = dog1_fit();
    let r = DoseRegimen::new(18.248, 24.0, 1).unwrap();
    for t in [0.001, 0.0075, 0.02, 1.0, 23.9, 24.0, 100.0, 1000.0] {
        let multi = conc_multidose(&fit, &r, t, &ctx()).unwrap();
        let single = fit.concentration(t, &ctx()).unwrap();
        assert!((multi - single).abs() <= 1e-15 * single.abs(), "{t}");
    }
    assert_eq!(conc_multidose(&fit, &r, -1.0, &ctx()).unwrap(), 0.0);
}

#[test]
fn dose_linearity() {
    let fit = dog1_fit();
    let r1 = DoseRegimen::new(18.248, 12.0, 4).unwrap();
    let r2 = DoseRegimen::new(3.0 * 18.248, 12.0, 4).unwrap();
    for t in [0.5, 13.0, 30.0, 47.9, 80.0] {
        let c1 = conc_multidose(&fit, &r1, t, &ctx()).unwrap();
        let c2 = conc_multidose(&fit, &r2, t, &ctx()).unwrap();
        assert!((c2 / c1 - 3.0).abs() < 1e-13, "{t}");
        let m1 = retained_doses(&fit, &r1, t, &ctx()).unwrap();
        let m2 = retained_doses(&fit, &r2, t, &ctx()).unwrap();
        assert_eq!(m1, m2);
        // mass in mg/kg scales with the dose
        assert!((m2 * r2.dose_mg_kg / (m1 * r1.dose_mg_kg) - 3.0).abs() < 1e-13);
    }
}

#[test]
fn mass_balance() {
    let fit = dog1_fit();
    let r = DoseRegimen::new(18.248, 24.0, 5).unwrap();
    for t_end in [24.0 * 5.0, 130.0, 500.0] {
        let retained = retained_doses(&fit, &r, t_end, &ctx()).unwrap();
        let eliminated: f64 = (0..5)
            .map(|j| eval_f64(&fit.params, t_end - 24.0 * f64::from(j), Quantity::Cdf, &ctx()).unwrap())
            .sum();
        assert!((5.0 - retained - eliminated).abs() < 1e-13, "{t_end}");
    }
}

#[test]
fn one_dose_with_long_interval_is_mostly_eliminated() {
    let fit = dog1_fit();
    let mut last = f64::INFINITY;
    for tau in [24.0, 1e3, 1e5, 1e7] {
        let r = DoseRegimen::new(18.248, tau, 1).unwrap();
        let s = interval_summary(&fit, &r, &ctx()).unwrap();
        let mean = s.intervals[0].mean_doses_retained;
        assert!(mean < last && mean > 0.0);
        last = mean;
    }
    assert!(last < 0.01, "{last}");
}

#[test]
fn interval_mean_matches_trapezoid_average() {
    let fit = dog1_fit();
    let r = DoseRegimen::new(18.248, 24.0, 2).unwrap();
    let s = interval_summary(&fit, &r, &ctx()).unwrap();
    let c = PrecisionContext::new(20);
    let n = 10_000;
    let (start, tau) = (24.0, 24.0);
    let mut acc = 0.0;
    let mut prev = retained_doses(&fit, &r, start, &c).unwrap();
    for i in 1..=n {
        let t = start + tau * f64::from(i) / f64::from(n);
        // the end point belongs to this interval, before the next dose
        let cur = if i == n {
            s.intervals[1].trough_doses_retained
        } else {
            retained_doses(&fit, &r, t, &c).unwrap()
        };
        acc += 0.5 * (prev + cur);
        prev = cur;
    }
    let trap = acc / f64::from(n);
    let exact = s.intervals[1].mean_doses_retained;
    assert!((trap - exact).abs() < 1e-6, "{trap} {exact}");
}

#[test]
fn summary_shape_and_orderings() {
    let fit = dog1_fit();
    let r = DoseRegimen::new(18.248, 24.0, 4).unwrap();
    let s = interval_summary(&fit, &r, &ctx()).unwrap();
    assert_eq!(s.intervals.len(), 4);
    for (k, iv) in s.intervals.iter().enumerate() {
        assert_eq!(iv.index as usize, k + 1);
        assert!(iv.peak_conc >= iv.trough_conc && iv.trough_conc >= 0.0);
        assert!(iv.peak_doses_retained >= iv.mean_doses_retained);
        assert!(iv.mean_doses_retained >= iv.trough_doses_retained);
        assert!(iv.peak_time_h > iv.start_h && iv.peak_time_h < iv.start_h + 24.0);
    }
    for w in s.intervals.windows(2) {
        assert!(w[1].trough_conc > w[0].trough_conc);
        assert!(w[1].mean_doses_retained > w[0].mean_doses_retained);
    }
    assert!((s.doses_eliminated - (4.0 - s.intervals[3].mean_doses_retained)).abs() < 1e-15);
}

#[test]
fn retained_doses_fall_between_doses_and_concentration_is_unimodal() {
    let fit = dog1_fit();
    let r = DoseRegimen::new(18.248, 24.0, 3).unwrap();
    let grid: Vec<f64> = (0..400).map(|i| 24.0 + 24.0 * f64::from(i) / 400.0).collect();
    let m: Vec<f64> = grid.iter().map(|&t| retained_doses(&fit, &r, t, &ctx()).unwrap()).collect();
    assert!(m.windows(2).all(|w| w[1] <= w[0]));
    // finer near the dose, where the peak sits
    let fine: Vec<f64> = (1..2000).map(|i| 24.0 + 0.5 * f64::from(i) / 2000.0).chain(grid[1..].iter().copied().filter(|&t| t > 24.5)).collect();
    let c: Vec<f64> = fine.iter().map(|&t| conc_multidose(&fit, &r, t, &ctx()).unwrap()).collect();
    let local_max = c.windows(3).filter(|w| w[1] > w[0] && w[1] > w[2]).count();
    assert_eq!(local_max, 1);
}

#[test]
fn bad_regimens_are_rejected() {
    let fit = dog1_fit();
    let bad = DoseRegimen {
        dose_mg_kg: -1.0,
        interval_h: 24.0,
        count: 2,
    };
    assert!(conc_multidose(&fit, &bad, 1.0, &ctx()).is_err());
    assert!(interval_summary(&fit, &bad, &ctx()).is_err());
}
