use gpc_core::gpc::*;
use gpc_core::mp::{MpReal, PrecisionContext};
use rug::Float;

const BITS: u32 = 800;

fn t_h(v: f64) -> MpReal {
    MpReal::with_digits(v, 200)
}

fn dec(s: &str) -> MpReal {
    MpReal::parse(s, 200).unwrap()
}

fn rel(got: &MpReal, want: &MpReal) -> f64 {
    let d = Float::with_val(BITS, got.as_float() - want.as_float()).abs();
    (d / Float::with_val(BITS, want.as_float().abs_ref())).to_f64()
}

fn ctx() -> PrecisionContext {
    PrecisionContext::default()
}

const ALL: [Quantity; 4] = [Quantity::Density, Quantity::Cdf, Quantity::SuperCdf, Quantity::Deriv];

#[test]
fn everything_is_zero_up_to_beta() {
    let p = GpcParams::dog1();
    let beta = MpReal::from_float(p.beta().clone());
    let half = MpReal::from_float(Float::with_val(BITS, p.beta() / 2u32));
    for t in [&half, &beta, &t_h(0.0), &t_h(-3.0)] {
        for q in ALL {
            let r = gpc_quantity(&p, t, q, &ctx()).unwrap();
            assert!(r.value.is_zero());
            assert_eq!(r.diagnostics.branch, Branch::Zero);
            assert!(gpc_short_quantity(&p, t, q, &ctx()).unwrap().value.is_zero());
            assert!(gpc_long_quantity(&p, t, q, &ctx()).unwrap().value.is_zero());
        }
        assert!(conv_oracle(&p, t, &ctx()).unwrap().is_zero());
    }
}

#[test]
fn dispatch_cuts_at_four_beta() {
    let p = GpcParams::dog1();
    let b = p.beta().clone();
    let at = |m: u32| MpReal::from_float(Float::with_val(b.prec(), &b * m));
    assert_eq!(gpc_eval(&p, &at(2), &ctx()).unwrap().diagnostics.branch, Branch::ShortT);
    assert_eq!(gpc_eval(&p, &at(4), &ctx()).unwrap().diagnostics.branch, Branch::LongT);
    let far = gpc_eval(&p, &t_h(4396.0), &ctx()).unwrap();
    assert_eq!(far.diagnostics.branch, Branch::LongT);
    assert_eq!(far.diagnostics.terms_summed, 1);
}

#[test]
fn non_finite_time_is_rejected() {
    let p = GpcParams::dog1();
    let nan = MpReal::from_f64(f64::NAN);
    assert!(gpc_eval(&p, &nan, &ctx()).is_err());
}

#[test]
fn diagnostics_invariants() {
    let p = GpcParams::dog1();
    for t in [0.01, 0.05, 1.0, 100.0] {
        for q in ALL {
            let d = gpc_quantity(&p, &t_h(t), q, &ctx()).unwrap().diagnostics;
            assert!(d.terms_summed >= 1);
            assert!(d.working_precision >= 65);
            assert!(d.achieved_digits >= 60, "{t} {q:?} {}", d.achieved_digits);
        }
    }
}

#[test]
fn short_time_density_matches_quadrature_to_30_digits() {
    let p = GpcParams::dog1();
    let t = t_h(0.02);
    let got = gpc_short(&p, &t, &ctx()).unwrap().value;
    let want = conv_oracle(&p, &t, &PrecisionContext::new(40)).unwrap();
    assert!(rel(&got, &want) < 1e-30, "{}", rel(&got, &want));
}

#[test]
fn twelve_hour_long_matches_quadrature() {
    let p = GpcParams::dog1();
    let t = t_h(12.0);
    let got = gpc_long(&p, &t, &ctx()).unwrap().value;
    let want = conv_oracle(&p, &t, &PrecisionContext::new(30)).unwrap();
    assert!(rel(&got, &want) < 1e-25);
}

#[test]
fn short_and_long_agree_for_every_quantity() {
    let p = GpcParams::dog1();
    for t in [0.05, 0.5, 24.0] {
        for q in ALL {
            let s = gpc_short_quantity(&p, &t_h(t), q, &ctx()).unwrap().value;
            let l = gpc_long_quantity(&p, &t_h(t), q, &ctx()).unwrap().value;
            assert!(rel(&s, &l) < 1e-60, "{t} {q:?} {}", rel(&s, &l));
        }
    }
}

#[test]
fn cdf_is_a_distribution_function() {
    let p = GpcParams::dog1();
    let mut last = 0.0;
    let mut t = 0.008;
    while t < 1e5 {
        let v = eval_f64(&p, t, Quantity::Cdf, &ctx()).unwrap();
        assert!((0.0..=1.0).contains(&v));
        assert!(v >= last, "{t}");
        last = v;
        t *= 1.7;
    }
}

#[test]
fn survival_has_pareto_tail() {
    let p = GpcParams::dog1();
    let t = 1e5;
    let surv = 1.0 - eval_f64(&p, t, Quantity::Cdf, &ctx()).unwrap();
    let pf = p.to_f64();
    let pareto = (pf.beta_h / t).powf(pf.alpha);
    assert!((surv / pareto - 1.0).abs() < 0.05, "{surv} {pareto}");
}

#[test]
fn supercdf_is_increasing_convex_with_unit_slope_far_out() {
    let p = GpcParams::dog1();
    let grid: Vec<f64> = (0..30).map(|i| 0.008 * 1.6f64.powi(i)).collect();
    let v: Vec<f64> = grid.iter().map(|&t| eval_f64(&p, t, Quantity::SuperCdf, &ctx()).unwrap()).collect();
    for i in 1..v.len() {
        assert!(v[i] >= v[i - 1] && v[i] >= 0.0);
    }
    for i in 1..v.len() - 1 {
        let s1 = (v[i] - v[i - 1]) / (grid[i] - grid[i - 1]);
        let s2 = (v[i + 1] - v[i]) / (grid[i + 1] - grid[i]);
        assert!(s2 >= s1, "not convex at {}", grid[i]);
    }
    let slope = |t: f64| {
        let (a, b) = (t_h(t), t_h(t + 1.0));
        let fa = gpc_supercdf(&p, &a, &ctx()).unwrap().value;
        let fb = gpc_supercdf(&p, &b, &ctx()).unwrap().value;
        Float::with_val(BITS, fb.as_float() - fa.as_float()).to_f64()
    };
    let (s4, s8) = (slope(1e4), slope(1e8));
    assert!(s4 < s8 && s8 < 1.0 && s8 > 0.99, "{s4} {s8}");
}

#[test]
fn supercdf_matches_quadrature_of_cdf() {
    let p = GpcParams::dog1();
    let ev = PrecisionContext::new(30);
    let got = gpc_supercdf(&p, &t_h(72.0), &ctx()).unwrap().value;
    let want = integrate_quantity(&p, Quantity::Cdf, &t_h(0.0), &t_h(72.0), &ev, 25).unwrap();
    assert!(rel(&got, &want) < 1e-20, "{}", rel(&got, &want));
}

/// Eighth-order central difference at 100 digits.
fn central_difference(p: &GpcParams, t: f64, q: Quantity) -> MpReal {
    let c = PrecisionContext::new(100);
    let h = Float::with_val(BITS, 1e-10);
    let w = [(1, 4, 5), (2, -1, 5), (3, 4, 105), (4, -1, 280)];
    let mut acc = Float::with_val(BITS, 0);
    let t = Float::with_val(BITS, t);
    for (k, num, den) in w {
        let d = Float::with_val(BITS, &h * k);
        let up = gpc_quantity(p, &MpReal::from_float(Float::with_val(BITS, &t + &d)), q, &c).unwrap();
        let dn = gpc_quantity(p, &MpReal::from_float(Float::with_val(BITS, &t - &d)), q, &c).unwrap();
        acc += Float::with_val(BITS, up.value.as_float() - dn.value.as_float()) * Float::with_val(BITS, num) / den;
    }
    MpReal::from_float(acc / h)
}

#[test]
fn derivative_matches_finite_differences() {
    let p = GpcParams::dog1();
    for t in [0.05, 1.0, 30.0] {
        let got = gpc_deriv(&p, &t_h(t), &ctx()).unwrap().value;
        let want = central_difference(&p, t, Quantity::Density);
        assert!(rel(&got, &want) < 1e-20, "{t}: {}", rel(&got, &want));
    }
    assert!(gpc_deriv(&p, &t_h(72.0), &ctx()).unwrap().value.to_f64() < 0.0);
}

#[test]
fn density_is_derivative_of_cdf() {
    let p = GpcParams::dog1();
    for t in [0.02, 3.0] {
        let got = gpc_eval(&p, &t_h(t), &ctx()).unwrap().value;
        let want = central_difference(&p, t, Quantity::Cdf);
        assert!(rel(&got, &want) < 1e-20);
    }
}

#[test]
fn long_terms_at_100h_are_negative_and_shrinking() {
    let p = GpcParams::dog1();
    let terms = series_terms(&p, &t_h(100.0), Quantity::Density, Series::Long, 75, 65).unwrap();
    assert!(terms.len() >= 2);
    for w in terms.windows(2) {
        assert!(w[0].to_f64() < 0.0 && w[1].to_f64() < 0.0);
        assert!(w[1].as_float().clone().abs() < w[0].as_float().clone().abs());
    }
}

#[test]
fn short_terms_are_bounded_by_exponential() {
    let p = GpcParams::dog1();
    let pf = p.to_f64();
    for t in [0.02, 0.09, 5.0] {
        let terms = series_terms(&p, &t_h(t), Quantity::Density, Series::Short, 120, 65).unwrap();
        let abs_sum: f64 = terms.iter().map(|v| v.to_f64().abs()).sum();
        let bound = terms[0].to_f64().abs() * (pf.b * (t - pf.beta_h)).exp();
        assert!(abs_sum <= bound * (1.0 + 1e-12), "{t}");
    }
}

#[test]
fn asymptote_is_the_long_value_far_out() {
    let p = GpcParams::dog1();
    let t = t_h(4396.0);
    let asy = gpc_asymptote(&p, &t, &ctx()).unwrap();
    let v = gpc_eval(&p, &t, &ctx()).unwrap().value;
    assert!(rel(&asy, &v) < 1e-60);
    // −π csc(πα)/Γ(α) < 0 and ₁F̃₁(a; a−α; −bt) → 1/Γ(a−α) > 0 as t → 0, so the
    // asymptote is negative near β and only positive once the ₁F̃₁
    // turns, with a single sign change
    let mut x = 0.0071;
    let mut signs = Vec::new();
    while x < 1e6 {
        let a = gpc_asymptote(&p, &t_h(x), &ctx()).unwrap().to_f64();
        assert!(a.is_finite(), "{x}");
        signs.push(a > 0.0);
        x *= 3.0;
    }
    assert!(!signs[0] && *signs.last().unwrap());
    assert_eq!(signs.windows(2).filter(|w| w[0] != w[1]).count(), 1);
}

#[test]
fn asymptote_gap_is_gamma_term_plus_k_sum() {
    let p = GpcParams::dog1();
    let t = t_h(12.0);
    let asy = gpc_asymptote(&p, &t, &ctx()).unwrap();
    let v = gpc_eval(&p, &t, &ctx()).unwrap().value;
    let terms = series_terms(&p, &t, Quantity::Density, Series::Long, 75, 65).unwrap();
    let mut sum = Float::with_val(BITS, 0);
    for k in &terms {
        sum += k.as_float();
    }
    // gamma density b^a t^{a−1} e^{−bt}/Γ(a), computed independently
    let (a, b) = (dec(&p.to_decimal_strings(200)[0]), dec(&p.to_decimal_strings(200)[1]));
    let (a, b, tf) = (a.as_float(), b.as_float(), t.as_float());
    let ln = Float::with_val(BITS, a * Float::with_val(BITS, b.ln_ref()))
        + Float::with_val(BITS, a - 1u32) * Float::with_val(BITS, tf.ln_ref())
        - Float::with_val(BITS, b * tf)
        - Float::with_val(BITS, a.ln_gamma_ref());
    sum += ln.exp();
    let gap = Float::with_val(BITS, asy.as_float() - v.as_float());
    let want = MpReal::from_float(-sum);
    assert!(rel(&MpReal::from_float(gap), &want) < 1e-55);
}

#[test]
fn half_life_behaviour() {
    let p = GpcParams::dog1();
    let c = ctx();
    let peak = peak_time(&p, &c).unwrap();
    assert!(matches!(half_life(&p, &peak, &c), Err(gpc_core::Error::Singular(_))));
    assert!(half_life(&p, &t_h(72.0), &c).unwrap().to_f64() > 0.0);
    let alpha = p.to_f64().alpha;
    let err = |t: f64| {
        let h = half_life(&p, &t_h(t), &c).unwrap().to_f64();
        (h / (t * std::f64::consts::LN_2 / (alpha + 1.0)) - 1.0).abs()
    };
    let (e4, e6) = (err(1e4), err(1e6));
    assert!(e4 < 1e-3 && e6 < e4, "{e4} {e6}");
}

#[test]
fn peak_is_stationary_and_dominant() {
    let p = GpcParams::dog1();
    let c = ctx();
    let peak = peak_time(&p, &c).unwrap();
    let tp = peak.to_f64();
    let fp = gpc_eval(&p, &peak, &c).unwrap().value.to_f64();
    let d = gpc_deriv(&p, &peak, &c).unwrap().value.to_f64();
    assert!((d * tp / fp).abs() < 1e-9);
    let mut t = 0.00695;
    while t < 100.0 {
        assert!(eval_f64(&p, t, Quantity::Density, &c).unwrap() <= fp, "{t}");
        t *= 1.05;
    }
    // golden-section maximization of the density as an independent check
    let f = |t: f64| eval_f64(&p, t, Quantity::Density, &c).unwrap();
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (p.to_f64().beta_h, 1.0);
    while hi - lo > 1e-12 {
        let (x1, x2) = (hi - g * (hi - lo), lo + g * (hi - lo));
        if f(x1) < f(x2) {
            lo = x1;
        } else {
            hi = x2;
        }
    }
    assert!(((lo + hi) / 2.0 / tp - 1.0).abs() < 1e-6);
}

#[test]
fn evaluation_is_reentrant_across_threads() {
    let p = GpcParams::dog1();
    let ts = [0.01, 0.02, 0.5, 12.0, 300.0];
    let serial: Vec<f64> = ts.iter().map(|&t| eval_f64(&p, t, Quantity::Density, &ctx()).unwrap()).collect();
    let handles: Vec<_> = ts
        .iter()
        .rev()
        .map(|&t| {
            let p = p.clone();
            std::thread::spawn(move || eval_f64(&p, t, Quantity::Density, &ctx()).unwrap())
        })
        .collect();
    let mut par: Vec<f64> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    par.reverse();
    assert_eq!(serial, par);
}
