use rug::Float;

use super::gamma::{pochhammer, rgamma};
use super::util::{is_nonpos_int, log2_abs, powu, with_cancellation_retry};
use crate::error::{domain, Error, Result};

/// Power series of ₁F₁(a; b; x) at `p` bits, returning the sum and log2 of
/// its largest term. Terminates early when (a)_n hits zero.
fn series(a: &Float, b: &Float, x: &Float, p: u32) -> Result<(Float, f64)> {
    let mut term = Float::with_val(p, 1);
    let mut sum = Float::with_val(p, 1);
    let mut max_log2 = 0.0f64;
    let mut an = Float::with_val(p, a);
    let mut bn = Float::with_val(p, b);
    let xf = x.to_f64().abs();
    let af = a.to_f64();
    let bf = b.to_f64();
    let budget = 1000 + 4 * (p as usize) + (8.0 * xf) as usize;
    let eps_log2 = -f64::from(p) - 2.0;
    for n in 0..budget {
        term *= &an;
        term /= &bn;
        term *= x;
        term /= (n + 1) as u32;
        if term.is_zero() {
            return Ok((sum, max_log2));
        }
        sum += &term;
        let tl = log2_abs(&term);
        max_log2 = max_log2.max(tl);
        an += 1;
        bn += 1;
        let nf = n as f64 + 1.0;
        // only stop once the terms are shrinking for good; a near-zero
        // (a)_n can make one term tiny while later ones grow again
        let settled = nf > af.abs() + bf.abs() + 1.0;
        let shrinking = settled && (af + nf).abs() * xf < (bf + nf).abs() * (nf + 1.0);
        if shrinking && tl < log2_abs(&sum) + eps_log2 {
            return Ok((sum, max_log2));
        }
    }
    Err(Error::NoConvergence(format!(
        "1F1({af}; {bf}; {}) did not converge in {budget} terms",
        x.to_f64()
    )))
}

/// Large-x expansion ₁F₁(a; b; −x) ≈ Γ(b)/Γ(b−a) · x^{−a} Σ (a)_s (a−b+1)_s / (s! x^s).
///
/// The dropped part is of order e^{−x} x^{a−b} Γ(b)/Γ(a); `None` when it is
/// not below `p` bits of the kept part, or when the series starts growing
/// before it reaches that accuracy.
fn negative_asymptotic(a: &Float, b: &Float, x: &Float, p: u32) -> Option<(Float, f64)> {
    let bma = Float::with_val(p, b - a);
    if is_nonpos_int(&bma) || is_nonpos_int(a) {
        return None;
    }
    let xf = x.to_f64();
    let (af, bf) = (a.to_f64(), b.to_f64());
    if xf < f64::from(p) * std::f64::consts::LN_2 + 4.0 * (af.abs() + bf.abs()) + 40.0 {
        return None;
    }
    let lg = |v: &Float| Float::with_val(64, v).ln_abs_gamma().0.to_f64();
    let kept = -af * xf.ln() - lg(&bma);
    let dropped = -xf + (af - bf) * xf.ln() - lg(a);
    if (kept - dropped) / std::f64::consts::LN_2 < f64::from(p) + 8.0 {
        return None;
    }
    let c = Float::with_val(p, a - b) + 1u32;
    let mut an = Float::with_val(p, a);
    let mut cn = c;
    let mut term = Float::with_val(p, 1);
    let mut sum = Float::with_val(p, 1);
    let mut max_log2 = 0.0f64;
    let mut prev = 0.0f64;
    let eps_log2 = -f64::from(p) - 2.0;
    for s in 1..(xf as u64).max(2) {
        term *= &an;
        term *= &cn;
        term /= x;
        term /= s as u32;
        if term.is_zero() {
            break;
        }
        let tl = log2_abs(&term);
        if s > 2 && tl > prev {
            return None;
        }
        sum += &term;
        max_log2 = max_log2.max(tl);
        prev = tl;
        if tl < log2_abs(&sum) + eps_log2 {
            break;
        }
        an += 1u32;
        cn += 1u32;
    }
    let (lg_b, sign_b) = Float::with_val(p, b).ln_abs_gamma();
    let (lg_bma, sign_bma) = bma.ln_abs_gamma();
    let mut l = Float::with_val(p, x.ln_ref()) * Float::with_val(p, -a);
    l += lg_b;
    l -= lg_bma;
    let mut pre = l.exp();
    if sign_b != sign_bma {
        pre = -pre;
    }
    let pl = log2_abs(&pre);
    Some((sum * pre, max_log2 + pl))
}

/// ₁F₁(a; b; z) with negative z routed through Kummer's transformation
/// e^z·₁F₁(b−a; b; −z), which makes every term of the series the same sign
/// after finitely many and turns b − a = −k into a finite polynomial.
/// Far out, the large-argument expansion replaces the O(|z|)-term series.
fn hyp1f1_raw(a: &Float, b: &Float, z: &Float, p: u32) -> Result<(Float, f64)> {
    if z.is_zero() {
        return Ok((Float::with_val(p, 1), 0.0));
    }
    if *z > 0 {
        return series(a, b, z, p);
    }
    if let Some(v) = negative_asymptotic(a, b, &Float::with_val(p, -z), p) {
        return Ok(v);
    }
    let bma = Float::with_val(p, b - a);
    let x = Float::with_val(p, -z);
    let (s, m) = series(&bma, b, &x, p)?;
    let e = Float::with_val(p, z).exp();
    let el = log2_abs(&e);
    Ok((s * e, m + el))
}

/// Kummer's confluent hypergeometric function ₁F₁(a; b; z).
pub(crate) fn hyp1f1(a: &Float, b: &Float, z: &Float, prec: u32) -> Result<Float> {
    if is_nonpos_int(b) {
        return Err(domain(
            "1F1 lower parameter is a non-positive integer; use the regularized form",
        ));
    }
    with_cancellation_retry(prec, |p| hyp1f1_raw(a, b, z, p))
}

/// Regularized ₁F₁(a; b; z)/Γ(b), entire in b.
pub(crate) fn hyp1f1_reg(a: &Float, b: &Float, z: &Float, prec: u32) -> Result<Float> {
    if is_nonpos_int(b) {
        // b = -m: (a)_{m+1} z^{m+1}/(m+1)! · ₁F₁(a+m+1; m+2; z)
        let m = b.to_f64().abs().round() as u32;
        let p = prec + 32;
        let poch = pochhammer(a, m + 1, p);
        if poch.is_zero() || z.is_zero() {
            return Ok(Float::with_val(prec, 0));
        }
        let zp = powu(z, m + 1, p);
        let fact = Float::with_val(p, Float::factorial(m + 1));
        let a2 = Float::with_val(p, a + (m + 1));
        let b2 = Float::with_val(p, m + 2);
        let f = hyp1f1(&a2, &b2, z, p)?;
        return Ok(Float::with_val(prec, poch * zp / fact * f));
    }
    let f = hyp1f1(a, b, z, prec + 16)?;
    let r = rgamma(b, prec + 16);
    Ok(Float::with_val(prec, f * r))
}
