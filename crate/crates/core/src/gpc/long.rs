//! Long-t series: closed terms (gamma part and csc(πα) asymptote) plus a
//! rapidly decaying sum over k of (β/t)^k-weighted ₁F₁ terms.

use rug::Float;

use super::setup::Setup;
use super::{GpcParams, Quantity, SeriesRun};
use crate::error::{Error, Result};
use crate::mp::context::digits_to_bits;
use crate::mp::hyper::{hyp1f1, hyp1f1_reg};
use crate::mp::incgamma::gamma_p;
use crate::mp::util::{is_nonpos_int, log2_abs};
use crate::mp::MpReal;

const LOG2_10: f64 = std::f64::consts::LOG2_10;
const MAX_TERMS: u64 = 20_000;

/// The csc(πα) asymptote of the requested quantity.
pub(crate) fn asymptote(s: &Setup, q: Quantity) -> Result<Float> {
    let bits = s.bits;
    let mut lk = Float::with_val(bits, &s.a * &s.ln_b);
    lk += Float::with_val(bits, &s.alpha * &s.ln_beta);
    lk -= &s.consts.lg_alpha;
    let k = -(Float::with_val(bits, &s.consts.pi_csc) * lk.exp());
    let amal = Float::with_val(bits, &s.a - &s.alpha);
    let tpow = |e: Float| Float::with_val(bits, e * &s.ln_t).exp();
    let nbt = Float::with_val(bits, -&s.bt);
    // ₁F̃₁(a′; a − α + j; −bt) with the cached 1/Γ(a − α + j)
    let reg = |a: &Float, j: u32| -> Result<Float> {
        let c = Float::with_val(bits, &amal + j);
        if is_nonpos_int(&c) {
            return hyp1f1_reg(a, &c, &nbt, bits);
        }
        let f = hyp1f1(a, &c, &nbt, bits + 16)?;
        Ok(Float::with_val(bits, f * &s.consts.rg_amal[j as usize]))
    };
    Ok(match q {
        Quantity::Density => {
            let f = reg(&s.a, 0)?;
            k * tpow(Float::with_val(bits, &amal - 1u32)) * f
        }
        Quantity::Cdf => {
            let f = reg(&s.a, 1)?;
            k * tpow(amal) * f
        }
        Quantity::SuperCdf => {
            let f = reg(&s.a, 2)?;
            k * tpow(Float::with_val(bits, &amal + 1u32)) * f
        }
        Quantity::Deriv => {
            let f1 = reg(&s.a, 0)?;
            let a1 = Float::with_val(bits, &s.a + 1u32);
            let f2 = reg(&a1, 0)?;
            let inner = Float::with_val(bits, &s.alpha + 1u32) * f1 - Float::with_val(bits, &s.a * &f2);
            -k * tpow(Float::with_val(bits, &amal - 2u32)) * inner
        }
    })
}

/// Closed-form parts of the long-t rewrite, excluding the k-sum.
fn closed_parts(s: &Setup, q: Quantity) -> Result<Vec<Float>> {
    let bits = s.bits;
    let asy = asymptote(s, q)?;
    let mut parts = Vec::with_capacity(4);
    match q {
        Quantity::Density => {
            // b^a e^{−bt} t^{a−1}/Γ(a)
            let mut l = Float::with_val(bits, &s.a * &s.ln_b);
            l -= &s.bt;
            l += Float::with_val(bits, &s.a - 1u32) * &s.ln_t;
            l -= &s.lg_a;
            parts.push(l.exp());
        }
        Quantity::Cdf => {
            parts.push(gamma_p(&s.a, &s.bt, bits)?);
        }
        Quantity::SuperCdf => {
            let a1 = Float::with_val(bits, &s.a + 1u32);
            // t (bt)^a e^{−bt}/Γ(a+1)
            let mut l = Float::with_val(bits, s.bt.ln_ref()) * &s.a;
            l -= &s.bt;
            l -= Float::with_val(bits, a1.ln_gamma_ref());
            parts.push(Float::with_val(bits, &s.t * l.exp()));
            let pa = gamma_p(&s.a, &s.bt, bits)?;
            let c = Float::with_val(bits, &s.alpha * &s.beta) / Float::with_val(bits, &s.alpha - 1u32);
            parts.push(-(c * pa));
            let pa1 = gamma_p(&a1, &s.bt, bits)?;
            let lead = Float::with_val(bits, &s.t - Float::with_val(bits, &s.a / &s.b));
            parts.push(lead * pa1);
        }
        Quantity::Deriv => {
            // b^a t^{a−2} (a − bt − 1) e^{−bt}/Γ(a)
            let mut l = Float::with_val(bits, &s.a * &s.ln_b);
            l -= &s.bt;
            l += Float::with_val(bits, &s.a - 2u32) * &s.ln_t;
            l -= &s.lg_a;
            let c = Float::with_val(bits, &s.a - &s.bt) - 1u32;
            parts.push(l.exp() * c);
        }
    }
    parts.push(asy);
    Ok(parts)
}

/// Signed multiplier of the k-sum.
fn sum_coefficient(s: &Setup, q: Quantity) -> Float {
    let bits = s.bits;
    let mut l = Float::with_val(bits, s.alpha.ln_ref());
    l += Float::with_val(bits, &s.a * &s.ln_b);
    l -= &s.lg_a;
    let (tp, over_a, sign) = match q {
        Quantity::Density => (Float::with_val(bits, &s.a - 1u32), false, -1),
        Quantity::Cdf => (s.a.clone(), true, -1),
        Quantity::SuperCdf => (Float::with_val(bits, &s.a + 1u32), true, -1),
        Quantity::Deriv => (Float::with_val(bits, &s.a - 2u32), false, 1),
    };
    l += tp * &s.ln_t;
    if over_a {
        // Γ(a+1) = a Γ(a)
        l -= Float::with_val(bits, s.a.ln_ref());
    }
    let v = l.exp();
    if sign < 0 {
        -v
    } else {
        v
    }
}

/// The ₁F₁ factor of term k.
fn hyper_factor(s: &Setup, q: Quantity, k: u64, nbt: &Float) -> Result<Float> {
    let bits = s.bits;
    // wide enough that a − k and its integer shifts are exact, so Kummer's
    // b − a lands on an integer and the polynomial case is recognized
    let wide = bits + 80;
    let amk = Float::with_val(wide, &s.a - k);
    Ok(match q {
        Quantity::Density => hyp1f1(&s.a, &amk, nbt, bits)?,
        Quantity::Cdf => hyp1f1(&s.a, &Float::with_val(wide, &amk + 1u32), nbt, bits)?,
        Quantity::SuperCdf => {
            let d = Float::with_val(wide, &amk + 1u32);
            hyp1f1(&s.a, &Float::with_val(wide, &amk + 2u32), nbt, bits)? / d
        }
        Quantity::Deriv => {
            let first = Float::with_val(bits, &s.bt * hyp1f1(&s.a, &amk, nbt, bits)?);
            let c = Float::with_val(wide, &amk - 1u32);
            let am1 = Float::with_val(wide, &s.a - 1u32);
            // c·₁F₁(a−1; c; z), continued to c = 0 as (a−1)·z·₁F₁(a; 2; z)
            let second = if c.is_zero() {
                let two = Float::with_val(bits, 2);
                Float::with_val(bits, &am1 * nbt) * hyp1f1(&s.a, &two, nbt, bits)?
            } else {
                Float::with_val(bits, &c * hyp1f1(&am1, &c, nbt, bits)?)
            };
            first - second
        }
    })
}

pub(crate) fn run(
    p: &GpcParams,
    t: &MpReal,
    q: Quantity,
    digits: u32,
    target: u32,
    mut record: Option<&mut Vec<Float>>,
) -> Result<SeriesRun> {
    let bits = digits_to_bits(digits);
    let s = Setup::new(p, t, bits);
    let parts = closed_parts(&s, q)?;
    let mut closed = Float::with_val(bits, 0);
    let mut max_part = f64::NEG_INFINITY;
    for v in &parts {
        closed += v;
        max_part = max_part.max(log2_abs(v));
    }
    let threshold = -f64::from(target) * LOG2_10 + log2_abs(&closed).min(0.0);
    let coef = sum_coefficient(&s, q);
    let coef_log2 = log2_abs(&coef);
    let nbt = Float::with_val(bits, -&s.bt);
    // running (β/t)^k/k! and Pochhammer factor
    let mut wk = Float::with_val(bits, 1);
    let mut poch = Float::with_val(bits, 1);
    let poch_base = match q {
        Quantity::Density | Quantity::Deriv => Float::with_val(bits, 1u32 - &s.a),
        Quantity::Cdf | Quantity::SuperCdf => Float::with_val(bits, -&s.a),
    };
    let k0 = if q == Quantity::SuperCdf { 2 } else { 1 };
    let mut sum = Float::with_val(bits, 0);
    let mut max_term = f64::NEG_INFINITY;
    let mut terms = 0u64;
    let mut k = 0u64;
    loop {
        k += 1;
        wk *= &s.w;
        wk /= k;
        poch *= Float::with_val(bits, &poch_base + (k - 1));
        if k < k0 {
            continue;
        }
        terms += 1;
        let term = if poch.is_zero() {
            Float::with_val(bits, 0)
        } else {
            let kma = Float::with_val(bits, k) - &s.alpha;
            let r = Float::with_val(bits, &wk * &poch) / kma;
            r * hyper_factor(&s, q, k, &nbt)?
        };
        let scaled_log2 = log2_abs(&term) + coef_log2;
        if let Some(rec) = record.as_deref_mut() {
            rec.push(Float::with_val(bits, &term * &coef));
        }
        max_term = max_term.max(scaled_log2);
        sum += &term;
        if term.is_zero() || scaled_log2 < threshold {
            break;
        }
        if terms >= MAX_TERMS {
            return Err(Error::NoConvergence(format!(
                "long-t series at t={} after {terms} terms",
                s.t.to_f64()
            )));
        }
    }
    let tail = sum * &coef;
    let value = closed + &tail;
    Ok(SeriesRun {
        value,
        terms,
        max_term_log2: max_term,
        max_part_log2: max_part.max(max_term).max(log2_abs(&tail)),
        digits,
    })
}
