use std::cmp::Ordering;

use rug::Float;

use super::util::{is_nonpos_int, GUARD_BITS};
use crate::error::{domain, Result};

/// ln Γ(x) for x > 0.
pub(crate) fn ln_gamma(x: &Float, prec: u32) -> Result<Float> {
    if !x.is_finite() || *x <= 0 {
        return Err(domain(format!("ln_gamma needs x > 0, got {}", x.to_f64())));
    }
    let w = Float::with_val(prec + GUARD_BITS, x);
    Ok(Float::with_val(prec, w.ln_gamma()))
}

/// (ln |Γ(x)|, sign of Γ(x)) for x not a pole.
pub(crate) fn ln_abs_gamma(x: &Float, prec: u32) -> Result<(Float, i8)> {
    if is_nonpos_int(x) {
        return Err(domain("Γ has a pole at non-positive integers"));
    }
    let w = Float::with_val(prec + GUARD_BITS, x);
    let (v, ord) = w.ln_abs_gamma();
    let sign = if ord == Ordering::Less { -1 } else { 1 };
    Ok((Float::with_val(prec, v), sign))
}

/// 1/Γ(x), entire: zero at the poles of Γ.
pub(crate) fn rgamma(x: &Float, prec: u32) -> Float {
    if is_nonpos_int(x) {
        return Float::with_val(prec, 0);
    }
    let w = Float::with_val(prec + GUARD_BITS, x);
    let (lg, ord) = w.ln_abs_gamma();
    let mut r = Float::with_val(prec + GUARD_BITS, -lg).exp();
    if ord == Ordering::Less {
        r = -r;
    }
    Float::with_val(prec, r)
}

/// Rising factorial (x)_k as a k-term product.
pub(crate) fn pochhammer(x: &Float, k: u32, prec: u32) -> Float {
    let work = prec + GUARD_BITS;
    let mut acc = Float::with_val(work, 1);
    let mut f = Float::with_val(work, x);
    for _ in 0..k {
        acc *= &f;
        if acc.is_zero() {
            break;
        }
        f += 1;
    }
    Float::with_val(prec, acc)
}
