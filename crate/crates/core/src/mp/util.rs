use rug::ops::Pow;
use rug::Float;

/// Extra bits carried internally by every kernel routine.
pub(crate) const GUARD_BITS: u32 = 32;

/// log2 |x| as a double; `-inf` for zero.
pub(crate) fn log2_abs(x: &Float) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let (m, e) = x.to_f64_exp();
    m.abs().log2() + f64::from(e)
}

pub(crate) fn is_nonpos_int(x: &Float) -> bool {
    x.is_integer() && *x <= 0
}

/// x^y at `p` bits.
pub(crate) fn powf(x: &Float, y: &Float, p: u32) -> Float {
    Float::with_val(p, x.pow(y))
}

pub(crate) fn powu(x: &Float, n: u32, p: u32) -> Float {
    Float::with_val(p, x.pow(n))
}

#[cfg(test)]
pub(crate) fn float(prec: u32, v: f64) -> Float {
    Float::with_val(prec, v)
}

/// Bits lost to cancellation when `sum` is the result of adding terms whose
/// largest magnitude had log2 `max_log2`.
pub(crate) fn lost_bits(max_log2: f64, sum: &Float) -> u32 {
    if sum.is_zero() {
        return u32::MAX;
    }
    let lost = max_log2 - log2_abs(sum);
    if lost > 0.0 {
        lost.ceil() as u32
    } else {
        0
    }
}

/// Runs `eval` at `prec + GUARD_BITS`, and again at a wider precision when the
/// reported cancellation ate into the guard. `eval` returns the value and the
/// log2 of the largest intermediate magnitude it combined.
pub(crate) fn with_cancellation_retry<F>(
    prec: u32,
    mut eval: F,
) -> crate::error::Result<Float>
where
    F: FnMut(u32) -> crate::error::Result<(Float, f64)>,
{
    let mut work = prec + GUARD_BITS;
    for _ in 0..6 {
        let (value, max_log2) = eval(work)?;
        let lost = lost_bits(max_log2, &value);
        if lost == u32::MAX {
            // exact zero after cancellation: only trust it if the inputs were tiny too
            if max_log2 == f64::NEG_INFINITY || work > prec + 4 * GUARD_BITS + 4096 {
                return Ok(Float::with_val(prec, 0));
            }
            work = work * 2 + GUARD_BITS;
            continue;
        }
        if lost + 8 <= work - prec {
            return Ok(Float::with_val(prec, value));
        }
        work = prec + lost + GUARD_BITS;
    }
    Err(crate::error::Error::Precision(format!(
        "cancellation not resolved at {work} bits"
    )))
}
