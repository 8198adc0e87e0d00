use rug::float::Constant;
use rug::Float;

use super::{gpc_deriv, gpc_eval, GpcParams};
use crate::error::{Error, Result};
use crate::mp::{MpReal, PrecisionContext};

/// |t·f′/f| at or below this counts as a stationary point for [`half_life`].
pub const HALF_LIFE_SINGULAR_TOL: f64 = 1e-9;

const PEAK_SCAN_UPPER_H: f64 = 1e3;
const PEAK_SCAN_PER_DECADE: u32 = 32;
const PEAK_WIDTH_H: f64 = 1e-13;

fn deriv_sign(p: &GpcParams, t: &Float, ctx: &PrecisionContext) -> Result<std::cmp::Ordering> {
    let d = gpc_deriv(p, &MpReal::from_float(t.clone()), ctx)?;
    Ok(d.value.cmp0().unwrap_or(std::cmp::Ordering::Equal))
}

/// Time of the density maximum: the first sign change of f′ on a geometric
/// grid from just above β to 1000 h, refined by bisection to 1e-13 h.
pub fn peak_time(p: &GpcParams, ctx: &PrecisionContext) -> Result<MpReal> {
    use std::cmp::Ordering::*;
    let bits = ctx.working_bits().max(128);
    let start = Float::with_val(bits, p.beta() * Float::with_val(bits, 1.0 + 1e-9));
    let ratio = Float::with_val(bits, 10f64.powf(1.0 / f64::from(PEAK_SCAN_PER_DECADE)));
    let mut lo = start.clone();
    if deriv_sign(p, &lo, ctx)? != Greater {
        return Err(Error::NotFound("density is not rising just after beta".into()));
    }
    let mut hi = Float::with_val(bits, &lo * &ratio);
    loop {
        if hi.to_f64() > PEAK_SCAN_UPPER_H {
            return Err(Error::NotFound(format!(
                "no sign change of the derivative in (beta, {PEAK_SCAN_UPPER_H}] h"
            )));
        }
        match deriv_sign(p, &hi, ctx)? {
            Greater => {
                lo = hi.clone();
                hi *= &ratio;
            }
            Equal => return Ok(MpReal::from_float(hi)),
            Less => break,
        }
    }
    while Float::with_val(bits, &hi - &lo).to_f64() > PEAK_WIDTH_H {
        let mid = Float::with_val(bits, &lo + &hi) / 2u32;
        match deriv_sign(p, &mid, ctx)? {
            Greater => lo = mid,
            Less => hi = mid,
            Equal => return Ok(MpReal::from_float(mid)),
        }
    }
    Ok(MpReal::from_float(Float::with_val(bits, &lo + &hi) / 2u32))
}

/// Instantaneous half-life −ln 2 · f(t)/f′(t), in hours.
pub fn half_life(p: &GpcParams, t: &MpReal, ctx: &PrecisionContext) -> Result<MpReal> {
    let f = gpc_eval(p, t, ctx)?.value;
    let d = gpc_deriv(p, t, ctx)?.value;
    let bits = ctx.working_bits();
    if f.is_zero() || d.is_zero() {
        return Err(Error::Singular(format!("f or f' vanishes at t={}", t.to_f64())));
    }
    let rel = Float::with_val(bits, t.as_float() * d.as_float()) / f.as_float();
    if rel.to_f64().abs() <= HALF_LIFE_SINGULAR_TOL {
        return Err(Error::Singular(format!(
            "derivative is zero at t={} (stationary point)",
            t.to_f64()
        )));
    }
    let ln2 = Float::with_val(bits, Constant::Log2);
    let v = -(ln2 * f.as_float()) / d.as_float();
    Ok(MpReal::from_float(v))
}
