//! Direct quadrature of the convolution integral, independent of both series.

use rug::Float;

use super::{gpc_quantity, GpcParams, Quantity};
use crate::error::Result;
use crate::mp::quad::{integrate, Node, QuadOptions};
use crate::mp::context::digits_to_bits;
use crate::mp::{MpReal, PrecisionContext};

/// Breakpoints β·2^k, t − 2^j/b inside (lo, hi), sorted.
fn breakpoints(p: &GpcParams, lo: &Float, hi: &Float, bits: u32) -> Vec<Float> {
    let mut pts = Vec::new();
    let mut x = Float::with_val(bits, p.beta() * 2u32);
    while x < *hi {
        if x > *lo {
            pts.push(x.clone());
        }
        x *= 2u32;
    }
    let inv_b = Float::with_val(bits, p.b().recip_ref());
    for j in -4i32..40 {
        let d = Float::with_val(bits, &inv_b * Float::with_val(bits, Float::i_exp(1, j)));
        let x = Float::with_val(bits, hi - &d);
        if x <= *lo {
            break;
        }
        pts.push(x);
    }
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    pts.dedup();
    pts
}

/// ∫_β^t GD(a,b; t−x)·PD(α,β; x) dx by tanh-sinh quadrature with `opts`.
pub fn conv_oracle_with(p: &GpcParams, t: &MpReal, opts: &QuadOptions) -> Result<MpReal> {
    let bits = opts.prec;
    let t = Float::with_val(bits, t.as_float());
    let beta = Float::with_val(bits, p.beta());
    if t <= beta {
        return Ok(MpReal::from_float(Float::with_val(bits, 0)));
    }
    let a = Float::with_val(bits, p.a());
    let b = Float::with_val(bits, p.b());
    let alpha = Float::with_val(bits, p.alpha());
    // constant part of ln[GD·PD]
    let mut lc = Float::with_val(bits, &a * Float::with_val(bits, b.ln_ref()));
    lc -= Float::with_val(bits, a.ln_gamma_ref());
    lc += Float::with_val(bits, alpha.ln_ref());
    lc += Float::with_val(bits, &alpha * Float::with_val(bits, beta.ln_ref()));
    let am1 = Float::with_val(bits, &a - 1u32);
    let ap1 = Float::with_val(bits, &alpha + 1u32);
    let pts = breakpoints(p, &beta, &t, bits);
    let integrand = |n: &Node<'_>| -> Result<Float> {
        // t − x from the right end of the piece, exact near x → t
        let u = Float::with_val(bits, &t - n.right) + n.from_right;
        let mut l = lc.clone();
        l += Float::with_val(bits, &am1 * Float::with_val(bits, u.ln_ref()));
        l -= Float::with_val(bits, &b * &u);
        l -= Float::with_val(bits, &ap1 * Float::with_val(bits, n.x.ln_ref()));
        Ok(l.exp())
    };
    let mut o = *opts;
    o.min_power = a.to_f64().min(1.0);
    let v = integrate(integrand, &beta, &t, &pts, &o)?;
    Ok(MpReal::from_float(v))
}

/// Quadrature oracle for the density at `ctx.target_digits` relative accuracy.
pub fn conv_oracle(p: &GpcParams, t: &MpReal, ctx: &PrecisionContext) -> Result<MpReal> {
    ctx.validate()?;
    let mut opts = QuadOptions::new(ctx.target_digits);
    opts.prec = digits_to_bits(ctx.working_digits + 10);
    conv_oracle_with(p, t, &opts)
}

/// ∫_{lo}^{hi} of a family member, evaluated through the dispatcher at
/// `eval_ctx`, integrated to `quad_digits` relative accuracy.
pub fn integrate_quantity(
    p: &GpcParams,
    q: Quantity,
    lo: &MpReal,
    hi: &MpReal,
    eval_ctx: &PrecisionContext,
    quad_digits: u32,
) -> Result<MpReal> {
    let mut opts = QuadOptions::new(quad_digits);
    opts.prec = digits_to_bits(eval_ctx.working_digits);
    let bits = opts.prec;
    let beta = Float::with_val(bits, p.beta());
    let mut lo = Float::with_val(bits, lo.as_float());
    if lo < beta {
        lo = beta.clone();
    }
    let hi = Float::with_val(bits, hi.as_float());
    if hi <= lo {
        return Ok(MpReal::from_float(Float::with_val(bits, 0)));
    }
    let pts = breakpoints(p, &lo, &hi, bits);
    // density behaves like (x − β)^a at the left end
    opts.min_power = p.a().to_f64().min(1.0);
    let f = |n: &Node<'_>| -> Result<Float> {
        let r = gpc_quantity(p, &MpReal::from_float(n.x.clone()), q, eval_ctx)?;
        Ok(Float::with_val(bits, r.value.as_float()))
    };
    Ok(MpReal::from_float(integrate(f, &lo, &hi, &pts, &opts)?))
}
