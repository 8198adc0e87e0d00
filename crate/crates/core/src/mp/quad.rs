//! Double-exponential (tanh-sinh) quadrature at arbitrary precision.
//!
//! Integrands receive the distance of each node to both ends of the current
//! piece, computed without cancellation, so endpoint singularities such as
//! (t − x)^{a−1} are evaluated accurately.

use rug::float::Constant;
use rug::Float;

use super::util::log2_abs;
use crate::error::{Error, Result};

/// A quadrature node inside the piece [left, right].
pub struct Node<'a> {
    pub x: &'a Float,
    pub from_left: &'a Float,
    pub from_right: &'a Float,
    pub left: &'a Float,
    pub right: &'a Float,
}

#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    /// Working precision in bits.
    pub prec: u32,
    /// Requested relative accuracy, as a decimal exponent (e.g. 30 for 1e-30).
    pub digits: u32,
    /// Smallest endpoint power p such that the integrand behaves like d^{p−1}
    /// near an end; sizes the truncation of the node set.
    pub min_power: f64,
    pub max_level: u32,
}

impl QuadOptions {
    pub fn new(digits: u32) -> Self {
        Self {
            prec: super::context::digits_to_bits(digits + 15),
            digits,
            min_power: 1.0,
            max_level: 10,
        }
    }
}

/// Integrates over [a, b] split at the supplied interior points.
/// `points` must be increasing and strictly inside (a, b).
pub fn integrate<F>(mut f: F, a: &Float, b: &Float, points: &[Float], opts: &QuadOptions) -> Result<Float>
where
    F: FnMut(&Node<'_>) -> Result<Float>,
{
    let p = opts.prec;
    let mut edges: Vec<Float> = Vec::with_capacity(points.len() + 2);
    edges.push(Float::with_val(p, a));
    for q in points {
        if q > edges.last().unwrap() && q < b {
            edges.push(Float::with_val(p, q));
        }
    }
    edges.push(Float::with_val(p, b));
    let mut total = Float::with_val(p, 0);
    for w in edges.windows(2) {
        total += piece(&mut f, &w[0], &w[1], opts)?;
    }
    Ok(total)
}

fn piece<F>(f: &mut F, left: &Float, right: &Float, opts: &QuadOptions) -> Result<Float>
where
    F: FnMut(&Node<'_>) -> Result<Float>,
{
    let p = opts.prec;
    let half = Float::with_val(p, right - left) / 2u32;
    let pi2 = Float::with_val(p, Constant::Pi) / 2u32;
    // truncate where the node sits closer to an end than the weight can matter
    let need = (f64::from(p) * std::f64::consts::LN_2 + 20.0) / (2.0 * opts.min_power.max(1e-3));
    let umax = (need / std::f64::consts::FRAC_PI_2).asinh();

    let mut eval_at = |u: &Float| -> Result<Float> {
        let v = Float::with_val(p, u.sinh_ref()) * &pi2;
        let e2 = Float::with_val(p, &v * 2u32).exp();
        let e2n = Float::with_val(p, e2.recip_ref());
        let dl = Float::with_val(p, &half * 2u32) / (Float::with_val(p, &e2n + 1u32));
        let dr = Float::with_val(p, &half * 2u32) / (Float::with_val(p, &e2 + 1u32));
        if dl.is_zero() || dr.is_zero() {
            return Ok(Float::with_val(p, 0));
        }
        let x = if *u < 0 {
            Float::with_val(p, left + &dl)
        } else {
            Float::with_val(p, right - &dr)
        };
        let ch = Float::with_val(p, v.cosh_ref());
        let w = Float::with_val(p, u.cosh_ref()) * &pi2 / Float::with_val(p, ch.square_ref());
        let node = Node { x: &x, from_left: &dl, from_right: &dr, left, right };
        let fx = f(&node)?;
        Ok(fx * w)
    };

    let target = -(f64::from(opts.digits) * std::f64::consts::LOG2_10);
    let mut sum = eval_at(&Float::with_val(p, 0))?;
    let mut k = 1u32;
    loop {
        let u = Float::with_val(p, k);
        if u.to_f64() > umax {
            break;
        }
        sum += eval_at(&u)?;
        sum += eval_at(&Float::with_val(p, -&u))?;
        k += 1;
    }
    let mut prev = Float::with_val(p, &sum * &half);
    let mut prev_diff = f64::INFINITY;
    for level in 1..=opts.max_level {
        let h = Float::with_val(p, Float::i_exp(1, -(level as i32)));
        let steps = ((umax / h.to_f64()).ceil() as u64) | 1;
        let mut j = 1u64;
        while j <= steps {
            let u = Float::with_val(p, &h * j);
            sum += eval_at(&u)?;
            sum += eval_at(&Float::with_val(p, -&u))?;
            j += 2;
        }
        let cur = Float::with_val(p, &sum * &h) * &half;
        let scale = log2_abs(&cur);
        let diff = log2_abs(&Float::with_val(p, &cur - &prev)) - scale;
        let est = if level >= 3 && diff < prev_diff { 2.0 * diff - prev_diff } else { diff };
        if level >= 3 && (diff < target || (diff < 0.5 * target && est < target)) {
            return Ok(cur);
        }
        if cur.is_zero() && prev.is_zero() && level >= 3 {
            return Ok(cur);
        }
        prev = cur;
        prev_diff = diff;
    }
    Err(Error::Quadrature(format!(
        "tanh-sinh did not reach 1e-{} on [{}, {}]",
        opts.digits,
        left.to_f64(),
        right.to_f64()
    )))
}
