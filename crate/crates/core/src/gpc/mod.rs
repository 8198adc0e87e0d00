//! The GPC evaluator family.
//!
//! Each quantity (density, CDF, super-cumulative, derivative) has a short-t
//! series and a long-t series; the dispatch functions pick one by t/β.

mod analysis;
mod long;
mod oracle;
mod params;
mod setup;
mod short;

use std::time::Instant;

use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::mp::context::{bits_to_digits, digits_to_bits};
use crate::mp::{MpReal, PrecisionContext};

pub use analysis::{half_life, peak_time, HALF_LIFE_SINGULAR_TOL};
pub use oracle::{conv_oracle, conv_oracle_with, integrate_quantity};
pub use params::{GpcParams, GpcParamsF64, PARAM_DIGITS, SECONDS_PER_HOUR};

/// Which series produced a value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Zero,
    ShortT,
    LongT,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::Zero => "zero",
            Branch::ShortT => "short_t",
            Branch::LongT => "long_t",
        }
    }
}

/// Member of the GPC family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// f(t), 1/h
    Density,
    /// F(t), dimensionless
    Cdf,
    /// ∫₀ᵗ F, h
    SuperCdf,
    /// f′(t), 1/h²
    Deriv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalDiagnostics {
    pub branch: Branch,
    /// Terms summed, including the first one below the stopping threshold.
    pub terms_summed: u64,
    /// Rounded decimal exponent of the largest scaled summand.
    pub max_term_log10: i64,
    /// Required working precision in digits: target + |decimal exponent| of
    /// the largest summand (short-t) or of the result (long-t).
    pub working_precision: u32,
    /// Estimated correct significant digits after cancellation.
    pub achieved_digits: u32,
    pub wall_time: f64,
}

#[derive(Clone, Debug)]
pub struct EvalResult {
    pub value: MpReal,
    pub diagnostics: EvalDiagnostics,
}

impl EvalResult {
    fn zero(ctx: &PrecisionContext, started: Instant) -> Self {
        EvalResult {
            value: MpReal::zero(ctx.working_digits),
            diagnostics: EvalDiagnostics {
                branch: Branch::Zero,
                terms_summed: 0,
                max_term_log10: 0,
                working_precision: ctx.target_digits,
                achieved_digits: ctx.target_digits,
                wall_time: started.elapsed().as_secs_f64(),
            },
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.value.to_f64()
    }
}

/// Outcome of one series run, before it is turned into an [`EvalResult`].
#[derive(Clone, Debug)]
pub(crate) struct SeriesRun {
    pub value: Float,
    pub terms: u64,
    /// log2 of the largest scaled summand (−∞ if none).
    pub max_term_log2: f64,
    /// log2 of the largest quantity combined into `value`.
    pub max_part_log2: f64,
    /// Working digits the run used.
    pub digits: u32,
}

impl SeriesRun {
    pub fn max_term_log10(&self) -> i64 {
        if self.max_term_log2.is_finite() {
            (self.max_term_log2 * std::f64::consts::LOG10_2).round() as i64
        } else {
            0
        }
    }

    pub fn value_log10(&self) -> i64 {
        let l = crate::mp::util::log2_abs(&self.value);
        if l.is_finite() {
            (l * std::f64::consts::LOG10_2).round() as i64
        } else {
            0
        }
    }

    /// Significant digits surviving cancellation.
    pub fn achieved(&self) -> u32 {
        let vl = crate::mp::util::log2_abs(&self.value);
        if !vl.is_finite() {
            return 0;
        }
        let lost = ((self.max_part_log2 - vl).max(0.0) * std::f64::consts::LOG10_2).ceil() as u32;
        self.digits.saturating_sub(lost)
    }
}

fn check_t(t: &MpReal) -> Result<()> {
    if !t.is_finite() {
        return Err(domain("t must be finite"));
    }
    Ok(())
}

fn finish(run: SeriesRun, branch: Branch, working_precision: u32, started: Instant) -> EvalResult {
    let achieved = run.achieved().min(bits_to_digits(run.value.prec()));
    let diagnostics = EvalDiagnostics {
        branch,
        terms_summed: run.terms,
        max_term_log10: run.max_term_log10(),
        working_precision,
        achieved_digits: achieved,
        wall_time: started.elapsed().as_secs_f64(),
    };
    EvalResult {
        value: MpReal::from_float(run.value),
        diagnostics,
    }
}

/// Runs `run_at(digits)` at `ctx.working_digits`, rerunning wider when the
/// result needs more digits than were carried or cancellation ate the guard.
fn widen_until_ok<F>(ctx: &PrecisionContext, mut required: impl FnMut(&SeriesRun) -> u32, mut run_at: F) -> Result<(SeriesRun, u32)>
where
    F: FnMut(u32) -> Result<SeriesRun>,
{
    let mut digits = ctx.working_digits.max(ctx.target_digits + ctx.guard_digits);
    let mut guard = ctx.guard_digits;
    let mut last = None;
    for _ in 0..5 {
        let run = run_at(digits)?;
        let need = required(&run);
        let achieved = run.achieved();
        if need + guard <= digits && achieved >= ctx.target_digits {
            return Ok((run, need));
        }
        let short = ctx.target_digits.saturating_sub(achieved);
        let next = (need + guard).max(digits + short + guard);
        if achieved < ctx.target_digits {
            guard *= 2;
        }
        last = Some((run, need));
        if next <= digits {
            break;
        }
        digits = next;
    }
    let (run, need) = last.expect("at least one run");
    if run.achieved() + 2 >= ctx.target_digits {
        return Ok((run, need));
    }
    Err(crate::error::Error::Precision(format!(
        "reached {} of {} digits at {} working digits",
        run.achieved(),
        ctx.target_digits,
        run.digits
    )))
}

fn long_eval(p: &GpcParams, t: &MpReal, q: Quantity, ctx: &PrecisionContext) -> Result<EvalResult> {
    ctx.validate()?;
    check_t(t)?;
    let started = Instant::now();
    if **t <= *p.beta() {
        return Ok(EvalResult::zero(ctx, started));
    }
    let target = ctx.target_digits;
    let (run, need) = widen_until_ok(
        ctx,
        |r| target + r.value_log10().unsigned_abs() as u32,
        |digits| long::run(p, t, q, digits, target, None),
    )?;
    Ok(finish(run, Branch::LongT, need, started))
}

fn short_direct(p: &GpcParams, t: &MpReal, q: Quantity, ctx: &PrecisionContext) -> Result<EvalResult> {
    let started = Instant::now();
    let target = ctx.target_digits;
    let (run, need) = widen_until_ok(
        ctx,
        |r| target + r.max_term_log10().unsigned_abs() as u32,
        |digits| short::run(p, t, q, digits, target, None),
    )?;
    Ok(finish(run, Branch::ShortT, need, started))
}

/// Two-pass short-t evaluation: a 64-bit pass locates the largest summand,
/// then the sum is redone at target + |its decimal exponent| digits.
fn short_two_pass(p: &GpcParams, t: &MpReal, q: Quantity, ctx: &PrecisionContext) -> Result<EvalResult> {
    ctx.validate()?;
    check_t(t)?;
    let started = Instant::now();
    if **t <= *p.beta() {
        return Ok(EvalResult::zero(ctx, started));
    }
    let target = ctx.target_digits;
    let probe = short::run(p, t, q, bits_to_digits(64), target, None)?;
    let xprec = probe.max_term_log10().unsigned_abs() as u32;
    let desirprec = target + xprec;
    log::debug!(
        "short-t probe: {} terms, xprec {}, desirprec {}",
        probe.terms,
        probe.max_term_log10(),
        desirprec
    );
    let pass_ctx = PrecisionContext {
        target_digits: target,
        working_digits: desirprec + ctx.guard_digits,
        guard_digits: ctx.guard_digits,
    };
    let (run, need) = widen_until_ok(
        &pass_ctx,
        |r| target + r.max_term_log10().unsigned_abs() as u32,
        |digits| short::run(p, t, q, digits, target, None),
    )?;
    Ok(finish(run, Branch::ShortT, need.max(desirprec), started))
}

fn dispatch(p: &GpcParams, t: &MpReal, q: Quantity, ctx: &PrecisionContext) -> Result<EvalResult> {
    ctx.validate()?;
    check_t(t)?;
    let started = Instant::now();
    if **t <= *p.beta() {
        return Ok(EvalResult::zero(ctx, started));
    }
    let four_beta = Float::with_val(p.beta().prec(), p.beta() * 4u32);
    if **t < four_beta {
        short_direct(p, t, q, ctx)
    } else {
        long_eval(p, t, q, ctx)
    }
}

/// Density f(t) by the combined algorithm: 0 for t ≤ β, short-t below 4β,
/// long-t from 4β on.
pub fn gpc_eval(p: &GpcParams, t: &MpReal, ctx: &PrecisionContext) -> Result<EvalResult> {
    dispatch(p, t, Quantity::Density, ctx)
}

/// CDF F(t), the fraction of a unit dose eliminated by t.
pub fn gpc_cdf(p: &GpcParams, t: &MpReal, ctx: &PrecisionContext) -> Result<EvalResult> {
    dispatch(p, t, Quantity::Cdf, ctx)
}

/// Super-cumulative ∫₀ᵗ F(τ) dτ.
pub fn gpc_supercdf(p: &GpcParams, t: &MpReal, ctx: &PrecisionContext) -> Result<EvalResult> {
    dispatch(p, t, Quantity::SuperCdf, ctx)
}

/// Density derivative f′(t).
pub fn gpc_deriv(p: &GpcParams, t: &MpReal, ctx: &PrecisionContext) -> Result<EvalResult> {
    dispatch(p, t, Quantity::Deriv, ctx)
}

/// Any family member through the dispatcher.
pub fn gpc_quantity(p: &GpcParams, t: &MpReal, q: Quantity, ctx: &PrecisionContext) -> Result<EvalResult> {
    dispatch(p, t, q, ctx)
}

/// Density by the short-t series alone with two-pass precision, valid for any t > β.
pub fn gpc_short(p: &GpcParams, t: &MpReal, ctx: &PrecisionContext) -> Result<EvalResult> {
    short_two_pass(p, t, Quantity::Density, ctx)
}

/// Short-t series for any family member, two-pass precision.
pub fn gpc_short_quantity(p: &GpcParams, t: &MpReal, q: Quantity, ctx: &PrecisionContext) -> Result<EvalResult> {
    short_two_pass(p, t, q, ctx)
}

/// Density by the long-t series alone.
pub fn gpc_long(p: &GpcParams, t: &MpReal, ctx: &PrecisionContext) -> Result<EvalResult> {
    long_eval(p, t, Quantity::Density, ctx)
}

/// Long-t series for any family member.
pub fn gpc_long_quantity(p: &GpcParams, t: &MpReal, q: Quantity, ctx: &PrecisionContext) -> Result<EvalResult> {
    long_eval(p, t, q, ctx)
}

/// The density's long-t asymptote −π csc(πα) b^a β^α/Γ(α) · t^{a−α−1} · ₁F̃₁(a; a−α; −bt).
pub fn gpc_asymptote(p: &GpcParams, t: &MpReal, ctx: &PrecisionContext) -> Result<MpReal> {
    ctx.validate()?;
    check_t(t)?;
    if **t <= 0 {
        return Err(domain("asymptote needs t > 0"));
    }
    let bits = digits_to_bits(ctx.working_digits);
    let s = setup::Setup::new(p, t, bits);
    Ok(MpReal::from_float(Float::with_val(bits, long::asymptote(&s, Quantity::Density)?)))
}

/// Which series produced the terms of [`series_terms`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Series {
    Short,
    Long,
}

/// The scaled summands of a series at `digits` working digits, in order,
/// ending with the first one below the stopping threshold.
pub fn series_terms(p: &GpcParams, t: &MpReal, q: Quantity, series: Series, digits: u32, target: u32) -> Result<Vec<MpReal>> {
    check_t(t)?;
    if **t <= *p.beta() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    match series {
        Series::Short => short::run(p, t, q, digits, target, Some(&mut out))?,
        Series::Long => long::run(p, t, q, digits, target, Some(&mut out))?,
    };
    Ok(out.into_iter().map(MpReal::from_float).collect())
}

/// f64 convenience wrapper around [`gpc_quantity`].
pub fn eval_f64(p: &GpcParams, t: f64, q: Quantity, ctx: &PrecisionContext) -> Result<f64> {
    Ok(gpc_quantity(p, &MpReal::from_f64(t), q, ctx)?.value.to_f64())
}
