//! Multiprecision special-function kernel.
//!
//! The public functions take [`MpReal`] arguments and a [`PrecisionContext`];
//! results are rounded to the context's working precision.

pub(crate) mod beta;
pub mod context;
pub(crate) mod gamma;
pub(crate) mod hyper;
pub(crate) mod incgamma;
pub mod quad;
pub mod real;
pub(crate) mod util;

pub use beta::IncBetaLadder;
pub use context::{PrecisionContext, DEFAULT_GUARD_DIGITS, DEFAULT_TARGET_DIGITS};
pub use real::MpReal;

use crate::error::Result;

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: &MpReal, ctx: &PrecisionContext) -> Result<MpReal> {
    gamma::ln_gamma(x, ctx.working_bits()).map(MpReal::from)
}

/// Rising factorial (x)_k = Γ(x+k)/Γ(x) as a finite product.
pub fn pochhammer(x: &MpReal, k: u32, ctx: &PrecisionContext) -> MpReal {
    gamma::pochhammer(x, k, ctx.working_bits()).into()
}

/// B_z(A, B) continued to negative non-integer B.
pub fn inc_beta_gen(z: &MpReal, a: &MpReal, b: &MpReal, ctx: &PrecisionContext) -> Result<MpReal> {
    beta::inc_beta_gen(z, a, b, ctx.working_bits()).map(MpReal::from)
}

/// Complete beta B(A, B) = Γ(A)Γ(B)/Γ(A+B).
pub fn beta(a: &MpReal, b: &MpReal, ctx: &PrecisionContext) -> Result<MpReal> {
    let p = ctx.working_bits();
    beta::beta_complete(a, b, p + 32).map(|v| MpReal::from(rug::Float::with_val(p, v)))
}

/// ₁F₁(a; b; z).
pub fn hyp1f1(a: &MpReal, b: &MpReal, z: &MpReal, ctx: &PrecisionContext) -> Result<MpReal> {
    hyper::hyp1f1(a, b, z, ctx.working_bits()).map(MpReal::from)
}

/// ₁F₁(a; b; z)/Γ(b), defined for every b.
pub fn hyp1f1_reg(a: &MpReal, b: &MpReal, z: &MpReal, ctx: &PrecisionContext) -> Result<MpReal> {
    hyper::hyp1f1_reg(a, b, z, ctx.working_bits()).map(MpReal::from)
}

/// Regularized upper incomplete gamma Q(a, x).
pub fn gamma_q(a: &MpReal, x: &MpReal, ctx: &PrecisionContext) -> Result<MpReal> {
    incgamma::gamma_q(a, x, ctx.working_bits()).map(MpReal::from)
}

/// Regularized lower incomplete gamma P(a, x).
pub fn gamma_p(a: &MpReal, x: &MpReal, ctx: &PrecisionContext) -> Result<MpReal> {
    incgamma::gamma_p(a, x, ctx.working_bits()).map(MpReal::from)
}
