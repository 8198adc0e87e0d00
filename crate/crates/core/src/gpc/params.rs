use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::mp::context::digits_to_bits;
use crate::mp::MpReal;

/// Decimal digits at which parameters are stored. Evaluations at higher
/// working precision treat the stored values as exact.
pub const PARAM_DIGITS: u32 = 2048;

/// Seconds per hour, for β given in seconds.
pub const SECONDS_PER_HOUR: u32 = 3600;

/// Gamma-Pareto type I convolution parameters.
///
/// `a` is the gamma shape, `b` the gamma rate (1/h), `alpha` the Pareto
/// shape and `beta` the Pareto location (h).
#[derive(Clone, Debug, PartialEq)]
pub struct GpcParams {
    a: Float,
    b: Float,
    alpha: Float,
    beta: Float,
}

/// Plain-double view of [`GpcParams`], used by the fitting code and for
/// serialization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpcParamsF64 {
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub beta_h: f64,
}

fn stored(v: &Float) -> Float {
    Float::with_val(digits_to_bits(PARAM_DIGITS).max(v.prec()), v)
}

impl GpcParams {
    pub fn new(a: &MpReal, b: &MpReal, alpha: &MpReal, beta_h: &MpReal) -> Result<Self> {
        let p = Self {
            a: stored(a),
            b: stored(b),
            alpha: stored(alpha),
            beta: stored(beta_h),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn from_f64(a: f64, b: f64, alpha: f64, beta_h: f64) -> Result<Self> {
        Self::new(
            &MpReal::from_f64(a),
            &MpReal::from_f64(b),
            &MpReal::from_f64(alpha),
            &MpReal::from_f64(beta_h),
        )
    }

    /// Parses decimal strings without passing through binary doubles.
    pub fn parse(a: &str, b: &str, alpha: &str, beta_h: &str) -> Result<Self> {
        Self::new(
            &MpReal::parse(a, PARAM_DIGITS)?,
            &MpReal::parse(b, PARAM_DIGITS)?,
            &MpReal::parse(alpha, PARAM_DIGITS)?,
            &MpReal::parse(beta_h, PARAM_DIGITS)?,
        )
    }

    /// As [`GpcParams::parse`], with β given in seconds.
    pub fn parse_beta_seconds(a: &str, b: &str, alpha: &str, beta_s: &str) -> Result<Self> {
        let s = MpReal::parse(beta_s, PARAM_DIGITS)?;
        let h = Float::with_val(s.prec(), s.as_float() / SECONDS_PER_HOUR);
        Self::new(
            &MpReal::parse(a, PARAM_DIGITS)?,
            &MpReal::parse(b, PARAM_DIGITS)?,
            &MpReal::parse(alpha, PARAM_DIGITS)?,
            &MpReal::from_float(h),
        )
    }

    /// Metformin dog 1 parameters, 65-digit values.
    pub fn dog1() -> Self {
        Self::parse(
            "0.34931003807815571524792421542558602868248355919027496611955665616",
            "0.73182479199387479660419087183394451163091958778927254273673996698",
            "0.26437129139517680335740710070693267536710608361890151476103695922",
            "0.0069444444444444444444444444444444444444444444444444444444444444444",
        )
        .expect("dog 1 parameters are valid")
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("a", &self.a), ("b", &self.b), ("alpha", &self.alpha), ("beta", &self.beta)] {
            if !v.is_finite() || *v <= 0 {
                return Err(domain(format!("{name} must be a positive finite number")));
            }
        }
        let al = self.alpha.to_f64();
        if (al - al.round()).abs() < 1e-12 {
            return Err(domain("alpha may not be an integer"));
        }
        Ok(())
    }

    pub fn a(&self) -> &Float {
        &self.a
    }
    pub fn b(&self) -> &Float {
        &self.b
    }
    pub fn alpha(&self) -> &Float {
        &self.alpha
    }
    pub fn beta(&self) -> &Float {
        &self.beta
    }

    pub fn to_f64(&self) -> GpcParamsF64 {
        GpcParamsF64 {
            a: self.a.to_f64(),
            b: self.b.to_f64(),
            alpha: self.alpha.to_f64(),
            beta_h: self.beta.to_f64(),
        }
    }

    /// Decimal strings with `digits` significant digits, in the order a, b, α, β(h).
    pub fn to_decimal_strings(&self, digits: usize) -> [String; 4] {
        [&self.a, &self.b, &self.alpha, &self.beta]
            .map(|v| MpReal::from_float(v.clone()).to_decimal_string(digits))
    }
}

impl TryFrom<GpcParamsF64> for GpcParams {
    type Error = crate::error::Error;
    fn try_from(p: GpcParamsF64) -> Result<Self> {
        Self::from_f64(p.a, p.b, p.alpha, p.beta_h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dog1_beta_is_25_seconds() {
        let p = GpcParams::dog1();
        assert!((p.beta().to_f64() * 3600.0 - 25.0).abs() < 1e-12);
        let s = GpcParams::parse_beta_seconds("0.35", "0.73", "0.26", "25").unwrap();
        let d = Float::with_val(300, s.beta() - Float::with_val(300, 25) / 3600u32);
        assert!(d.is_zero() || d.abs() < Float::with_val(64, 1e-80));
    }

    #[test]
    fn rejects_invalid() {
        assert!(GpcParams::from_f64(0.0, 1.0, 0.5, 0.01).is_err());
        assert!(GpcParams::from_f64(0.3, -1.0, 0.5, 0.01).is_err());
        assert!(GpcParams::from_f64(0.3, 1.0, 1.0, 0.01).is_err());
        assert!(GpcParams::from_f64(0.3, 1.0, 2.0 + 1e-14, 0.01).is_err());
        assert!(GpcParams::from_f64(0.3, 1.0, 0.5, 0.0).is_err());
        assert!(GpcParams::from_f64(f64::NAN, 1.0, 0.5, 0.01).is_err());
        assert!(GpcParams::parse("x", "1", "0.5", "0.01").is_err());
    }

    #[test]
    fn parse_is_not_routed_through_doubles() {
        let p = GpcParams::dog1();
        let s = &p.to_decimal_strings(66)[0];
        assert!(s.starts_with("3.4931003807815571524792421542558602868248355919027496611955665616"));
    }
}
