use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Deref, Div, Mul, Neg, Sub};

use rug::Float;

use super::context::{bits_to_digits, digits_to_bits};
use crate::error::{Error, Result};

/// A real number carried at an explicit binary precision.
///
/// Exponents are MPFR exponents, so magnitudes such as 10^±1400 are ordinary
/// values. Binary operations on two `MpReal`s round to the smaller of the two
/// operand precisions.
#[derive(Clone, Debug, PartialEq, PartialOrd)]
pub struct MpReal(Float);

impl MpReal {
    pub fn from_float(value: Float) -> Self {
        MpReal(value)
    }

    /// Exact conversion of a double (53-bit mantissa).
    pub fn from_f64(value: f64) -> Self {
        MpReal(Float::with_val(53, value))
    }

    /// Conversion of a double, stored at `digits` decimal digits.
    pub fn with_digits(value: f64, digits: u32) -> Self {
        MpReal(Float::with_val(digits_to_bits(digits).max(53), value))
    }

    pub fn zero(digits: u32) -> Self {
        MpReal(Float::with_val(digits_to_bits(digits), 0))
    }

    /// Parses a decimal string (optionally with exponent) to `digits` decimal digits.
    /// The text is never routed through a binary double.
    pub fn parse(text: &str, digits: u32) -> Result<Self> {
        let trimmed = text.trim();
        if trimmed.is_empty() {
            return Err(Error::Parse("empty number".into()));
        }
        if !trimmed
            .bytes()
            .all(|c| c.is_ascii_digit() || matches!(c, b'.' | b'-' | b'+' | b'e' | b'E'))
        {
            return Err(Error::Parse(format!("not a decimal number: {trimmed:?}")));
        }
        let parsed = Float::parse(trimmed)
            .map_err(|e| Error::Parse(format!("{trimmed:?}: {e}")))?;
        let value = Float::with_val(digits_to_bits(digits), parsed);
        if !value.is_finite() {
            return Err(Error::Parse(format!("non-finite number: {trimmed:?}")));
        }
        Ok(MpReal(value))
    }

    pub fn as_float(&self) -> &Float {
        &self.0
    }

    pub fn into_float(self) -> Float {
        self.0
    }

    /// Decimal digits represented by the mantissa.
    pub fn digits(&self) -> u32 {
        bits_to_digits(self.0.prec())
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }

    /// log10 |x| in double precision, valid for any finite non-zero exponent.
    pub fn log10_abs(&self) -> f64 {
        log10_abs(&self.0)
    }

    /// Decimal rendering with `digits` significant digits.
    pub fn to_decimal_string(&self, digits: usize) -> String {
        if self.0.is_zero() {
            return "0".into();
        }
        self.0.to_string_radix(10, Some(digits.max(1)))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

/// log10 |x| without overflowing a double for huge exponents.
pub(crate) fn log10_abs(x: &Float) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let (mantissa, exp) = x.to_f64_exp();
    mantissa.abs().log10() + f64::from(exp) * std::f64::consts::LOG10_2
}

impl Deref for MpReal {
    type Target = Float;
    fn deref(&self) -> &Float {
        &self.0
    }
}

impl From<Float> for MpReal {
    fn from(value: Float) -> Self {
        MpReal(value)
    }
}

impl fmt::Display for MpReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(self.digits() as usize);
        f.write_str(&self.to_decimal_string(digits))
    }
}

impl PartialEq<f64> for MpReal {
    fn eq(&self, other: &f64) -> bool {
        self.0 == *other
    }
}

impl PartialOrd<f64> for MpReal {
    fn partial_cmp(&self, other: &f64) -> Option<Ordering> {
        self.0.partial_cmp(other)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident) => {
        impl $trait<&MpReal> for &MpReal {
            type Output = MpReal;
            fn $method(self, rhs: &MpReal) -> MpReal {
                let prec = self.0.prec().min(rhs.0.prec());
                MpReal(Float::with_val(prec, $trait::$method(&self.0, &rhs.0)))
            }
        }
        impl $trait<MpReal> for MpReal {
            type Output = MpReal;
            fn $method(self, rhs: MpReal) -> MpReal {
                $trait::$method(&self, &rhs)
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl Neg for MpReal {
    type Output = MpReal;
    fn neg(self) -> MpReal {
        MpReal(-self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_keeps_more_than_double_precision() {
        let x = MpReal::parse("0.34931003807815571524792421542558602868248355919027496611955665616", 70)
            .unwrap();
        let s = x.to_decimal_string(60);
        assert!(s.starts_with("3.4931003807815571524792421542558602868248355919027496611955"));
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(MpReal::parse("", 65).is_err());
        assert!(MpReal::parse("abc", 65).is_err());
        assert!(MpReal::parse("inf", 65).is_err());
        assert!(MpReal::parse("1.2.3", 65).is_err());
        assert!(MpReal::parse("0x10", 65).is_err());
    }

    #[test]
    fn arithmetic_takes_min_precision() {
        let a = MpReal::with_digits(1.0, 100);
        let b = MpReal::with_digits(3.0, 20);
        let c = &a / &b;
        assert_eq!(c.prec(), b.prec());
    }

    #[test]
    fn huge_exponents_do_not_overflow() {
        let ten = Float::with_val(64, 10);
        let big = MpReal::from_float(Float::with_val(64, rug::ops::Pow::pow(&ten, 1_000_000)));
        assert!(big.is_finite());
        assert!((big.log10_abs() - 1.0e6).abs() < 1e-6);
        let small = MpReal::from_float(Float::with_val(64, rug::ops::Pow::pow(&ten, -1_000_000)));
        assert!(!small.is_zero());
        assert!((small.log10_abs() + 1.0e6).abs() < 1e-6);
    }
}
