use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

const LOG2_10: f64 = std::f64::consts::LOG2_10;

/// Default number of significant decimal digits requested from every evaluator.
pub const DEFAULT_TARGET_DIGITS: u32 = 65;
/// Default number of extra decimal digits carried on top of the target.
pub const DEFAULT_GUARD_DIGITS: u32 = 10;

/// Decimal digits to MPFR mantissa bits (rounded up, plus a few spare bits).
pub fn digits_to_bits(digits: u32) -> u32 {
    (f64::from(digits) * LOG2_10).ceil() as u32 + 4
}

/// MPFR mantissa bits to whole decimal digits.
pub fn bits_to_digits(bits: u32) -> u32 {
    (f64::from(bits) / LOG2_10).floor() as u32
}

/// Precision contract shared by all multiprecision evaluators.
///
/// `target_digits` is what the caller wants back; `working_digits` is what a
/// single-pass summation runs at. Evaluators that detect cancellation widen
/// the working precision on their own and report what they achieved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrecisionContext {
    pub target_digits: u32,
    pub working_digits: u32,
    pub guard_digits: u32,
}

impl Default for PrecisionContext {
    fn default() -> Self {
        Self::new(DEFAULT_TARGET_DIGITS)
    }
}

impl PrecisionContext {
    pub fn new(target_digits: u32) -> Self {
        Self::with_guard(target_digits, DEFAULT_GUARD_DIGITS)
    }

    pub fn with_guard(target_digits: u32, guard_digits: u32) -> Self {
        Self {
            target_digits,
            working_digits: target_digits + guard_digits,
            guard_digits,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.target_digits == 0 {
            return Err(domain("target_digits must be positive"));
        }
        if self.working_digits < self.target_digits {
            return Err(domain("working_digits must be at least target_digits"));
        }
        Ok(())
    }

    pub fn working_bits(&self) -> u32 {
        digits_to_bits(self.working_digits)
    }

    pub fn target_bits(&self) -> u32 {
        digits_to_bits(self.target_digits)
    }

    pub fn guard_bits(&self) -> u32 {
        digits_to_bits(self.guard_digits)
    }

    /// Same target, working precision raised by `extra` digits.
    pub fn widened(&self, extra: u32) -> Self {
        Self {
            working_digits: self.working_digits + extra,
            ..*self
        }
    }

    /// Guard doubled, working precision rebuilt from target + guard.
    pub fn doubled_guard(&self) -> Self {
        let guard = (self.guard_digits * 2).max(1);
        Self {
            target_digits: self.target_digits,
            working_digits: self.working_digits.max(self.target_digits + guard),
            guard_digits: guard,
        }
    }
}
