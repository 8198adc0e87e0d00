//! Short-t series: C·t^e·Σ (−bt)^n/n! · g_n · B_{1−β/t}(A₀+n, −α).

use rug::Float;

use super::setup::Setup;
use super::{GpcParams, Quantity, SeriesRun};
use crate::error::{Error, Result};
use crate::mp::context::digits_to_bits;
use crate::mp::util::{log2_abs, powf};
use crate::mp::{IncBetaLadder, MpReal};

const LOG2_10: f64 = std::f64::consts::LOG2_10;

pub(crate) fn run(
    p: &GpcParams,
    t: &MpReal,
    q: Quantity,
    digits: u32,
    target: u32,
    mut record: Option<&mut Vec<Float>>,
) -> Result<SeriesRun> {
    let bits = digits_to_bits(digits);
    let s = Setup::new(p, t, bits);
    let neg_alpha = Float::with_val(bits, -&s.alpha);
    let a_minus_alpha = Float::with_val(bits, &s.a - &s.alpha);
    let (shift, e) = match q {
        Quantity::Density => (0u32, a_minus_alpha - 1u32),
        Quantity::Cdf => (1, a_minus_alpha),
        Quantity::SuperCdf => (2, a_minus_alpha + 1u32),
        Quantity::Deriv => (0, a_minus_alpha - 2u32),
    };
    let a0 = Float::with_val(bits, &s.a + shift);
    let mut ladder = IncBetaLadder::new(&s.z, &a0, &neg_alpha, bits)?;
    let pref = s.short_prefactor(&e);
    let pref_log2 = log2_abs(&pref);

    // derivative boundary piece z^{A−1}(1−z)^{−α}
    let mut zpow = if q == Quantity::Deriv {
        let am1 = Float::with_val(bits, &s.a - 1u32);
        powf(&s.z, &am1, bits) * powf(&s.w, &neg_alpha, bits)
    } else {
        Float::with_val(bits, 0)
    };

    let mut pn = Float::with_val(bits, 1);
    let mut big_a = s.a.clone();
    let neg_bt = Float::with_val(bits, -&s.bt);
    let btf = s.bt.to_f64();
    let mut sum = Float::with_val(bits, 0);
    let mut max_log2 = f64::NEG_INFINITY;
    let mut threshold = f64::NEG_INFINITY;
    let budget = 1000 + (10.0 * btf) as u64 + 4 * u64::from(digits);
    let mut n = 0u64;
    loop {
        let bz = ladder.value();
        let term = match q {
            Quantity::Density => Float::with_val(bits, &pn * &bz),
            Quantity::Cdf => Float::with_val(bits, &pn * &bz) / &big_a,
            Quantity::SuperCdf => {
                let d = Float::with_val(bits, &big_a * Float::with_val(bits, &big_a + 1u32));
                Float::with_val(bits, &pn * &bz) / d
            }
            Quantity::Deriv => {
                let c = Float::with_val(bits, &big_a - 1u32) - &s.alpha;
                let inner = Float::with_val(bits, &c * &bz) + &zpow;
                Float::with_val(bits, &pn * &inner)
            }
        };
        let scaled_log2 = log2_abs(&term) + pref_log2;
        if let Some(rec) = record.as_deref_mut() {
            rec.push(Float::with_val(bits, &term * &pref));
        }
        sum += &term;
        max_log2 = max_log2.max(scaled_log2);
        if n == 0 {
            threshold = -f64::from(target) * LOG2_10 + scaled_log2.min(0.0);
        }
        n += 1;
        let past_peak = (n as f64) > btf;
        if n > 1 && past_peak && (term.is_zero() || scaled_log2 < threshold) {
            break;
        }
        if n >= budget {
            return Err(Error::NoConvergence(format!(
                "short-t series at t={} after {n} terms",
                s.t.to_f64()
            )));
        }
        pn *= &neg_bt;
        pn /= n;
        if q == Quantity::Deriv {
            zpow *= &s.z;
        }
        big_a += 1u32;
        ladder.advance()?;
    }
    let value = sum * pref;
    Ok(SeriesRun {
        value,
        terms: n,
        max_term_log2: max_log2,
        max_part_log2: max_log2,
        digits,
    })
}
