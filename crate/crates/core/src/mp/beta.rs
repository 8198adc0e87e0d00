use rug::Float;

use super::gamma::ln_abs_gamma;
use super::util::{is_nonpos_int, log2_abs, powf, with_cancellation_retry};
use crate::error::{domain, Error, Result};

/// Above this z the direct series is abandoned for the complement form when
/// the complement converges quickly.
const DIRECT_Z_MAX: f64 = 0.75;

fn check(z: &Float, a: &Float, b: &Float) -> Result<()> {
    if !z.is_finite() || *z < 0 || *z >= 1 {
        return Err(domain("incomplete beta needs 0 <= z < 1"));
    }
    if !a.is_finite() || *a <= 0 {
        return Err(domain("incomplete beta needs A > 0"));
    }
    if !b.is_finite() || is_nonpos_int(b) {
        return Err(domain("incomplete beta second parameter may not be 0, -1, -2, ..."));
    }
    Ok(())
}

/// Complete beta Γ(A)Γ(B)/Γ(A+B); zero when A+B is a pole of Γ.
pub(crate) fn beta_complete(a: &Float, b: &Float, p: u32) -> Result<Float> {
    let s = Float::with_val(p, a + b);
    if is_nonpos_int(&s) {
        return Ok(Float::with_val(p, 0));
    }
    let (la, sa) = ln_abs_gamma(a, p)?;
    let (lb, sb) = ln_abs_gamma(b, p)?;
    let (ls, ss) = ln_abs_gamma(&s, p)?;
    let v = (la + lb - ls).exp();
    Ok(if sa * sb * ss < 0 { -v } else { v })
}

/// z^A Σ_j (1−B)_j z^j / (j!(A+j)); returns the sum and its largest term (log2).
fn direct_series(z: &Float, a: &Float, b: &Float, p: u32) -> Result<(Float, f64)> {
    let mut c = Float::with_val(p, 1);
    let mut sum = Float::with_val(p, 1u32) / a;
    let mut max_log2 = log2_abs(&sum);
    let mut onemb = Float::with_val(p, 1u32 - b);
    let zf = z.to_f64();
    let bf = b.to_f64();
    let budget = 5000 + (40.0 * f64::from(p) / (1.0 - zf)) as usize;
    for j in 0..budget {
        c *= &onemb;
        c *= z;
        c /= (j + 1) as u32;
        if c.is_zero() {
            break;
        }
        onemb += 1;
        let t = Float::with_val(p, &c / Float::with_val(p, a + (j + 1) as u32));
        let tl = log2_abs(&t);
        max_log2 = max_log2.max(tl);
        sum += &t;
        let jf = j as f64 + 1.0;
        let shrinking = (jf - bf).abs() * zf < jf + 1.0;
        if shrinking && tl < log2_abs(&sum) - f64::from(p) - 2.0 {
            break;
        }
        if j + 1 == budget {
            return Err(Error::NoConvergence(format!("incomplete beta series at z={zf}")));
        }
    }
    let za = powf(z, a, p);
    let zal = log2_abs(&za);
    Ok((sum * za, max_log2 + zal))
}

/// B(A,B) − B_{1−z}(B,A).
fn complement(z: &Float, a: &Float, b: &Float, p: u32) -> Result<(Float, f64)> {
    let w = Float::with_val(p, 1u32 - z);
    let full = beta_complete(a, b, p)?;
    let (tail, _) = direct_series(&w, b, a, p)?;
    let m = log2_abs(&full).max(log2_abs(&tail));
    Ok((full - tail, m))
}

fn pick_complement(z: &Float, a: &Float) -> bool {
    let zf = z.to_f64();
    zf > DIRECT_Z_MAX && a.to_f64() * (1.0 - zf) <= 8.0
}

fn inc_beta_raw(z: &Float, a: &Float, b: &Float, p: u32) -> Result<(Float, f64)> {
    if pick_complement(z, a) {
        complement(z, a, b, p)
    } else {
        direct_series(z, a, b, p)
    }
}

/// Generalized incomplete beta B_z(A, B) = ∫₀^z u^{A−1}(1−u)^{B−1} du,
/// valid for any non-pole B (including negative B) when z < 1.
pub(crate) fn inc_beta_gen(z: &Float, a: &Float, b: &Float, prec: u32) -> Result<Float> {
    check(z, a, b)?;
    if z.is_zero() {
        return Ok(Float::with_val(prec, 0));
    }
    with_cancellation_retry(prec, |p| inc_beta_raw(z, a, b, p))
}

/// B_z(A₀+n, B) for n = 0, 1, 2, … by the upward recurrence
/// B_z(A+1,B) = [A·B_z(A,B) − z^A(1−z)^B]/(A+B),
/// re-seeded from the direct evaluation whenever the tracked error growth
/// would eat into the internal guard.
pub struct IncBetaLadder {
    z: Float,
    b: Float,
    a: Float,
    n: u64,
    value: Float,
    za: Float,
    wb: Float,
    prec: u32,
    work: u32,
    loss_bits: f64,
    reseeds: u32,
}

const LADDER_EXTRA: u32 = 40;
const LADDER_RESEED: f64 = 28.0;

impl IncBetaLadder {
    pub fn new(z: &Float, a0: &Float, b: &Float, prec: u32) -> Result<Self> {
        check(z, a0, b)?;
        let work = prec + LADDER_EXTRA;
        let z = Float::with_val(work, z);
        let a = Float::with_val(work, a0);
        let b = Float::with_val(work, b);
        let w = Float::with_val(work, 1u32 - &z);
        let wb = powf(&w, &b, work);
        let za = powf(&z, &a, work);
        let value = inc_beta_gen(&z, &a, &b, work)?;
        Ok(Self {
            z,
            b,
            a,
            n: 0,
            value,
            za,
            wb,
            prec,
            work,
            loss_bits: 0.0,
            reseeds: 0,
        })
    }

    /// Current index n.
    pub fn index(&self) -> u64 {
        self.n
    }

    /// B_z(A₀+n, B) rounded to the requested precision.
    pub fn value(&self) -> Float {
        Float::with_val(self.prec, &self.value)
    }

    pub fn reseeds(&self) -> u32 {
        self.reseeds
    }

    fn reseed(&mut self) -> Result<()> {
        self.value = inc_beta_gen(&self.z, &self.a, &self.b, self.work)?;
        self.za = powf(&self.z, &self.a, self.work);
        self.loss_bits = 0.0;
        self.reseeds += 1;
        Ok(())
    }

    /// Steps to n+1.
    pub fn advance(&mut self) -> Result<()> {
        let apb = Float::with_val(self.work, &self.a + &self.b);
        let old_log2 = log2_abs(&self.value);
        if self.z.is_zero() {
            self.a += 1;
            self.n += 1;
            return Ok(());
        }
        if apb.is_zero() {
            self.a += 1;
            self.n += 1;
            return self.reseed();
        }
        let ratio = Float::with_val(self.work, &self.a / &apb);
        let drop = Float::with_val(self.work, &self.za * &self.wb) / &apb;
        let next = Float::with_val(self.work, &ratio * &self.value) - drop;
        self.za *= &self.z;
        self.a += 1;
        self.n += 1;
        let amp = log2_abs(&ratio) + old_log2 - log2_abs(&next);
        self.value = next;
        self.loss_bits = (self.loss_bits + amp).max(0.0);
        if !self.loss_bits.is_finite() || self.loss_bits > LADDER_RESEED {
            self.reseed()?;
        }
        Ok(())
    }
}

impl std::fmt::Debug for IncBetaLadder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("IncBetaLadder")
            .field("n", &self.n)
            .field("z", &self.z.to_f64())
            .field("reseeds", &self.reseeds)
            .finish()
    }
}
