use std::cell::RefCell;
use std::rc::Rc;

use rug::float::Constant;
use rug::Float;

use super::GpcParams;
use crate::mp::gamma::rgamma;
use crate::mp::MpReal;

/// Parameter-only constants. Fitting evaluates many times at one parameter
/// set, so the last few (set, precision) pairs per thread are kept.
pub(crate) struct ParamConsts {
    key: (u32, [Float; 4]),
    pub ln_b: Float,
    pub ln_beta: Float,
    pub ln_alpha: Float,
    /// ln Γ(a)
    pub lg_a: Float,
    /// ln Γ(α)
    pub lg_alpha: Float,
    /// π csc(πα)
    pub pi_csc: Float,
    /// 1/Γ(a − α + j), j = 0, 1, 2
    pub rg_amal: [Float; 3],
}

impl ParamConsts {
    fn new(key: (u32, [Float; 4])) -> Self {
        let bits = key.0;
        let [a, b, alpha, beta] = &key.1;
        let pi = Float::with_val(bits, Constant::Pi);
        let x = Float::with_val(bits, alpha * &pi);
        let pi_csc = pi / x.sin();
        let amal = Float::with_val(bits, a - alpha);
        let rg_amal = [0u32, 1, 2].map(|j| rgamma(&Float::with_val(bits, &amal + j), bits));
        ParamConsts {
            ln_b: Float::with_val(bits, b.ln_ref()),
            ln_beta: Float::with_val(bits, beta.ln_ref()),
            ln_alpha: Float::with_val(bits, alpha.ln_ref()),
            lg_a: Float::with_val(bits, a.ln_gamma_ref()),
            lg_alpha: Float::with_val(bits, alpha.ln_gamma_ref()),
            pi_csc,
            rg_amal,
            key,
        }
    }

    fn get(p: &GpcParams, bits: u32) -> Rc<Self> {
        const KEEP: usize = 4;
        thread_local! {
            static RECENT: RefCell<Vec<Rc<ParamConsts>>> = const { RefCell::new(Vec::new()) };
        }
        let f = |v: &Float| Float::with_val(bits, v);
        let key = (bits, [f(p.a()), f(p.b()), f(p.alpha()), f(p.beta())]);
        RECENT.with(|c| {
            let mut c = c.borrow_mut();
            if let Some(i) = c.iter().position(|k| k.key == key) {
                let hit = c.remove(i);
                c.push(Rc::clone(&hit));
                return hit;
            }
            let fresh = Rc::new(ParamConsts::new(key));
            if c.len() == KEEP {
                c.remove(0);
            }
            c.push(Rc::clone(&fresh));
            fresh
        })
    }
}

/// Parameter- and t-dependent constants at one working precision.
pub(crate) struct Setup {
    pub bits: u32,
    pub a: Float,
    pub b: Float,
    pub alpha: Float,
    pub beta: Float,
    pub t: Float,
    /// b·t
    pub bt: Float,
    /// β/t
    pub w: Float,
    /// 1 − β/t
    pub z: Float,
    pub ln_b: Float,
    pub ln_beta: Float,
    pub ln_t: Float,
    /// ln Γ(a)
    pub lg_a: Float,
    pub consts: Rc<ParamConsts>,
}

impl Setup {
    pub fn new(p: &GpcParams, t: &MpReal, bits: u32) -> Self {
        let consts = ParamConsts::get(p, bits);
        let [a, b, alpha, beta] = consts.key.1.clone();
        let t = Float::with_val(bits, t.as_float());
        let bt = Float::with_val(bits, &b * &t);
        let w = Float::with_val(bits, &beta / &t);
        // 1 − β/t = (t − β)/t, formed without cancellation
        let z = Float::with_val(bits, &t - &beta) / &t;
        let ln_b = consts.ln_b.clone();
        let ln_beta = consts.ln_beta.clone();
        let ln_t = Float::with_val(bits, t.ln_ref());
        let lg_a = consts.lg_a.clone();
        Setup { bits, a, b, alpha, beta, t, bt, w, z, ln_b, ln_beta, ln_t, lg_a, consts }
    }

    /// exp(ln α + a ln b + α ln β − ln Γ(a) + e ln t): the short-t multiplier
    /// for the power e of t.
    pub fn short_prefactor(&self, e: &Float) -> Float {
        let mut l = self.consts.ln_alpha.clone();
        l += Float::with_val(self.bits, &self.a * &self.ln_b);
        l += Float::with_val(self.bits, &self.alpha * &self.ln_beta);
        l -= &self.lg_a;
        l += Float::with_val(self.bits, e * &self.ln_t);
        l.exp()
    }
}
