//! Multidose superposition of a fitted single-dose curve.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::gpc::{eval_f64, Quantity};
use crate::mp::PrecisionContext;
use crate::pk::FitResult;

/// `count` doses of `dose_mg_kg`, one every `interval_h`, the first at t = 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoseRegimen {
    pub dose_mg_kg: f64,
    pub interval_h: f64,
    pub count: u32,
}

impl DoseRegimen {
    pub fn new(dose_mg_kg: f64, interval_h: f64, count: u32) -> Result<Self> {
        let r = DoseRegimen {
            dose_mg_kg,
            interval_h,
            count,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dose_mg_kg.is_finite() && self.dose_mg_kg > 0.0) {
            return Err(domain("dose must be positive"));
        }
        if !(self.interval_h.is_finite() && self.interval_h > 0.0) {
            return Err(domain("dosing interval must be positive"));
        }
        if self.count == 0 {
            return Err(domain("at least one dose is needed"));
        }
        Ok(())
    }

    /// Doses given at or before t.
    fn given_by(&self, t: f64) -> u32 {
        if t < 0.0 {
            return 0;
        }
        let k = (t / self.interval_h).floor() as u64 + 1;
        k.min(u64::from(self.count)) as u32
    }

    fn dose_time(&self, j: u32) -> f64 {
        f64::from(j) * self.interval_h
    }
}

/// Per-interval summary; interval k runs from the k-th dose to the next one
/// (or to count·τ for the last).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalSummary {
    /// Dose number, from 1.
    pub index: u32,
    pub start_h: f64,
    pub peak_time_h: f64,
    /// mg/L
    pub peak_conc: f64,
    /// Concentration at the end of the interval, before the next dose.
    pub trough_conc: f64,
    /// Retained doses just after this dose.
    pub peak_doses_retained: f64,
    /// Retained doses at the end of the interval, before the next dose.
    pub trough_doses_retained: f64,
    /// Time average of retained doses over the interval.
    pub mean_doses_retained: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimenSummary {
    pub intervals: Vec<IntervalSummary>,
    /// Doses given minus the mean retained over the final interval.
    pub doses_eliminated: f64,
}

fn dose_scale(fit: &FitResult, regimen: &DoseRegimen) -> f64 {
    // AUC is proportional to dose; a fit without a recorded dose is taken
    // at the regimen's dose.
    if fit.dose_mg_kg > 0.0 {
        regimen.dose_mg_kg / fit.dose_mg_kg
    } else {
        1.0
    }
}

fn conc_from(fit: &FitResult, regimen: &DoseRegimen, t: f64, doses: u32, ctx: &PrecisionContext) -> Result<f64> {
    let auc = fit.auc * dose_scale(fit, regimen);
    let mut c = 0.0;
    for j in 0..doses {
        c += eval_f64(&fit.params, t - regimen.dose_time(j), Quantity::Density, ctx)?;
    }
    Ok(auc * c)
}

fn retained_from(fit: &FitResult, regimen: &DoseRegimen, t: f64, doses: u32, ctx: &PrecisionContext) -> Result<f64> {
    let mut m = 0.0;
    for j in 0..doses {
        m += 1.0 - eval_f64(&fit.params, t - regimen.dose_time(j), Quantity::Cdf, ctx)?;
    }
    Ok(m)
}

/// Superposed concentration (mg/L) of every dose given by t.
pub fn conc_multidose(fit: &FitResult, regimen: &DoseRegimen, t: f64, ctx: &PrecisionContext) -> Result<f64> {
    regimen.validate()?;
    if !t.is_finite() {
        return Err(domain("t must be finite"));
    }
    conc_from(fit, regimen, t, regimen.given_by(t), ctx)
}

/// Body burden in unit doses, Σ_j [1 − F(t − jτ)] over doses given by t.
pub fn retained_doses(fit: &FitResult, regimen: &DoseRegimen, t: f64, ctx: &PrecisionContext) -> Result<f64> {
    regimen.validate()?;
    if !t.is_finite() {
        return Err(domain("t must be finite"));
    }
    retained_from(fit, regimen, t, regimen.given_by(t), ctx)
}

const GOLDEN_TOL_H: f64 = 1e-10;

/// Maximizer of a unimodal `f` on [lo, hi].
fn golden_max(mut f: impl FnMut(f64) -> Result<f64>, mut lo: f64, mut hi: f64) -> Result<(f64, f64)> {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > GOLDEN_TOL_H {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1)?;
        }
    }
    Ok(if f1 > f2 { (x1, f1) } else { (x2, f2) })
}

fn summarize(fit: &FitResult, regimen: &DoseRegimen, k: u32, ctx: &PrecisionContext) -> Result<IntervalSummary> {
    let tau = regimen.interval_h;
    let start = regimen.dose_time(k);
    let end = start + tau;
    let given = k + 1;
    let beta = fit.params.beta().to_f64();
    // nothing from the new dose arrives before start + β
    let lo = start + beta;
    let hi = (start + 4.0 * beta + tau / 2.0).min(end);
    let (peak_time_h, peak_conc) = golden_max(|t| conc_from(fit, regimen, t, given, ctx), lo, hi)?;
    let trough_conc = conc_from(fit, regimen, end, given, ctx)?;
    let peak_doses_retained = retained_from(fit, regimen, start, given, ctx)?;
    let trough_doses_retained = retained_from(fit, regimen, end, given, ctx)?;
    let mut mean = 0.0;
    for j in 0..given {
        let s = regimen.dose_time(j);
        let f2 = eval_f64(&fit.params, end - s, Quantity::SuperCdf, ctx)?;
        let f1 = eval_f64(&fit.params, start - s, Quantity::SuperCdf, ctx)?;
        mean += 1.0 - (f2 - f1) / tau;
    }
    Ok(IntervalSummary {
        index: given,
        start_h: start,
        peak_time_h,
        peak_conc,
        trough_conc,
        peak_doses_retained,
        trough_doses_retained,
        mean_doses_retained: mean,
    })
}

/// Peak, pre-dose trough and mean body burden for every dosing interval.
///
/// The peak is a golden-section search on [kτ + β, kτ + 4β + τ/2]. Means use
/// the super-cumulative, so no numerical averaging is involved.
pub fn interval_summary(fit: &FitResult, regimen: &DoseRegimen, ctx: &PrecisionContext) -> Result<RegimenSummary> {
    regimen.validate()?;
    let intervals = (0..regimen.count)
        .into_par_iter()
        .map(|k| summarize(fit, regimen, k, ctx))
        .collect::<Result<Vec<_>>>()?;
    let last = intervals.last().expect("count >= 1");
    let doses_eliminated = f64::from(regimen.count) - last.mean_doses_retained;
    Ok(RegimenSummary {
        intervals,
        doses_eliminated,
    })
}
