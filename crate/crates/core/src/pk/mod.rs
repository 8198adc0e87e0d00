//! Concentration model C(t) = AUC·f(t), the proportional-norm loss and the
//! bounded Nelder-Mead fit.

pub mod nelder_mead;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::gpc::{eval_f64, GpcParams, Quantity, SECONDS_PER_HOUR};
use crate::mp::PrecisionContext;
use nelder_mead::{minimize, SimplexOptions};

/// One observation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub time_h: f64,
    pub conc_mg_per_l: f64,
}

/// Time-concentration series for one subject after one dose.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcSeries {
    samples: Vec<Sample>,
    pub subject_id: String,
    /// mg/kg
    pub dose_mg_kg: f64,
}

impl ConcSeries {
    /// Samples are put in time order. Times must be positive and distinct,
    /// concentrations positive.
    pub fn new(mut samples: Vec<Sample>, subject_id: impl Into<String>, dose_mg_kg: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InsufficientData("no samples".into()));
        }
        if let Some(s) = samples.iter().find(|s| !s.time_h.is_finite()) {
            return Err(domain(format!("time {} is not finite", s.time_h)));
        }
        samples.sort_by(|x, y| x.time_h.total_cmp(&y.time_h));
        let mut prev = 0.0;
        for (i, s) in samples.iter().enumerate() {
            if !(s.time_h > prev) {
                return Err(domain(format!(
                    "sample {i}: times must be positive and distinct"
                )));
            }
            if !(s.conc_mg_per_l.is_finite() && s.conc_mg_per_l > 0.0) {
                return Err(domain(format!("sample {i}: concentration must be positive")));
            }
            prev = s.time_h;
        }
        if !(dose_mg_kg.is_finite() && dose_mg_kg >= 0.0) {
            return Err(domain("dose must be non-negative"));
        }
        Ok(ConcSeries {
            samples,
            subject_id: subject_id.into(),
            dose_mg_kg,
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.time_h).collect()
    }

    pub fn concentrations(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.conc_mg_per_l).collect()
    }

    /// Same subject and times with new concentrations.
    pub fn with_concentrations(&self, conc: &[f64]) -> Result<Self> {
        if conc.len() != self.samples.len() {
            return Err(domain("concentration count does not match sample count"));
        }
        let samples = self
            .samples
            .iter()
            .zip(conc)
            .map(|(s, &c)| Sample {
                time_h: s.time_h,
                conc_mg_per_l: c,
            })
            .collect();
        ConcSeries::new(samples, self.subject_id.clone(), self.dose_mg_kg)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

impl Bounds {
    pub const fn new(lower: f64, upper: f64) -> Self {
        Bounds { lower, upper }
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.lower.is_finite() && self.upper.is_finite() && self.lower > 0.0 && self.lower < self.upper) {
            return Err(Error::Fit(format!(
                "{name} bounds must satisfy 0 < lower < upper, got [{}, {}]",
                self.lower, self.upper
            )));
        }
        Ok(())
    }

    /// Logistic map of u onto the bounds, uniform in log x.
    fn to_value(self, u: f64) -> f64 {
        let s = 1.0 / (1.0 + (-u).exp());
        let (l, h) = (self.lower.ln(), self.upper.ln());
        (l + (h - l) * s).exp().clamp(self.lower, self.upper)
    }

    fn to_coord(self, x: f64) -> f64 {
        let (l, h) = (self.lower.ln(), self.upper.ln());
        let s = ((x.ln() - l) / (h - l)).clamp(1e-12, 1.0 - 1e-12);
        (s / (1.0 - s)).ln()
    }
}

/// Box, restart and stopping settings for [`fit_nelder_mead`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub a: Bounds,
    pub b: Bounds,
    pub alpha: Bounds,
    /// β in hours.
    pub beta_h: Bounds,
    pub auc: Bounds,
    /// Latin-hypercube starting points.
    pub restarts: usize,
    /// Iteration cap for each simplex run.
    pub max_iterations: u64,
    /// Simplex diameter, in transformed coordinates, that counts as converged.
    pub tolerance: f64,
    pub seed: u64,
    /// Target digits for each density evaluation.
    pub digits: u32,
    /// Optional extra starting point (a, b, α, β h, AUC), tried before the
    /// Latin-hypercube points.
    pub start: Option<[f64; 5]>,
}

impl Default for FitConfig {
    fn default() -> Self {
        let hour = f64::from(SECONDS_PER_HOUR);
        FitConfig {
            a: Bounds::new(0.05, 2.0),
            b: Bounds::new(0.05, 5.0),
            alpha: Bounds::new(0.02, 0.98),
            beta_h: Bounds::new(25.0 / hour, 30.0 / hour),
            auc: Bounds::new(1.0, 1000.0),
            restarts: 8,
            max_iterations: 20_010,
            tolerance: 1e-10,
            seed: 0,
            digits: 65,
            start: None,
        }
    }
}

impl FitConfig {
    fn bounds(&self) -> [Bounds; 5] {
        [self.a, self.b, self.alpha, self.beta_h, self.auc]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, b) in ["a", "b", "alpha", "beta", "auc"].iter().zip(self.bounds()) {
            b.validate(name)?;
        }
        if self.alpha.lower < 1.0 && self.alpha.upper > 1.0 {
            return Err(Error::Fit("alpha bounds may not straddle 1".into()));
        }
        if self.restarts == 0 {
            return Err(Error::Fit("at least one restart is needed".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Fit("tolerance must be positive".into()));
        }
        PrecisionContext::new(self.digits).validate()
    }

    fn context(&self) -> PrecisionContext {
        PrecisionContext::new(self.digits)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub params: GpcParams,
    /// mg·h/L
    pub auc: f64,
    /// ml/min/kg
    pub clearance: f64,
    pub rrms: f64,
    pub r_squared: f64,
    pub iterations: u64,
    pub converged: bool,
    pub dose_mg_kg: f64,
}

/// C(t) = AUC·f(t), mg/L.
pub fn concentration(params: &GpcParams, auc: f64, t: f64, ctx: &PrecisionContext) -> Result<f64> {
    if !(auc > 0.0) {
        return Err(domain("auc must be positive"));
    }
    Ok(auc * eval_f64(params, t, Quantity::Density, ctx)?)
}

fn predictions(params: &GpcParams, auc: f64, data: &ConcSeries, ctx: &PrecisionContext) -> Result<Vec<f64>> {
    data.samples()
        .iter()
        .map(|s| concentration(params, auc, s.time_h, ctx))
        .collect()
}

fn rrms_of(obs: &[f64], pred: &[f64]) -> Result<f64> {
    let mut acc = 0.0;
    for (i, (&o, &p)) in obs.iter().zip(pred).enumerate() {
        if !(p > 0.0) {
            return Err(Error::Loss(format!(
                "prediction is {p} at sample {i}; beta bound may exceed the first sample time"
            )));
        }
        acc += ((o - p) / p).powi(2);
    }
    Ok((acc / obs.len() as f64).sqrt())
}

/// Proportional norm sqrt(mean(((obs − pred)/pred)²)).
pub fn rrms_loss(params: &GpcParams, auc: f64, data: &ConcSeries, ctx: &PrecisionContext) -> Result<f64> {
    let pred = predictions(params, auc, data, ctx)?;
    rrms_of(&data.concentrations(), &pred)
}

/// 1 − SS_res/SS_tot on concentrations, clamped at 0.
pub fn r_squared(obs: &[f64], pred: &[f64]) -> f64 {
    let mean = obs.iter().sum::<f64>() / obs.len() as f64;
    let ss_tot: f64 = obs.iter().map(|o| (o - mean).powi(2)).sum();
    let ss_res: f64 = obs.iter().zip(pred).map(|(o, p)| (o - p).powi(2)).sum();
    if ss_tot == 0.0 {
        return if ss_res == 0.0 { 1.0 } else { 0.0 };
    }
    (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
}

/// Dose/AUC converted from L/(h·kg) to ml/(min·kg).
pub fn clearance(dose_mg_kg: f64, auc: f64) -> Result<f64> {
    if !(auc > 0.0) || !auc.is_finite() {
        return Err(domain("clearance needs a positive auc"));
    }
    Ok(dose_mg_kg / auc * 1000.0 / 60.0)
}

/// Parameters from fitted doubles, routed through their shortest decimal
/// form so that a written result reloads to identical values.
pub fn params_from_coords(x: &[f64; 4]) -> Result<GpcParams> {
    let s = x.map(|v| format!("{v:e}"));
    GpcParams::parse(&s[0], &s[1], &s[2], &s[3])
}

fn decode(cfg_bounds: &[Bounds; 5], u: &[f64]) -> [f64; 5] {
    std::array::from_fn(|i| cfg_bounds[i].to_value(u[i]))
}

fn latin_hypercube(n: usize, dim: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut pts = vec![vec![0.0; dim]; n];
    for d in 0..dim {
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(rng);
        for (p, s) in pts.iter_mut().zip(strata) {
            p[d] = (s as f64 + rng.random::<f64>()) / n as f64;
        }
    }
    pts
}

/// Coarse pass tolerance for the restarts; the best one is then polished.
const COARSE_TOL: f64 = 1e-2;
/// Initial simplex step in transformed coordinates.
const START_STEP: f64 = 0.5;
const POLISH_STEP: f64 = 0.05;

/// Fits (a, b, α, β, AUC) by minimizing [`rrms_loss`].
///
/// Each coordinate is mapped onto its bounds by a logistic transform, so the
/// simplex itself is unconstrained. Every Latin-hypercube start (plus
/// `cfg.start`) gets a coarse simplex run; the best of them is restarted
/// with a fresh small simplex and run down to `cfg.tolerance`. There is no
/// gradient-based post-processing.
pub fn fit_nelder_mead(data: &ConcSeries, cfg: &FitConfig) -> Result<FitResult> {
    cfg.validate()?;
    let ctx = cfg.context();
    let bounds = cfg.bounds();
    let obs = data.concentrations();
    let loss = |u: &[f64]| -> f64 {
        let x = decode(&bounds, u);
        let Ok(p) = GpcParams::from_f64(x[0], x[1], x[2], x[3]) else {
            return f64::INFINITY;
        };
        predictions(&p, x[4], data, &ctx)
            .and_then(|pred| rrms_of(&obs, &pred))
            .unwrap_or(f64::INFINITY)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut starts: Vec<Vec<f64>> = Vec::new();
    if let Some(s) = cfg.start {
        starts.push((0..5).map(|i| bounds[i].to_coord(s[i])).collect());
    }
    for p in latin_hypercube(cfg.restarts, 5, &mut rng) {
        // keep starts off the saturated ends of the logistic
        starts.push(p.iter().map(|&s| 6.0 * s - 3.0).collect());
    }

    let coarse = SimplexOptions {
        step: START_STEP,
        diameter_tol: COARSE_TOL,
        max_iterations: cfg.max_iterations,
    };
    let runs: Vec<_> = starts.par_iter().map(|s| minimize(loss, s, &coarse)).collect();
    let mut iterations: u64 = runs.iter().map(|r| r.iterations).sum();
    let best = runs
        .into_iter()
        .filter(|r| r.fx.is_finite())
        .min_by(|a, b| a.fx.total_cmp(&b.fx))
        .ok_or_else(|| Error::Fit("every restart failed to evaluate".into()))?;
    log::debug!("coarse best rrms {} after {iterations} iterations", best.fx);

    let polish = SimplexOptions {
        step: POLISH_STEP,
        diameter_tol: cfg.tolerance,
        max_iterations: cfg.max_iterations,
    };
    let mut fin = minimize(loss, &best.x, &polish);
    iterations += fin.iterations;
    // a polish that ended on the iteration cap gets one more fresh simplex
    if !fin.converged {
        let again = minimize(loss, &fin.x, &polish);
        iterations += again.iterations;
        if again.fx <= fin.fx {
            fin = again;
        }
    }

    let x = decode(&bounds, &fin.x);
    let params = params_from_coords(&[x[0], x[1], x[2], x[3]])?;
    let auc: f64 = format!("{:e}", x[4]).parse().expect("formatted float");
    let pred = predictions(&params, auc, data, &ctx)?;
    Ok(FitResult {
        rrms: rrms_of(&obs, &pred)?,
        r_squared: r_squared(&obs, &pred),
        clearance: clearance(data.dose_mg_kg, auc)?,
        params,
        auc,
        iterations,
        converged: fin.converged,
        dose_mg_kg: data.dose_mg_kg,
    })
}

impl FitResult {
    pub fn concentration(&self, t: f64, ctx: &PrecisionContext) -> Result<f64> {
        concentration(&self.params, self.auc, t, ctx)
    }

    /// Model predictions at the sample times of `data`.
    pub fn predictions(&self, data: &ConcSeries, ctx: &PrecisionContext) -> Result<Vec<f64>> {
        predictions(&self.params, self.auc, data, ctx)
    }

    /// Builds a result for given parameters, scoring it against `data`.
    pub fn evaluate(params: GpcParams, auc: f64, data: &ConcSeries, ctx: &PrecisionContext) -> Result<Self> {
        let obs = data.concentrations();
        let pred = predictions(&params, auc, data, ctx)?;
        Ok(FitResult {
            rrms: rrms_of(&obs, &pred)?,
            r_squared: r_squared(&obs, &pred),
            clearance: clearance(data.dose_mg_kg, auc)?,
            params,
            auc,
            iterations: 0,
            converged: true,
            dose_mg_kg: data.dose_mg_kg,
        })
    }
}
