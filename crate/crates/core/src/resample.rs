//! Model-based bootstrap and the interval/variability estimators used on
//! its output.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Error, Result};
use crate::mp::PrecisionContext;
use crate::pk::{fit_nelder_mead, ConcSeries, FitConfig, FitResult};

const MAX_REDRAWS: usize = 1000;

/// (obs − pred)/pred at each sample.
pub fn proportional_residuals(obs: &[f64], pred: &[f64]) -> Vec<f64> {
    obs.iter().zip(pred).map(|(o, p)| (o - p) / p).collect()
}

fn replicate_from(pred: &[f64], resid: &[f64], rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    pred.iter()
        .map(|&p| {
            for _ in 0..MAX_REDRAWS {
                let r = resid[rng.random_range(0..resid.len())];
                let v = p * (1.0 + r);
                if v > 0.0 {
                    return Ok(v);
                }
            }
            Err(domain("could not draw a positive synthetic concentration"))
        })
        .collect()
}

/// Synthetic data set: proportional residuals of `fit` resampled with
/// replacement and put back onto the model at the sample times.
pub fn make_replicate(fit: &FitResult, data: &ConcSeries, rng: &mut ChaCha8Rng, ctx: &PrecisionContext) -> Result<ConcSeries> {
    let pred = fit.predictions(data, ctx)?;
    let resid = proportional_residuals(&data.concentrations(), &pred);
    data.with_concentrations(&replicate_from(&pred, &resid, rng)?)
}

/// One refit replicate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRow {
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub beta_h: f64,
    pub auc: f64,
    pub clearance: f64,
    pub rrms: f64,
    pub r_squared: f64,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapRun {
    /// Converged replicates, in replicate order.
    pub replicates: Vec<ReplicateRow>,
    /// Replicates requested.
    pub n: usize,
    pub seed: u64,
    /// Replicates dropped because their fit failed or did not converge.
    pub failures: usize,
}

impl BootstrapRun {
    /// One column of the replicate table.
    pub fn column(&self, f: impl Fn(&ReplicateRow) -> f64) -> Vec<f64> {
        self.replicates.iter().map(f).collect()
    }

    pub fn mean_wall_time_s(&self) -> f64 {
        let n = self.replicates.len().max(1) as f64;
        self.replicates.iter().map(|r| r.wall_time_s).sum::<f64>() / n
    }
}

/// Random stream for replicate `i`; streams are independent, so results do
/// not depend on the order replicates run in.
pub fn replicate_rng(seed: u64, i: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i);
    rng
}

/// Generates and refits `n` replicates. Each refit starts from `fit`'s
/// estimate in addition to `cfg`'s Latin-hypercube points.
pub fn bootstrap_run(fit: &FitResult, data: &ConcSeries, n: usize, cfg: &FitConfig, seed: u64) -> Result<BootstrapRun> {
    if n < 2 {
        return Err(Error::InsufficientData("bootstrap needs at least 2 replicates".into()));
    }
    cfg.validate()?;
    let ctx = PrecisionContext::new(cfg.digits);
    let pred = fit.predictions(data, &ctx)?;
    let resid = proportional_residuals(&data.concentrations(), &pred);
    let p = fit.params.to_f64();
    let start = [p.a, p.b, p.alpha, p.beta_h, fit.auc];

    let outcomes: Vec<Result<ReplicateRow>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let started = Instant::now();
            let mut rng = replicate_rng(seed, i as u64);
            let rep = data.with_concentrations(&replicate_from(&pred, &resid, &mut rng)?)?;
            let mut c = cfg.clone();
            c.seed = rng.random();
            c.start = Some(start);
            let f = fit_nelder_mead(&rep, &c)?;
            if !f.converged {
                return Err(Error::Fit(format!("replicate {i} did not converge")));
            }
            let q = f.params.to_f64();
            Ok(ReplicateRow {
                a: q.a,
                b: q.b,
                alpha: q.alpha,
                beta_h: q.beta_h,
                auc: f.auc,
                clearance: f.clearance,
                rrms: f.rrms,
                r_squared: f.r_squared,
                wall_time_s: started.elapsed().as_secs_f64(),
            })
        })
        .collect();

    let mut replicates = Vec::with_capacity(n);
    let mut failures = 0;
    for (i, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(r) => replicates.push(r),
            Err(e) => {
                log::warn!("bootstrap replicate {i} excluded: {e}");
                failures += 1;
            }
        }
    }
    if failures > 0 {
        log::warn!("{failures} of {n} bootstrap replicates excluded");
    }
    Ok(BootstrapRun {
        replicates,
        n,
        seed,
        failures,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalMethod {
    StudentN,
    WeibullQuantile,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalEstimate {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub method: IntervalMethod,
}

fn check_level(level: f64) -> Result<()> {
    if !(level > 0.0 && level < 1.0) {
        return Err(domain("confidence level must lie in (0, 1)"));
    }
    Ok(())
}

fn mean_sd(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let ss: f64 = samples.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// mean ± t·s/√n, with the Student-t quantile taken at n degrees of freedom
/// rather than n − 1.
pub fn ci_student_n(samples: &[f64], level: f64) -> Result<IntervalEstimate> {
    check_level(level)?;
    let n = samples.len();
    if n < 2 {
        return Err(Error::InsufficientData("need at least 2 samples".into()));
    }
    let (mean, sd) = mean_sd(samples);
    let t = StudentsT::new(0.0, 1.0, n as f64)
        .expect("positive dof")
        .inverse_cdf(0.5 + level / 2.0);
    let half = t * sd / (n as f64).sqrt();
    Ok(IntervalEstimate {
        lower: mean - half,
        upper: mean + half,
        level,
        method: IntervalMethod::StudentN,
    })
}

/// Quantile at plotting position h = p(n+1), interpolating linearly between
/// order statistics.
pub fn weibull_quantile(samples: &[f64], p: f64) -> Result<f64> {
    let n = samples.len();
    if n == 0 {
        return Err(Error::InsufficientData("no samples".into()));
    }
    let mut h = p * (n as f64 + 1.0);
    // p(n+1) is often an integer in exact arithmetic but not in binary
    if (h - h.round()).abs() <= 8.0 * f64::EPSILON * h {
        h = h.round();
    }
    if !(1.0..=n as f64).contains(&h) {
        return Err(Error::InsufficientData(format!(
            "quantile {p} needs {} or more samples, have {n}",
            (1.0 / p.min(1.0 - p) - 1.0).ceil()
        )));
    }
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo == n {
        return Ok(x[n - 1]);
    }
    Ok(x[lo - 1] + frac * (x[lo] - x[lo - 1]))
}

/// Percentile interval with Weibull plotting positions.
pub fn ci_weibull_quantile(samples: &[f64], level: f64) -> Result<IntervalEstimate> {
    check_level(level)?;
    let tail = (1.0 - level) / 2.0;
    Ok(IntervalEstimate {
        lower: weibull_quantile(samples, tail)?,
        upper: weibull_quantile(samples, 1.0 - tail)?,
        level,
        method: IntervalMethod::WeibullQuantile,
    })
}

/// c_n = √((n−1)/2)·Γ((n−1)/2)/Γ(n/2), making c_n·s unbiased for σ.
pub fn c_n(n: usize) -> f64 {
    let m = n as f64;
    ((m - 1.0) / 2.0).sqrt() * (ln_gamma((m - 1.0) / 2.0) - ln_gamma(m / 2.0)).exp()
}

const CV_MEAN_TOL: f64 = 1e-12;

/// (cv, c_n·s) with cv = c_n·s/|mean|.
pub fn cv_sd_corrected(samples: &[f64]) -> Result<(f64, f64)> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InsufficientData("need at least 2 samples".into()));
    }
    let (mean, sd) = mean_sd(samples);
    if mean.abs() <= CV_MEAN_TOL {
        return Err(domain("mean is too close to zero for a stable CV"));
    }
    let sd_unbiased = c_n(n) * sd;
    Ok((sd_unbiased / mean.abs(), sd_unbiased))
}

/// Normality and homoscedasticity checks on a residual vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub n: usize,
    /// D'Agostino-Pearson K².
    pub normality_stat: f64,
    pub normality_p: f64,
    /// Slope of |residual| regressed on prediction.
    pub slope: f64,
    pub slope_t: f64,
    pub slope_p: f64,
    pub normal: bool,
    pub homoscedastic: bool,
    /// Residuals with no spread; neither test is meaningful.
    pub degenerate: bool,
}

impl ResidualReport {
    pub fn passed(&self) -> bool {
        self.normal && self.homoscedastic && !self.degenerate
    }
}

pub const RESIDUAL_ALPHA: f64 = 0.05;
const MIN_RESIDUALS: usize = 8;

/// D'Agostino's skewness z-score.
fn skew_z(x: &[f64], mean: f64, m2: f64) -> f64 {
    let n = x.len() as f64;
    let m3 = x.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
    let b1 = m3 / m2.powf(1.5);
    let mut y = b1 * ((n + 1.0) * (n + 3.0) / (6.0 * (n - 2.0))).sqrt();
    let beta2 = 3.0 * (n * n + 27.0 * n - 70.0) * (n + 1.0) * (n + 3.0)
        / ((n - 2.0) * (n + 5.0) * (n + 7.0) * (n + 9.0));
    let w2 = -1.0 + (2.0 * (beta2 - 1.0)).sqrt();
    let delta = 1.0 / (0.5 * w2.ln()).sqrt();
    let alpha = (2.0 / (w2 - 1.0)).sqrt();
    if y == 0.0 {
        y = 1.0;
    }
    let r = y / alpha;
    delta * (r + (r * r + 1.0).sqrt()).ln()
}

/// Anscombe-Glynn kurtosis z-score.
fn kurtosis_z(x: &[f64], mean: f64, m2: f64) -> f64 {
    let n = x.len() as f64;
    let m4 = x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    let b2 = m4 / (m2 * m2);
    let e = 3.0 * (n - 1.0) / (n + 1.0);
    let var = 24.0 * n * (n - 2.0) * (n - 3.0) / ((n + 1.0).powi(2) * (n + 3.0) * (n + 5.0));
    let xs = (b2 - e) / var.sqrt();
    let sqrt_beta1 = 6.0 * (n * n - 5.0 * n + 2.0) / ((n + 7.0) * (n + 9.0))
        * (6.0 * (n + 3.0) * (n + 5.0) / (n * (n - 2.0) * (n - 3.0))).sqrt();
    let a = 6.0 + 8.0 / sqrt_beta1 * (2.0 / sqrt_beta1 + (1.0 + 4.0 / (sqrt_beta1 * sqrt_beta1)).sqrt());
    let term1 = 1.0 - 2.0 / (9.0 * a);
    let denom = 1.0 + xs * (2.0 / (a - 4.0)).sqrt();
    let term2 = denom.signum() * ((1.0 - 2.0 / a) / denom.abs()).cbrt();
    (term1 - term2) / (2.0 / (9.0 * a)).sqrt()
}

/// K² statistic and its χ²(2) p-value.
pub fn dagostino_k2(x: &[f64]) -> Result<(f64, f64)> {
    if x.len() < MIN_RESIDUALS {
        return Err(Error::InsufficientData(format!(
            "normality test needs at least {MIN_RESIDUALS} values"
        )));
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let m2 = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if m2 == 0.0 {
        return Err(domain("values have no spread"));
    }
    let k2 = skew_z(x, mean, m2).powi(2) + kurtosis_z(x, mean, m2).powi(2);
    Ok((k2, (-k2 / 2.0).exp()))
}

/// OLS of |residual| on prediction: slope, t statistic, two-sided p.
pub fn abs_residual_slope(resid: &[f64], pred: &[f64]) -> Result<(f64, f64, f64)> {
    let n = resid.len();
    if n < 3 || pred.len() != n {
        return Err(Error::InsufficientData("slope test needs 3 or more paired values".into()));
    }
    let y: Vec<f64> = resid.iter().map(|r| r.abs()).collect();
    let nf = n as f64;
    let mx = pred.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = pred.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(domain("predictions have no spread"));
    }
    let sxy: f64 = pred.iter().zip(&y).map(|(x, v)| (x - mx) * (v - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let sse: f64 = pred.iter().zip(&y).map(|(x, v)| (v - icpt - slope * x).powi(2)).sum();
    let se = (sse / (nf - 2.0) / sxx).sqrt();
    if se == 0.0 {
        let p = if slope == 0.0 { 1.0 } else { 0.0 };
        return Ok((slope, if slope == 0.0 { 0.0 } else { f64::INFINITY }, p));
    }
    let t = slope / se;
    let dist = StudentsT::new(0.0, 1.0, nf - 2.0).expect("positive dof");
    let p = 2.0 * (1.0 - dist.cdf(t.abs()));
    Ok((slope, t, p))
}

/// Runs both checks on `resid` against `pred` at the 0.05 level.
pub fn residual_tests(resid: &[f64], pred: &[f64]) -> Result<ResidualReport> {
    let n = resid.len();
    if n < MIN_RESIDUALS {
        return Err(Error::InsufficientData(format!(
            "residual checks need at least {MIN_RESIDUALS} residuals, have {n}"
        )));
    }
    let mean = resid.iter().sum::<f64>() / n as f64;
    let spread = resid.iter().map(|r| (r - mean).abs()).fold(0.0, f64::max);
    if spread <= 1e-15 * mean.abs().max(1e-300) {
        return Ok(ResidualReport {
            n,
            normality_stat: f64::NAN,
            normality_p: f64::NAN,
            slope: f64::NAN,
            slope_t: f64::NAN,
            slope_p: f64::NAN,
            normal: false,
            homoscedastic: false,
            degenerate: true,
        });
    }
    let (k2, np) = dagostino_k2(resid)?;
    let (slope, t, sp) = abs_residual_slope(resid, pred)?;
    Ok(ResidualReport {
        n,
        normality_stat: k2,
        normality_p: np,
        slope,
        slope_t: t,
        slope_p: sp,
        normal: np >= RESIDUAL_ALPHA,
        homoscedastic: sp >= RESIDUAL_ALPHA,
        degenerate: false,
    })
}

/// Checks on the proportional residuals of `fit` against `data`.
pub fn residual_checks(fit: &FitResult, data: &ConcSeries, ctx: &PrecisionContext) -> Result<ResidualReport> {
    if data.len() < MIN_RESIDUALS {
        return Err(Error::InsufficientData(format!(
            "residual checks need at least {MIN_RESIDUALS} residuals, have {}",
            data.len()
        )));
    }
    let pred = fit.predictions(data, ctx)?;
    residual_tests(&proportional_residuals(&data.concentrations(), &pred), &pred)
}
