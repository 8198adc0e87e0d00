//! `gpc` command-line tool.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use gpc_core::dosing::{interval_summary, DoseRegimen};
use gpc_core::gpc::{
    conv_oracle, gpc_long, gpc_quantity, gpc_short, gpc_short_quantity, gpc_long_quantity, EvalResult, GpcParams,
    Quantity,
};
use gpc_core::io::{fit_from_json, fit_to_json, read_conc_csv, FitDocument};
use gpc_core::pk::{fit_nelder_mead, FitConfig, FitResult};
use gpc_core::resample::{bootstrap_run, ci_student_n, ci_weibull_quantile, c_n, cv_sd_corrected, residual_checks};
use gpc_core::{Error, MpReal, PrecisionContext};

#[derive(Parser)]
#[command(name = "gpc", version, about = "Gamma-Pareto convolution evaluator and PK toolkit")]
struct Cli {
    /// Target significant digits.
    #[arg(long, global = true, default_value_t = 65, value_parser = clap::value_parser!(u32).range(1..=100_000))]
    digits: u32,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Density f(t).
    Eval(PointArgs),
    /// Cumulative F(t).
    Cdf(PointArgs),
    /// ∫₀ᵗ F.
    Supercdf(PointArgs),
    /// f′(t).
    Deriv(PointArgs),
    /// Fit the model to a concentration CSV.
    Fit(FitArgs),
    /// Model-based bootstrap of a fit.
    Bootstrap(BootstrapArgs),
    /// Repeated-dose prediction.
    Multidose(MultidoseArgs),
    /// Short-t and long-t diagnostics as CSV.
    Bench(BenchArgs),
    /// Quick internal consistency checks.
    Selftest(SelftestArgs),
}

fn decimal(s: &str) -> Result<String, String> {
    MpReal::parse(s, 20).map(|_| s.trim().to_string()).map_err(|e| e.to_string())
}

#[derive(Args)]
struct ParamArgs {
    /// Use the built-in 65-digit dog 1 parameters.
    #[arg(long, conflicts_with_all = ["fit", "a", "b", "alpha", "beta_h", "beta_s"])]
    dog1: bool,
    /// Take parameters (and AUC) from a fit JSON document.
    #[arg(long, conflicts_with_all = ["a", "b", "alpha", "beta_h", "beta_s"])]
    fit: Option<PathBuf>,
    #[arg(long, value_parser = decimal, allow_hyphen_values = true)]
    a: Option<String>,
    #[arg(long, value_parser = decimal, allow_hyphen_values = true)]
    b: Option<String>,
    #[arg(long, value_parser = decimal, allow_hyphen_values = true)]
    alpha: Option<String>,
    /// Pareto β in hours.
    #[arg(long, value_parser = decimal, allow_hyphen_values = true, conflicts_with = "beta_s")]
    beta_h: Option<String>,
    /// Pareto β in seconds.
    #[arg(long, value_parser = decimal, allow_hyphen_values = true)]
    beta_s: Option<String>,
}

#[derive(Args)]
struct PointArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Time in hours.
    #[arg(long, value_parser = decimal, allow_hyphen_values = true)]
    t: String,
}

#[derive(Args)]
struct DataArgs {
    /// CSV with header time_h,conc_mg_per_L.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_parser = decimal)]
    dose_mg_kg: String,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Latin-hypercube restarts.
    #[arg(long, default_value_t = 8)]
    restarts: usize,
}

#[derive(Args)]
struct BootstrapArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Fit to resample from; fitted from the data when absent.
    #[arg(long)]
    fit: Option<PathBuf>,
    #[arg(long, default_value_t = 40, value_parser = clap::value_parser!(u64).range(2..))]
    replicates: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    /// Confidence level of the reported intervals.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
}

#[derive(Args)]
struct MultidoseArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// AUC for one dose, mg·h/L; taken from --fit when given.
    #[arg(long, value_parser = decimal)]
    auc: Option<String>,
    #[arg(long, value_parser = decimal)]
    dose_mg_kg: String,
    #[arg(long, value_parser = decimal)]
    interval_h: String,
    #[arg(long)]
    count: u32,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Comma-separated times in hours.
    #[arg(long, value_delimiter = ',', value_parser = decimal, required = true)]
    times: Vec<String>,
}

#[derive(Args)]
struct SelftestArgs {}

/// Failure that maps to exit code 1.
struct Failure(Error);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(e)
    }
}

type Outcome = Result<(), Failure>;

fn usage(msg: impl std::fmt::Display) -> ! {
    Cli::command().error(ErrorKind::MissingRequiredArgument, msg).exit()
}

fn emit(doc: &impl Serialize) -> Outcome {
    let text = serde_json::to_string_pretty(doc).map_err(Error::from)?;
    println!("{text}");
    Ok(())
}

fn read_fit(path: &Path) -> Result<FitResult, Error> {
    fit_from_json(&std::fs::read_to_string(path)?)
}

fn parse_f64(s: &str, field: &str) -> Result<f64, Error> {
    s.parse::<f64>().map_err(|e| Error::Parse(format!("{field}: {e}")))
}

/// Parameters and, when the source has one, the AUC.
fn resolve_params(args: &ParamArgs) -> Result<(GpcParams, Option<f64>), Error> {
    if args.dog1 {
        return Ok((GpcParams::dog1(), None));
    }
    if let Some(path) = &args.fit {
        let fit = read_fit(path)?;
        return Ok((fit.params, Some(fit.auc)));
    }
    let (Some(a), Some(b), Some(alpha)) = (&args.a, &args.b, &args.alpha) else {
        usage("give --dog1, --fit FILE, or all of --a --b --alpha with --beta-h or --beta-s");
    };
    let p = match (&args.beta_h, &args.beta_s) {
        (Some(h), None) => GpcParams::parse(a, b, alpha, h)?,
        (None, Some(s)) => GpcParams::parse_beta_seconds(a, b, alpha, s)?,
        _ => usage("give exactly one of --beta-h and --beta-s"),
    };
    Ok((p, None))
}

fn point_document(r: &EvalResult, ctx: &PrecisionContext) -> Value {
    let d = &r.diagnostics;
    json!({
        "value": r.value.to_decimal_string(ctx.target_digits as usize),
        "branch": d.branch.as_str(),
        "terms_summed": d.terms_summed,
        "max_term_log10": d.max_term_log10,
        "working_precision": d.working_precision,
        "wall_time_s": d.wall_time,
    })
}

/// Time since the dose. The library maps every t ≤ β to 0, but a negative
/// time on the command line is an input mistake.
fn parse_time(text: &str, ctx: &PrecisionContext) -> Result<MpReal, Error> {
    let t = MpReal::parse(text, ctx.working_digits + 20)?;
    if t.as_float().is_sign_negative() && !t.is_zero() {
        return Err(Error::Domain(format!("time must be non-negative, got {text}")));
    }
    Ok(t)
}

fn point(args: &PointArgs, q: Quantity, ctx: &PrecisionContext) -> Outcome {
    let (p, _) = resolve_params(&args.params)?;
    let t = parse_time(&args.t, ctx)?;
    let r = gpc_quantity(&p, &t, q, ctx)?;
    emit(&point_document(&r, ctx))
}

fn load_data(args: &DataArgs) -> Result<gpc_core::pk::ConcSeries, Error> {
    let dose = parse_f64(&args.dose_mg_kg, "dose_mg_kg")?;
    let file = std::fs::File::open(&args.data)?;
    let id = args.data.file_stem().and_then(|s| s.to_str()).unwrap_or("data");
    read_conc_csv(file, id, dose)
}

fn fit_config(seed: u64, restarts: usize, digits: u32) -> FitConfig {
    FitConfig {
        seed,
        restarts,
        digits,
        ..FitConfig::default()
    }
}

fn fit(args: &FitArgs, ctx: &PrecisionContext) -> Outcome {
    let started = Instant::now();
    let data = load_data(&args.data)?;
    let cfg = fit_config(args.seed, args.restarts, ctx.target_digits);
    cfg.validate()?;
    let f = fit_nelder_mead(&data, &cfg)?;
    if !f.converged {
        log::warn!("fit stopped at the iteration cap without converging");
    }
    // the emitted document must load back with `--fit`
    let mut doc: Value = serde_json::from_str(&fit_to_json(&f)?).map_err(Error::from)?;
    doc["wall_time_s"] = json!(started.elapsed().as_secs_f64());
    emit(&doc)
}

#[derive(Serialize)]
struct ColumnSummary {
    mean: f64,
    /// Bias-corrected SD, c_n·s.
    sd: f64,
    /// Absent when the mean is too close to zero.
    cv: Option<f64>,
    ci_student_n: [f64; 2],
    /// Absent when there are too few replicates for the tail quantiles.
    ci_weibull_quantile: Option<[f64; 2]>,
}

fn summarize(x: &[f64], level: f64) -> Result<ColumnSummary, Error> {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0);
    let sd = c_n(x.len()) * var.sqrt();
    let cv = cv_sd_corrected(x).ok().map(|(cv, _)| cv);
    let s = ci_student_n(x, level)?;
    let w = ci_weibull_quantile(x, level).ok().map(|w| [w.lower, w.upper]);
    Ok(ColumnSummary {
        mean,
        sd,
        cv,
        ci_student_n: [s.lower, s.upper],
        ci_weibull_quantile: w,
    })
}

fn bootstrap(args: &BootstrapArgs, ctx: &PrecisionContext) -> Outcome {
    let started = Instant::now();
    let data = load_data(&args.data)?;
    let cfg = fit_config(args.seed, args.restarts, ctx.target_digits);
    cfg.validate()?;
    let base = match &args.fit {
        Some(path) => read_fit(path)?,
        None => fit_nelder_mead(&data, &cfg)?,
    };
    let residuals = match residual_checks(&base, &data, ctx) {
        Ok(r) => {
            if !r.passed() {
                log::warn!("residual checks failed; bootstrap assumptions are doubtful");
            }
            serde_json::to_value(r).map_err(Error::from)?
        }
        Err(e) => {
            log::warn!("residual checks skipped: {e}");
            Value::Null
        }
    };
    let run = bootstrap_run(&base, &data, args.replicates as usize, &cfg, args.seed)?;
    if run.replicates.len() < 2 {
        return Err(Error::Fit(format!("only {} replicates converged", run.replicates.len())).into());
    }
    let mut summary = serde_json::Map::new();
    type Column = fn(&gpc_core::resample::ReplicateRow) -> f64;
    let columns: [(&str, Column); 7] = [
        ("a", |r| r.a),
        ("b", |r| r.b),
        ("alpha", |r| r.alpha),
        ("beta_h", |r| r.beta_h),
        ("auc", |r| r.auc),
        ("cl_ml_min_kg", |r| r.clearance),
        ("rrms", |r| r.rrms),
    ];
    for (name, f) in columns {
        let s = summarize(&run.column(f), args.level)?;
        summary.insert(name.into(), serde_json::to_value(s).map_err(Error::from)?);
    }
    emit(&json!({
        "fit": FitDocument::from(&base),
        "residual_checks": residuals,
        "n": run.n,
        "seed": run.seed,
        "failures": run.failures,
        "level": args.level,
        "summary": summary,
        "mean_wall_time_s": run.mean_wall_time_s(),
        "replicates": run.replicates,
        "wall_time_s": started.elapsed().as_secs_f64(),
    }))
}

fn multidose(args: &MultidoseArgs, ctx: &PrecisionContext) -> Outcome {
    let started = Instant::now();
    let (params, fit_auc) = resolve_params(&args.params)?;
    let auc = match (&args.auc, fit_auc) {
        (Some(s), _) => parse_f64(s, "auc")?,
        (None, Some(v)) => v,
        (None, None) => usage("--auc is required unless --fit is given"),
    };
    let dose = parse_f64(&args.dose_mg_kg, "dose_mg_kg")?;
    let regimen = DoseRegimen::new(dose, parse_f64(&args.interval_h, "interval_h")?, args.count)?;
    let fit = FitResult {
        params,
        auc,
        clearance: gpc_core::pk::clearance(dose, auc)?,
        rrms: f64::NAN,
        r_squared: f64::NAN,
        iterations: 0,
        converged: true,
        dose_mg_kg: dose,
    };
    let s = interval_summary(&fit, &regimen, ctx)?;
    emit(&json!({
        "regimen": regimen,
        "auc": auc,
        "intervals": s.intervals,
        "doses_eliminated": s.doses_eliminated,
        "wall_time_s": started.elapsed().as_secs_f64(),
    }))
}

fn bench(args: &BenchArgs, ctx: &PrecisionContext) -> Outcome {
    let (p, _) = resolve_params(&args.params)?;
    let mut out = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Failure(Error::from(e));
    out.write_record(["t_h", "algorithm", "terms", "max_term_log10", "precision_digits", "runtime_s"])
        .map_err(io)?;
    for text in &args.times {
        let t = parse_time(text, ctx)?;
        for (name, run) in [
            ("short_t", gpc_short as fn(&GpcParams, &MpReal, &PrecisionContext) -> _),
            ("long_t", gpc_long),
        ] {
            let started = Instant::now();
            let r = run(&p, &t, ctx)?;
            let d = &r.diagnostics;
            out.write_record([
                text.clone(),
                name.to_string(),
                d.terms_summed.to_string(),
                d.max_term_log10.to_string(),
                d.working_precision.to_string(),
                format!("{:e}", started.elapsed().as_secs_f64()),
            ])
            .map_err(io)?;
        }
    }
    let bytes = out.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    std::io::stdout().write_all(&bytes).map_err(Error::from)?;
    Ok(())
}

fn rel_diff(x: &MpReal, y: &MpReal) -> f64 {
    let (x, y) = (x.to_f64(), y.to_f64());
    if x == y {
        0.0
    } else {
        ((x - y) / y).abs()
    }
}

fn selftest(ctx: &PrecisionContext) -> Outcome {
    let started = Instant::now();
    let p = GpcParams::dog1();
    let mut checks = Vec::new();
    let mut record = |name: String, ok: bool, detail: String| {
        checks.push(json!({"name": name, "passed": ok, "detail": detail}));
        ok
    };
    let mut all = true;
    let tight = 10f64.powi(-(ctx.target_digits.min(15) as i32) + 1);
    for t in ["0.05", "1", "24"] {
        let t_mp = MpReal::parse(t, ctx.working_digits + 20)?;
        for q in [Quantity::Density, Quantity::Cdf, Quantity::SuperCdf, Quantity::Deriv] {
            let s = gpc_short_quantity(&p, &t_mp, q, ctx)?;
            let l = gpc_long_quantity(&p, &t_mp, q, ctx)?;
            let agree = s.value.as_float().clone() - l.value.as_float();
            let scale = l.value.as_float().clone().abs();
            let digits = if agree.is_zero() {
                f64::from(ctx.target_digits)
            } else {
                -(agree.abs() / scale).to_f64().log10()
            };
            let ok = digits >= f64::from(ctx.target_digits) - 5.0;
            all &= record(format!("short_vs_long_{q:?}_{t}h").to_lowercase(), ok, format!("{digits:.1} digits agree"));
        }
    }
    let t1 = MpReal::parse("1", ctx.working_digits + 20)?;
    let series = gpc_quantity(&p, &t1, Quantity::Density, ctx)?.value;
    let oracle = conv_oracle(&p, &t1, &PrecisionContext::new(ctx.target_digits.min(20)))?;
    let d = rel_diff(&series, &oracle);
    all &= record("density_vs_quadrature_1h".into(), d <= tight.max(1e-14), format!("relative difference {d:.2e}"));
    let big = MpReal::parse("1e6", ctx.working_digits + 20)?;
    let cdf = gpc_quantity(&p, &big, Quantity::Cdf, ctx)?.value.to_f64();
    all &= record("cdf_below_one_far_out".into(), cdf > 0.99 && cdf < 1.0, format!("F(1e6 h) = {cdf}"));
    emit(&json!({
        "passed": all,
        "checks": checks,
        "wall_time_s": started.elapsed().as_secs_f64(),
    }))?;
    if all {
        Ok(())
    } else {
        Err(Failure(Error::Precision("selftest failed".into())))
    }
}

fn run(cli: &Cli) -> Outcome {
    let ctx = PrecisionContext::new(cli.digits);
    ctx.validate()?;
    match &cli.command {
        Command::Eval(a) => point(a, Quantity::Density, &ctx),
        Command::Cdf(a) => point(a, Quantity::Cdf, &ctx),
        Command::Supercdf(a) => point(a, Quantity::SuperCdf, &ctx),
        Command::Deriv(a) => point(a, Quantity::Deriv, &ctx),
        Command::Fit(a) => fit(a, &ctx),
        Command::Bootstrap(a) => bootstrap(a, &ctx),
        Command::Multidose(a) => multidose(a, &ctx),
        Command::Bench(a) => bench(a, &ctx),
        Command::Selftest(_) => selftest(&ctx),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(e)) => {
            let doc = json!({"error": {"kind": e.kind(), "message": e.to_string()}});
            println!("{doc}");
            ExitCode::from(1)
        }
    }
}
