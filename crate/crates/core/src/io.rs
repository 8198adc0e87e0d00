//! CSV sample input and the JSON form of a fit result.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gpc::GpcParams;
use crate::pk::{ConcSeries, FitResult, Sample};

pub const CSV_HEADER: [&str; 2] = ["time_h", "conc_mg_per_L"];

/// Significant digits written for each parameter.
pub const PARAM_JSON_DIGITS: usize = 80;

/// Reads `time_h,conc_mg_per_L` rows.
pub fn read_conc_csv<R: Read>(reader: R, subject_id: &str, dose_mg_kg: f64) -> Result<ConcSeries> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.len() != 2 || header.get(0) != Some(CSV_HEADER[0]) || header.get(1) != Some(CSV_HEADER[1]) {
        return Err(Error::Parse(format!(
            "expected header {}, got {:?}",
            CSV_HEADER.join(","),
            header.iter().collect::<Vec<_>>()
        )));
    }
    let mut samples = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != 2 {
            return Err(Error::Parse(format!("row {}: expected 2 fields", i + 1)));
        }
        let num = |k: usize| -> Result<f64> {
            rec[k]
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("row {}, {}: {e}", i + 1, CSV_HEADER[k])))
        };
        samples.push(Sample {
            time_h: num(0)?,
            conc_mg_per_l: num(1)?,
        });
    }
    ConcSeries::new(samples, subject_id, dose_mg_kg)
}

pub fn parse_conc_csv(text: &str, subject_id: &str, dose_mg_kg: f64) -> Result<ConcSeries> {
    read_conc_csv(text.as_bytes(), subject_id, dose_mg_kg)
}

pub fn write_conc_csv(data: &ConcSeries) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for s in data.samples() {
        w.write_record([format!("{:e}", s.time_h), format!("{:e}", s.conc_mg_per_l)])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Fit result with every number as a decimal string.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitDocument {
    pub a: String,
    pub b: String,
    pub alpha: String,
    pub beta_h: String,
    pub auc: String,
    pub cl_ml_min_kg: String,
    pub rrms: String,
    pub r2: String,
    pub dose_mg_kg: String,
    pub iterations: u64,
    pub converged: bool,
}

fn num(s: &str, field: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("{field}: {e}")))
}

impl From<&FitResult> for FitDocument {
    fn from(f: &FitResult) -> Self {
        let [a, b, alpha, beta_h] = f.params.to_decimal_strings(PARAM_JSON_DIGITS);
        // shortest round-trip forms for the doubles
        FitDocument {
            a,
            b,
            alpha,
            beta_h,
            auc: format!("{:e}", f.auc),
            cl_ml_min_kg: format!("{:e}", f.clearance),
            rrms: format!("{:e}", f.rrms),
            r2: format!("{:e}", f.r_squared),
            dose_mg_kg: format!("{:e}", f.dose_mg_kg),
            iterations: f.iterations,
            converged: f.converged,
        }
    }
}

impl TryFrom<&FitDocument> for FitResult {
    type Error = Error;
    fn try_from(d: &FitDocument) -> Result<Self> {
        let auc = num(&d.auc, "auc")?;
        if !(auc > 0.0 && auc.is_finite()) {
            return Err(Error::Parse("auc must be positive".into()));
        }
        let dose = num(&d.dose_mg_kg, "dose_mg_kg")?;
        if !(dose >= 0.0 && dose.is_finite()) {
            return Err(Error::Parse("dose_mg_kg must be non-negative".into()));
        }
        Ok(FitResult {
            params: GpcParams::parse(&d.a, &d.b, &d.alpha, &d.beta_h)?,
            auc,
            clearance: num(&d.cl_ml_min_kg, "cl_ml_min_kg")?,
            rrms: num(&d.rrms, "rrms")?,
            r_squared: num(&d.r2, "r2")?,
            iterations: d.iterations,
            converged: d.converged,
            dose_mg_kg: dose,
        })
    }
}

pub fn fit_to_json(fit: &FitResult) -> Result<String> {
    Ok(serde_json::to_string_pretty(&FitDocument::from(fit))?)
}

pub fn fit_from_json(text: &str) -> Result<FitResult> {
    let doc: FitDocument = serde_json::from_str(text)?;
    FitResult::try_from(&doc)
}
