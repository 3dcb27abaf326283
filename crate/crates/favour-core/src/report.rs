//! Result export: the frozen learning-curve CSV and the JSON run manifest.
//!
//! The CSV columns and their order are frozen:
//! `method,size,mean_acc,std_acc,n,confidence`. Rows are sorted by method
//! (canonical order) and then size. Floats are written in shortest
//! round-trip form, so two runs with identical aggregates produce
//! byte-identical files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{CurvePoint, EvalConfig, EvalOutput, FailureRecord, KsCell, Method};

pub const CURVES_FILE: &str = "curves.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
const CSV_HEADER: &str = "method,size,mean_acc,std_acc,n,confidence";

/// Reproducibility record written next to the curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub seed: u64,
    pub methods: Vec<Method>,
    pub config: EvalConfig,
    pub dataset_spec_hash: String,
    pub n_users: usize,
    pub version: String,
    pub failures: Vec<FailureRecord>,
    pub ks_mpp_vs_flat: Vec<KsCell>,
    pub corrected_alpha: Option<f64>,
}

impl RunManifest {
    pub fn new(
        output: &EvalOutput,
        config: &EvalConfig,
        methods: &[Method],
        dataset_spec_hash: String,
        n_users: usize,
    ) -> Self {
        RunManifest {
            seed: config.cv.seed,
            methods: methods.to_vec(),
            config: config.clone(),
            dataset_spec_hash,
            n_users,
            version: env!("CARGO_PKG_VERSION").to_string(),
            failures: output.failures.clone(),
            ks_mpp_vs_flat: output.ks_mpp_vs_flat.clone(),
            corrected_alpha: output.corrected_alpha,
        }
    }
}

/// Renders the learning curves in the frozen CSV layout.
pub fn curves_to_csv(curves: &[CurvePoint]) -> String {
    let mut sorted: Vec<&CurvePoint> = curves.iter().collect();
    sorted.sort_by_key(|p| {
        (
            Method::ALL.iter().position(|&m| m == p.method).unwrap_or(usize::MAX),
            p.size,
        )
    });
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for point in sorted {
        let confidence = point
            .confidence
            .map(|c| c.to_string())
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            point.method, point.size, point.mean_accuracy, point.std_accuracy, point.n_sessions,
            confidence
        ));
    }
    out
}

/// Parses a curves CSV back into rows (used by the round-trip checks and
/// downstream tooling).
pub fn parse_curves_csv(content: &str) -> Result<Vec<CurvePoint>> {
    let mut lines = content.lines();
    match lines.next() {
        Some(header) if header == CSV_HEADER => {}
        other => {
            return Err(Error::Results(format!(
                "unexpected header: {:?}",
                other.unwrap_or_default()
            )))
        }
    }
    let mut rows = Vec::new();
    for (index, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::Results(format!(
                "row {index}: expected 6 fields, got {}",
                fields.len()
            )));
        }
        let parse_f64 = |s: &str, what: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::Results(format!("row {index}: bad {what} '{s}'")))
        };
        rows.push(CurvePoint {
            method: fields[0].parse()?,
            size: fields[1]
                .parse()
                .map_err(|_| Error::Results(format!("row {index}: bad size '{}'", fields[1])))?,
            mean_accuracy: parse_f64(fields[2], "mean_acc")?,
            std_accuracy: parse_f64(fields[3], "std_acc")?,
            n_sessions: fields[4]
                .parse()
                .map_err(|_| Error::Results(format!("row {index}: bad n '{}'", fields[4])))?,
            confidence: if fields[5].is_empty() {
                None
            } else {
                Some(parse_f64(fields[5], "confidence")?)
            },
        });
    }
    Ok(rows)
}

/// Writes `curves.csv` and `manifest.json` into `dir`, creating it if
/// needed.
pub fn export_results(dir: &Path, output: &EvalOutput, manifest: &RunManifest) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let curves_path = dir.join(CURVES_FILE);
    fs::write(&curves_path, curves_to_csv(&output.curves))
        .map_err(|e| Error::io(&curves_path, e))?;
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest_json = serde_json::to_string_pretty(manifest)
        .map_err(|e| Error::json(&manifest_path, e))?;
    fs::write(&manifest_path, manifest_json).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(())
}
