//! Run reports and their serializations.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::circuit::{Engine, HypothesisClass, Rule};
use crate::circuit::InputDomain;
use crate::error::{Error, Result};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationSection {
    pub label: HypothesisClass,
    pub justification: Rule,
    pub recommended_engine: Engine,
    /// Every rule that holds, in evaluation order.
    pub matched: Vec<Rule>,
    pub engine_used: Engine,
    pub depth_total: usize,
    pub depth_budget: usize,
    pub t_count: usize,
    pub t_budget: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurrogateSection {
    pub kind: String,
    pub basis: String,
    pub term_count: usize,
    pub feature_dim: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bond_dims: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Risks {
    /// Convex minimum over the surrogate's features, evaluated on the samples.
    pub convex: Option<f64>,
    /// As reported by the parameter optimizer.
    pub restricted: f64,
    /// Risk at the optimizer's parameters, recomputed point by point on the oracle.
    pub oracle: f64,
    /// Risk of the label generator, when the task was synthetic.
    pub teacher: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// Largest `|surrogate − oracle|` over the training inputs.
    pub surrogate_vs_oracle: Option<f64>,
    /// Largest `|risk − doubled-state energy|` at the optimizer's parameters.
    pub reduction: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub surrogate: f64,
    pub reduction: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { surrogate: 1e-9, reduction: 1e-10 }
    }
}

/// Artifact file names, relative to the run directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifacts {
    pub circuit: String,
    pub dataset: String,
    pub restricted: String,
    pub teacher: Option<String>,
    pub surrogate: Option<String>,
    pub solution: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub name: String,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub input_domain: InputDomain,
    pub n_qubits: usize,
    pub n_samples: usize,
    pub classification: ClassificationSection,
    pub surrogate: Option<SurrogateSection>,
    pub risks: Risks,
    pub residuals: Residuals,
    pub tolerances: Tolerances,
    pub within_tolerance: bool,
    pub artifacts: Artifacts,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    /// Wall-clock milliseconds per stage; excluded from the fingerprint.
    pub timings_ms: BTreeMap<String, f64>,
}

impl RunReport {
    /// SHA-256 of the report with timings removed.
    pub fn fingerprint(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        if let Some(m) = v.as_object_mut() {
            m.remove("timings_ms");
        }
        Ok(hex::encode(Sha256::digest(serde_json::to_vec(&v)?)))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<RunReport> {
        let r: RunReport = serde_json::from_str(s)?;
        if r.schema_version != REPORT_SCHEMA_VERSION {
            return Err(Error::Parse(format!("report schema {} is not {REPORT_SCHEMA_VERSION}", r.schema_version)));
        }
        Ok(r)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    Json,
    CsvSummary,
    Markdown,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<ReportFormat> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv-summary" | "csv" => Ok(ReportFormat::CsvSummary),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(Error::Config(format!("unknown report format {other:?}"))),
        }
    }
}

/// Columns of the csv and markdown summaries.
pub const SUMMARY_COLUMNS: [&str; 13] = [
    "name",
    "class",
    "rule",
    "engine",
    "surrogate",
    "terms",
    "convex_risk",
    "restricted_risk",
    "oracle_risk",
    "surrogate_residual",
    "reduction_residual",
    "within_tolerance",
    "config_hash",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6e}")).unwrap_or_default()
}

fn summary_row(r: &RunReport) -> Vec<String> {
    let c = &r.classification;
    vec![
        r.name.clone(),
        format!("{:?}", c.label),
        format!("{:?}", c.justification),
        serde_json::to_value(c.engine_used).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
        r.surrogate.as_ref().map(|s| s.kind.clone()).unwrap_or_default(),
        r.surrogate.as_ref().map(|s| s.term_count.to_string()).unwrap_or_default(),
        opt(r.risks.convex),
        format!("{:.6e}", r.risks.restricted),
        format!("{:.6e}", r.risks.oracle),
        opt(r.residuals.surrogate_vs_oracle),
        opt(r.residuals.reduction),
        r.within_tolerance.to_string(),
        r.config_hash.chars().take(12).collect(),
    ]
}

/// Renders reports; `Json` accepts exactly one report.
pub fn render(reports: &[RunReport], format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => match reports {
            [r] => r.to_json(),
            _ => Err(Error::Validation(format!("json format takes one report, got {}", reports.len()))),
        },
        ReportFormat::CsvSummary => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(SUMMARY_COLUMNS).map_err(|e| Error::Parse(e.to_string()))?;
            for r in reports {
                w.write_record(summary_row(r)).map_err(|e| Error::Parse(e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
        }
        ReportFormat::Markdown => {
            let mut s = String::new();
            let _ = writeln!(s, "| {} |", SUMMARY_COLUMNS.join(" | "));
            let _ = writeln!(s, "|{}", "---|".repeat(SUMMARY_COLUMNS.len()));
            for r in reports {
                let _ = writeln!(s, "| {} |", summary_row(r).join(" | "));
            }
            Ok(s)
        }
    }
}

pub fn emit_report(reports: &[RunReport], format: ReportFormat, path: &Path) -> Result<()> {
    crate::io::atomic_write(path, render(reports, format)?.as_bytes())
}
