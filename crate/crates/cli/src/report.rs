//! JSON run reports and CSV tables. Field names are part of the output contract.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use mcv_core::sim::ScenarioResult;
use mcv_core::TestResult;
use serde::Serialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, Serialize)]
pub struct Inputs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub variants: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub targets: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contrasts: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layout: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(rename = "B", skip_serializing_if = "Option::is_none")]
    pub resamples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_draws: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DataSummary {
    pub columns: Vec<String>,
    pub groups: Vec<String>,
    pub sizes: Vec<usize>,
    pub n: usize,
    pub d: usize,
}

/// One group × variant row of the estimate table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateRow {
    pub group: String,
    pub variant: String,
    pub n: usize,
    pub c: f64,
    pub b: f64,
    pub var_c: f64,
    pub var_b: f64,
    pub c_lower: f64,
    pub c_upper: f64,
    pub b_lower: f64,
    pub b_upper: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContrastReport {
    pub labels: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
}

/// One row of the contrast table; columns are fixed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContrastRow {
    pub comparison: String,
    pub variant: String,
    pub target: String,
    pub method: String,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MctReport {
    pub target: String,
    pub method: String,
    pub alpha: f64,
    pub critical_value: f64,
    pub global_p: f64,
    pub statistics: Vec<f64>,
    pub correlation: Vec<Vec<f64>>,
    pub resamples_used: usize,
    pub resamples_degenerate: usize,
    pub seed: Option<u64>,
    pub table: Vec<ContrastRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub inputs: Inputs,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<DataSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contrasts: Option<ContrastReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub estimates: Vec<EstimateRow>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub tests: Vec<TestResult>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub mct: Vec<MctReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub simulations: Vec<ScenarioResult>,
    pub seeds: Vec<u64>,
}

impl RunReport {
    pub fn new(command: &'static str, inputs: Inputs) -> Self {
        Self {
            tool: "mcv",
            version: env!("CARGO_PKG_VERSION"),
            command,
            inputs,
            data: None,
            contrasts: None,
            estimates: Vec::new(),
            tests: Vec::new(),
            mct: Vec::new(),
            simulations: Vec::new(),
            seeds: Vec::new(),
        }
    }
}

/// Opens `path` for writing, or stdout when `None`.
pub fn sink(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            Box::new(BufWriter::new(File::create(p).map_err(|source| CliError::Io { path: p.to_path_buf(), source })?))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn io_err(path: Option<&Path>) -> impl Fn(io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.map_or_else(|| "<stdout>".into(), Path::to_path_buf), source }
}

pub fn write_json<S: Serialize>(value: &S, path: Option<&Path>) -> CliResult<()> {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w).and_then(|_| w.flush()).map_err(io_err(path))
}

pub fn write_csv<S: Serialize>(rows: &[S], path: Option<&Path>) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(sink(path)?);
    for r in rows {
        w.serialize(r).map_err(|e| CliError::input(format!("writing CSV: {e}")))?;
    }
    w.flush().map_err(io_err(path))
}
