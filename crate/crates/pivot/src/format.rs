//! Text formats for designs, matrices and metric reports.
//!
//! Designs are written one sample per line as `members;probability`, with
//! members as space-separated unit labels. Matrices are dense rows of
//! comma-separated decimals carrying 17 significant digits, enough to
//! round-trip every `f64`.

use std::io::Write;
use std::str::FromStr;

use pivot_core::linalg::SymMatrix;
use pivot_core::SamplingDesign;
use serde::Serialize;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(CliError::Usage(format!("unknown format `{other}`, expected csv or json"))),
        }
    }
}

/// Seventeen significant digits in scientific notation.
pub fn exact_decimal(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_design<W: Write + ?Sized>(out: &mut W, design: &SamplingDesign, labels: &[String]) -> Result<()> {
    for (sample, q) in design.support() {
        let members: Vec<&str> = sample.units().iter().map(|&k| labels[k].as_str()).collect();
        writeln!(out, "{};{}", members.join(" "), exact_decimal(*q))?;
    }
    Ok(())
}

/// Parses the output of [`write_design`] back into `(members, probability)` pairs.
pub fn parse_design_lines(text: &str) -> Result<Vec<(Vec<String>, f64)>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (members, p) = line
            .split_once(';')
            .ok_or_else(|| CliError::Parse { line: i as u64 + 1, message: "missing `;`".into() })?;
        let p: f64 = p.trim().parse().map_err(|_| CliError::Parse {
            line: i as u64 + 1,
            message: format!("bad probability {p:?}"),
        })?;
        rows.push((members.split_whitespace().map(str::to_string).collect(), p));
    }
    Ok(rows)
}

pub fn write_matrix<W: Write + ?Sized>(out: &mut W, matrix: &SymMatrix) -> Result<()> {
    for i in 0..matrix.dim() {
        let row: Vec<String> = matrix.row(i).iter().map(|&x| exact_decimal(x)).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn write_matrix_json<W: Write + ?Sized>(out: &mut W, matrix: &SymMatrix) -> Result<()> {
    let rows: Vec<&[f64]> = (0..matrix.dim()).map(|i| matrix.row(i)).collect();
    serde_json::to_writer(&mut *out, &rows)?;
    writeln!(out)?;
    Ok(())
}

/// One row of a metric report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRow {
    pub metric: String,
    pub design: String,
    pub n: usize,
    pub value: f64,
}

impl MetricRow {
    pub fn new(metric: impl Into<String>, design: impl Into<String>, n: usize, value: f64) -> Self {
        Self { metric: metric.into(), design: design.into(), n, value }
    }
}

pub fn write_metrics<W: Write + ?Sized>(out: &mut W, rows: &[MetricRow], format: OutputFormat) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(&mut *out);
            for row in rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, rows)?;
            writeln!(out)?;
        }
    }
    Ok(())
}
