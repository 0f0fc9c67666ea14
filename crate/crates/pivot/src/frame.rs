//! Sampling frames read from CSV.
//!
//! The header must name a `unit` column and a `pi` column; every other
//! column is taken as a study variable. Rows keep their file order.

use std::io::Read;
use std::path::Path;

use pivot_core::analytics::StudyVariable;
use pivot_core::ProbabilityVector;

use crate::error::{CliError, Result};

#[derive(Debug, Clone)]
pub struct Frame {
    pub labels: Vec<String>,
    pub pi: ProbabilityVector,
    pub variables: Vec<(String, StudyVariable)>,
}

impl Frame {
    pub fn label(&self, unit: usize) -> &str {
        &self.labels[unit]
    }
}

pub fn read_frame(path: &Path) -> Result<Frame> {
    let file = std::fs::File::open(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    parse_frame(file)
}

fn parse_error(line: u64, message: impl Into<String>) -> CliError {
    CliError::Parse { line, message: message.into() }
}

pub fn parse_frame<R: Read>(reader: R) -> Result<Frame> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
    let headers = csv.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let unit_col = find("unit").ok_or_else(|| parse_error(1, "missing `unit` column"))?;
    let pi_col = find("pi").ok_or_else(|| parse_error(1, "missing `pi` column"))?;
    let variable_cols: Vec<usize> = (0..headers.len()).filter(|&c| c != unit_col && c != pi_col).collect();

    let mut labels = Vec::new();
    let mut pi = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); variable_cols.len()];
    for record in csv.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |c: usize| record.get(c).unwrap_or("");
        labels.push(field(unit_col).to_string());
        let value: f64 = field(pi_col)
            .parse()
            .map_err(|_| parse_error(line, format!("`pi` is not a number: {:?}", field(pi_col))))?;
        if !(value > 0.0 && value < 1.0) {
            return Err(parse_error(line, format!("`pi` must lie strictly between 0 and 1, got {value}")));
        }
        pi.push(value);
        for (slot, &c) in columns.iter_mut().zip(&variable_cols) {
            let v: f64 = field(c).parse().map_err(|_| {
                parse_error(line, format!("`{}` is not a number: {:?}", &headers[c], field(c)))
            })?;
            slot.push(v);
        }
    }
    if pi.is_empty() {
        return Err(parse_error(1, "frame has no units"));
    }
    let pi = ProbabilityVector::new(pi)?;
    let variables = variable_cols
        .iter()
        .zip(columns)
        .map(|(&c, values)| (headers[c].to_string(), StudyVariable::new(values)))
        .collect();
    Ok(Frame { labels, pi, variables })
}
