//! Design-effect table for a generated population of twelve units.

use pivot_core::analytics::{markov_deff, StudyVariable};
use serde::Serialize;

use crate::error::Result;

pub const Y1: [f64; 12] = [10.0, 10.0, 10.0, 15.0, 45.0, 45.0, 50.0, 50.0, 60.0, 60.0, 60.0, 65.0];
pub const Y2: [f64; 12] = [15.0, 45.0, 10.0, 60.0, 60.0, 50.0, 45.0, 65.0, 10.0, 50.0, 10.0, 60.0];
pub const Y3: [f64; 12] = [10.0, 45.0, 60.0, 15.0, 50.0, 65.0, 10.0, 50.0, 60.0, 10.0, 45.0, 60.0];

/// Strategies as `(name, rho)`: `rho = 0` is ordered systematic sampling
/// and `rho = 1` ordered pivotal sampling.
pub const STRATEGIES: [(&str, f64); 5] =
    [("SYS", 0.0), ("CMC25", 0.25), ("CMC50", 0.5), ("CMC75", 0.75), ("OPS", 1.0)];

pub const SAMPLE_SIZES: [usize; 2] = [2, 4];

/// Reference values to two decimals, rows as in [`STRATEGIES`], columns `y1, y2, y3` at
/// `n = 2` then at `n = 4`.
pub const REFERENCE: [[f64; 6]; 5] = [
    [0.50, 1.39, 2.18, 0.27, 0.36, 5.44],
    [0.46, 1.31, 1.91, 0.24, 0.61, 3.94],
    [0.43, 1.24, 1.64, 0.21, 0.76, 2.81],
    [0.39, 1.17, 1.37, 0.19, 0.85, 1.97],
    [0.35, 1.10, 1.10, 0.17, 0.95, 1.36],
];

pub fn variables() -> [StudyVariable; 3] {
    [Y1, Y2, Y3].map(|y| StudyVariable::new(y.to_vec()))
}

/// Rounds half away from zero to two decimals.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeffRow {
    pub strategy: String,
    pub rho: f64,
    /// `y1, y2, y3` at `n = 2`, then at `n = 4`.
    pub values: [f64; 6],
}

pub fn deff_table() -> Result<Vec<DeffRow>> {
    let ys = variables();
    let mut rows = Vec::with_capacity(STRATEGIES.len());
    for (name, rho) in STRATEGIES {
        let mut values = [0.0; 6];
        for (block, &n) in SAMPLE_SIZES.iter().enumerate() {
            for (j, y) in ys.iter().enumerate() {
                values[3 * block + j] = markov_deff(y, n, rho)?;
            }
        }
        rows.push(DeffRow { strategy: name.to_string(), rho, values });
    }
    Ok(rows)
}

pub fn render(rows: &[DeffRow]) -> String {
    let mut out = String::new();
    out.push_str("         n=2                n=4\n");
    out.push_str("         y1    y2    y3     y1    y2    y3\n");
    for row in rows {
        let cells: Vec<String> = row.values.iter().map(|&v| format!("{:.2}", round2(v))).collect();
        out.push_str(&format!(
            "{:<8} {}  {}\n",
            row.strategy,
            cells[..3].join("  "),
            cells[3..].join("  ")
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_goes_away_from_zero() {
        assert_eq!(round2(0.125), 0.13);
        assert_eq!(round2(-0.125), -0.13);
        assert_eq!(round2(1.3139), 1.31);
    }

    #[test]
    fn pivotal_row() {
        let rows = deff_table().unwrap();
        let ops = rows.iter().find(|r| r.strategy == "OPS").unwrap();
        let rounded: Vec<f64> = ops.values.iter().map(|&v| round2(v)).collect();
        assert_eq!(rounded, REFERENCE[4]);
    }
}
