use std::path::PathBuf;

use pivot_core::Algorithm;

use crate::error::{CliError, Result};
use crate::format::OutputFormat;

/// Settings shared by the sampling and estimation commands.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub pi_file: PathBuf,
    pub replicates: u64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    pub verbosity: u8,
}

/// Resolves an algorithm tag; `rho` is required for `cmc` and refused otherwise.
pub fn parse_algorithm(tag: &str, rho: Option<f64>) -> Result<Algorithm> {
    let algorithm = match (tag, rho) {
        ("cmc", Some(rho)) => {
            if !(0.0..=1.0).contains(&rho) {
                return Err(CliError::Usage(format!("--rho must lie in [0, 1], got {rho}")));
            }
            Algorithm::CompromiseMarkov(rho)
        }
        ("cmc", None) => return Err(CliError::Usage("--rho is required with --algorithm cmc".into())),
        (_, Some(_)) => return Err(CliError::Usage("--rho only applies to --algorithm cmc".into())),
        ("ops", None) => Algorithm::Pivotal,
        ("dss", None) => Algorithm::DevilleSystematic,
        ("sys", None) => Algorithm::Systematic,
        ("srs", None) => Algorithm::SimpleRandom,
        ("rps", None) => Algorithm::RandomizedPivotal,
        (other, None) => {
            return Err(CliError::Usage(format!(
                "unknown algorithm `{other}`, expected one of ops, dss, sys, srs, cmc, rps"
            )))
        }
    };
    Ok(algorithm)
}

impl RunConfig {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        tag: &str,
        rho: Option<f64>,
        pi_file: PathBuf,
        replicates: u64,
        seed: u64,
        out: Option<PathBuf>,
        format: OutputFormat,
        verbosity: u8,
    ) -> Result<Self> {
        if replicates == 0 {
            return Err(CliError::Usage("--replicates must be at least 1".into()));
        }
        let algorithm = parse_algorithm(tag, rho)?;
        Ok(Self { algorithm, pi_file, replicates, seed, out, format, verbosity })
    }
}
