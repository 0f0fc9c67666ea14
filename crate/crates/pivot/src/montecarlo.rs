//! Monte Carlo estimation fanned out over threads.
//!
//! Replicate `r` always draws from stream `r` of the seed, and tallies are
//! merged by addition, so results do not depend on the thread count.

use pivot_core::inclusion::{tally_replicates, JointCounts, MonteCarloPikl};
use pivot_core::{Algorithm, ProbabilityVector};
use rayon::prelude::*;

use crate::error::{CliError, Result};

/// Replicates handled by one task.
const CHUNK: u64 = 20_000;

pub fn parallel_counts(algorithm: Algorithm, pv: &ProbabilityVector, replicates: u64, seed: u64) -> Result<JointCounts> {
    if replicates == 0 {
        return Err(CliError::Usage("--replicates must be at least 1".into()));
    }
    let chunks: Vec<(u64, u64)> = (0..replicates.div_ceil(CHUNK))
        .map(|c| (c * CHUNK, ((c + 1) * CHUNK).min(replicates)))
        .collect();
    let tallies = chunks
        .into_par_iter()
        .map(|(lo, hi)| tally_replicates(algorithm, pv, seed, lo..hi))
        .collect::<Result<Vec<_>, _>>()?;
    let mut total = JointCounts::new(pv.population_size());
    for t in &tallies {
        total.merge(t);
    }
    Ok(total)
}

pub fn parallel_pikl(algorithm: Algorithm, pv: &ProbabilityVector, replicates: u64, seed: u64) -> Result<MonteCarloPikl> {
    Ok(parallel_counts(algorithm, pv, replicates, seed)?.estimate())
}

#[cfg(test)]
mod tests {
    use super::*;
    use pivot_core::inclusion::monte_carlo_pikl;
    use pivot_core::strata::cumulate;

    #[test]
    fn matches_the_sequential_tally() {
        let pv = cumulate(&[0.2, 0.5, 0.3, 0.4, 0.9, 0.8, 0.5, 0.4]).unwrap();
        let par = parallel_pikl(Algorithm::Pivotal, &pv, 45_000, 3).unwrap();
        let seq = monte_carlo_pikl(Algorithm::Pivotal, &pv, 45_000, 3).unwrap();
        assert_eq!(par, seq);
    }
}
