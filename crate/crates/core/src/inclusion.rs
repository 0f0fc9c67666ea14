//! Joint inclusion probabilities of the ordered pivotal design.
//!
//! [`pikl_theorem`] evaluates the closed form for a pair of units from the
//! strata geometry alone. [`design_pikl`] reads the same quantities off an
//! enumerated design and [`monte_carlo_pikl`] estimates them by simulation;
//! the three routes are kept separate so each can check the others.

use alloc::vec;
use alloc::vec::Vec;

use crate::design::SamplingDesign;
use crate::linalg::SymMatrix;
use crate::math::{sqrt, KahanSum};
use crate::samplers::{Algorithm, Sample};
use crate::strata::{ProbabilityVector, StrataDecomposition, UnitRole};
use crate::{Error, RandomSource, Result};

/// Symmetric matrix with `pi_k` on the diagonal and `pi_kl` elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct PiklMatrix(SymMatrix);

impl PiklMatrix {
    pub fn from_matrix(matrix: SymMatrix) -> Self {
        PiklMatrix(matrix)
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.0.get(k, l)
    }

    pub fn first_order(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.0.get(k, k)).collect()
    }

    /// Largest `|sum_{l != k} pi_kl - (n - 1) pi_k|` over all units.
    pub fn row_sum_residual(&self, sample_size: usize) -> f64 {
        (0..self.dim())
            .map(|k| {
                let mut acc = KahanSum::default();
                for l in 0..self.dim() {
                    if l != k {
                        acc.add(self.get(k, l));
                    }
                }
                (acc.value() - (sample_size as f64 - 1.0) * self.get(k, k)).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &PiklMatrix) -> f64 {
        self.0.max_abs_diff(&other.0)
    }
}

/// `pi_kl` for two distinct units of the ordered pivotal design.
///
/// Crossings with zero exit mass count as interior units of the stratum
/// they close, so every division below is by a positive exit mass.
pub fn pikl_theorem(dec: &StrataDecomposition, pv: &ProbabilityVector, k: usize, l: usize) -> Result<f64> {
    if k == l {
        return Err(Error::SameUnit(k));
    }
    let (k, l) = if k < l { (k, l) } else { (l, k) };
    let (pk, pl) = (pv.pi()[k], pv.pi()[l]);
    let exit = |m: usize, unit: usize| -> Result<f64> {
        let b = dec.exit()[m];
        if b > 0.0 {
            Ok(b)
        } else {
            Err(Error::DivisionByZeroGuard { unit })
        }
    };
    let value = match (dec.role(k), dec.role(l)) {
        (UnitRole::Interior { stratum: i }, UnitRole::Interior { stratum: j }) => {
            if i == j {
                0.0
            } else {
                pk * pl * (1.0 - dec.chain_product(i, j))
            }
        }
        // crossing first, then an interior unit of the same or a later stratum
        (UnitRole::CrossBorder { crossing: m }, UnitRole::Interior { stratum: j }) => {
            let b = exit(m, k)?;
            let c = dec.chain_product(m + 1, j);
            pk * pl * (1.0 - b * (1.0 - pk) / (pk * (1.0 - b)) * c)
        }
        // interior unit first, then a crossing closing its stratum or a later one
        (UnitRole::Interior { stratum: i }, UnitRole::CrossBorder { crossing: m }) => {
            let b = exit(m, l)?;
            let c = dec.chain_product(i, m + 1);
            pk * pl * (1.0 - (1.0 - pl) * (1.0 - b) / (pl * b) * c)
        }
        (UnitRole::CrossBorder { crossing: m }, UnitRole::CrossBorder { crossing: m2 }) => {
            let b1 = exit(m, k)?;
            let b2 = exit(m2, l)?;
            let c = dec.chain_product(m + 1, m2 + 1);
            let ratio = b1 * (1.0 - b2) * (1.0 - pk) * (1.0 - pl) / (pk * pl * b2 * (1.0 - b1));
            pk * pl * (1.0 - ratio * c)
        }
    };
    Ok(value)
}

pub fn pikl_matrix(dec: &StrataDecomposition, pv: &ProbabilityVector) -> Result<PiklMatrix> {
    let size = pv.population_size();
    let mut m = SymMatrix::zeros(size);
    for k in 0..size {
        m.set_sym(k, k, pv.pi()[k]);
        for l in k + 1..size {
            m.set_sym(k, l, pikl_theorem(dec, pv, k, l)?);
        }
    }
    Ok(PiklMatrix(m))
}

/// First- and second-order inclusion probabilities read off a design.
pub fn design_pikl(design: &SamplingDesign) -> PiklMatrix {
    let size = design.population_size();
    let mut acc = vec![KahanSum::default(); size * size];
    for (s, p) in design.support() {
        let units = s.units();
        for (a, &k) in units.iter().enumerate() {
            for &l in &units[a..] {
                acc[k * size + l].add(*p);
            }
        }
    }
    let mut m = SymMatrix::zeros(size);
    for k in 0..size {
        for l in k..size {
            m.set_sym(k, l, acc[k * size + l].value());
        }
    }
    PiklMatrix(m)
}

/// Clusters `Y_{i+1}` can take after `Y_i = state`, in cluster indexing
/// (cluster `2s` is the interior of stratum `s`, `2s + 1` is crossing `s`).
///
/// `step` is the zero-based index `i` of the stratum holding `Y_i`; the
/// feasible states are the crossing that opens it, its interior and the
/// crossing that closes it.
pub fn transition_probabilities(
    dec: &StrataDecomposition,
    step: usize,
    state: usize,
) -> Result<Vec<(usize, f64)>> {
    let n = dec.sample_size();
    if step + 1 >= n {
        return Err(Error::InvalidStep { step });
    }
    let infeasible = Err(Error::InfeasibleState { step, cluster: state });
    let a = dec.entry()[step];
    let b = dec.exit()[step];
    let a_next = dec.entry_or_zero(step + 1);
    let has_next_crossing = step + 2 < n;

    let opening = (step > 0).then(|| 2 * step - 1);
    if Some(state) == opening {
        if dec.exit()[step - 1] <= 0.0 {
            return infeasible;
        }
    } else if state == 2 * step {
        if dec.interior(step).is_empty() {
            return infeasible;
        }
    } else if state == 2 * step + 1 {
        let mut row = vec![(2 * step + 2, (1.0 - b - a_next) / (1.0 - b))];
        if has_next_crossing {
            row.push((2 * step + 3, a_next / (1.0 - b)));
        }
        return Ok(row);
    } else {
        return infeasible;
    }

    // from the opening crossing or from the interior: identical rows
    let spread = (1.0 - a - b) / ((1.0 - a) * (1.0 - b));
    let mut row = vec![
        (2 * step + 1, b / (1.0 - a)),
        (2 * step + 2, (1.0 - b - a_next) * spread),
    ];
    if has_next_crossing {
        row.push((2 * step + 3, a_next * spread));
    }
    Ok(row)
}

/// Probabilities that the interior cluster of stratum `step` is the
/// winner `W_i`, the jumper `J_i`, or the `i`-th selected cluster `X_i`
/// of ordered pivotal sampling on the cluster population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterMarginals {
    pub winner: f64,
    pub jumper: f64,
    pub selected: f64,
}

pub fn cluster_marginals(dec: &StrataDecomposition, step: usize) -> Result<ClusterMarginals> {
    if step >= dec.sample_size() {
        return Err(Error::InvalidStep { step });
    }
    let b_prev = dec.exit_or_zero(step.checked_sub(1));
    let a = dec.entry_or_zero(step);
    let b = dec.exit_or_zero(Some(step));
    let free = 1.0 - a - b_prev;
    let denom = (1.0 - a) * (1.0 - b);
    Ok(ClusterMarginals {
        winner: free * (1.0 - a - b) / denom,
        jumper: a * free / denom,
        selected: free,
    })
}

/// Joint selection counts over Monte Carlo replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct JointCounts {
    size: usize,
    replicates: u64,
    counts: Vec<u64>,
}

impl JointCounts {
    pub fn new(size: usize) -> Self {
        Self { size, replicates: 0, counts: vec![0; size * size] }
    }

    pub fn record(&mut self, sample: &Sample) {
        let units = sample.units();
        for (a, &k) in units.iter().enumerate() {
            for &l in &units[a..] {
                self.counts[k * self.size + l] += 1;
            }
        }
        self.replicates += 1;
    }

    /// Adds another tally of the same population; order does not matter.
    pub fn merge(&mut self, other: &JointCounts) {
        assert_eq!(self.size, other.size, "merging counts of different populations");
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.replicates += other.replicates;
    }

    pub fn replicates(&self) -> u64 {
        self.replicates
    }

    pub fn count(&self, k: usize, l: usize) -> u64 {
        let (k, l) = if k <= l { (k, l) } else { (l, k) };
        self.counts[k * self.size + l]
    }

    /// Relative frequencies with their binomial standard errors
    /// `sqrt(p (1 - p) / R)`.
    pub fn estimate(&self) -> MonteCarloPikl {
        let r = self.replicates.max(1) as f64;
        let mut estimate = SymMatrix::zeros(self.size);
        let mut standard_error = SymMatrix::zeros(self.size);
        for k in 0..self.size {
            for l in k..self.size {
                let p = self.counts[k * self.size + l] as f64 / r;
                estimate.set_sym(k, l, p);
                standard_error.set_sym(k, l, sqrt(p * (1.0 - p) / r));
            }
        }
        MonteCarloPikl { estimate: PiklMatrix(estimate), standard_error, replicates: self.replicates }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloPikl {
    pub estimate: PiklMatrix,
    pub standard_error: SymMatrix,
    pub replicates: u64,
}

/// Tallies replicates `range` of `algorithm`, replicate `r` drawing from
/// stream `r` of `seed`.
pub fn tally_replicates(
    algorithm: Algorithm,
    pv: &ProbabilityVector,
    seed: u64,
    range: core::ops::Range<u64>,
) -> Result<JointCounts> {
    let mut counts = JointCounts::new(pv.population_size());
    for r in range {
        let mut rng = RandomSource::for_replicate(seed, r);
        counts.record(&algorithm.draw(pv, &mut rng)?);
    }
    Ok(counts)
}

pub fn monte_carlo_pikl(
    algorithm: Algorithm,
    pv: &ProbabilityVector,
    replicates: u64,
    seed: u64,
) -> Result<MonteCarloPikl> {
    if replicates == 0 {
        return Err(Error::InvalidSizes { population: pv.population_size(), sample: 0 });
    }
    Ok(tally_replicates(algorithm, pv, seed, 0..replicates)?.estimate())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::enumerate_pivotal;
    use crate::strata::{cumulate, decompose};

    const EIGHT: [f64; 8] = [0.2, 0.5, 0.3, 0.4, 0.9, 0.8, 0.5, 0.4];

    #[test]
    fn same_stratum_interiors_never_meet() {
        let pv = cumulate(&EIGHT).unwrap();
        let dec = decompose(&pv);
        assert_eq!(pikl_theorem(&dec, &pv, 0, 1).unwrap(), 0.0);
        assert_eq!(pikl_theorem(&dec, &pv, 6, 7).unwrap(), 0.0);
        assert_eq!(pikl_theorem(&dec, &pv, 3, 3), Err(Error::SameUnit(3)));
    }

    #[test]
    fn independence_across_a_phantom_boundary() {
        let pv = cumulate(&EIGHT).unwrap();
        let dec = decompose(&pv);
        let p = pikl_theorem(&dec, &pv, 0, 3).unwrap();
        assert!((p - 0.08).abs() < 1e-15);
        assert_eq!(p, pikl_theorem(&dec, &pv, 3, 0).unwrap());
    }

    #[test]
    fn three_unit_frame_by_row_sums() {
        // n = 2 pins every pi_kl through the fixed-size identities
        let pv = cumulate(&[0.5, 0.7, 0.8]).unwrap();
        let m = pikl_matrix(&decompose(&pv), &pv).unwrap();
        assert!((m.get(0, 1) - 0.2).abs() < 1e-14);
        assert!((m.get(0, 2) - 0.3).abs() < 1e-14);
        assert!((m.get(1, 2) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn equal_probability_stratified_pairs() {
        let pv = cumulate(&[0.5; 4]).unwrap();
        let m = pikl_matrix(&decompose(&pv), &pv).unwrap();
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.get(2, 3), 0.0);
        for (k, l) in [(0, 2), (0, 3), (1, 2), (1, 3)] {
            assert!((m.get(k, l) - 0.25).abs() < 1e-15);
        }
        assert!(m.row_sum_residual(2) < 1e-15);
    }

    #[test]
    fn transitions_out_of_the_eight_unit_middle_stratum() {
        let pv = cumulate(&EIGHT).unwrap();
        let dec = decompose(&pv);
        // stratum 1 opens with a phantom crossing, so only its interior and
        // closing crossing can hold Y_2
        assert!(matches!(transition_probabilities(&dec, 1, 1), Err(Error::InfeasibleState { .. })));
        let row = transition_probabilities(&dec, 1, 2).unwrap();
        assert_eq!(row[0].0, 3);
        assert!((row[0].1 - 0.75).abs() < 1e-14);
        let total: f64 = row.iter().map(|x| x.1).sum();
        assert!((total - 1.0).abs() < 1e-14);
        let from_crossing = transition_probabilities(&dec, 1, 3).unwrap();
        let (a2, b1) = (dec.entry()[2], dec.exit()[1]);
        assert!((from_crossing[0].1 - (1.0 - b1 - a2) / (1.0 - b1)).abs() < 1e-15);
        assert!(matches!(transition_probabilities(&dec, 3, 6), Err(Error::InvalidStep { .. })));
    }

    #[test]
    fn opening_and_interior_rows_coincide() {
        let pv = cumulate(&[0.3, 0.6, 0.4, 0.6, 0.6, 0.5]).unwrap();
        let dec = decompose(&pv);
        let a = transition_probabilities(&dec, 1, 1).unwrap();
        let b = transition_probabilities(&dec, 1, 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn interior_marginal_matches_cluster_mass() {
        let pv = cumulate(&EIGHT).unwrap();
        let dec = decompose(&pv);
        let m = cluster_marginals(&dec, 1).unwrap();
        assert!((m.selected - 0.4).abs() < 1e-15);
        let last = cluster_marginals(&dec, 3).unwrap();
        assert_eq!(last.jumper, 0.0);
        assert!((last.selected - 0.9).abs() < 1e-15);
    }

    #[test]
    fn counts_merge_in_any_order() {
        let pv = cumulate(&EIGHT).unwrap();
        let whole = tally_replicates(Algorithm::Pivotal, &pv, 4, 0..300).unwrap();
        let mut left = tally_replicates(Algorithm::Pivotal, &pv, 4, 150..300).unwrap();
        left.merge(&tally_replicates(Algorithm::Pivotal, &pv, 4, 0..150).unwrap());
        assert_eq!(whole, left);
    }

    #[test]
    fn single_replicate_is_an_indicator() {
        let pv = cumulate(&EIGHT).unwrap();
        let mc = monte_carlo_pikl(Algorithm::DevilleSystematic, &pv, 1, 9).unwrap();
        for k in 0..8 {
            for l in 0..8 {
                let p = mc.estimate.get(k, l);
                assert!(p == 0.0 || p == 1.0);
            }
        }
        assert!(monte_carlo_pikl(Algorithm::Pivotal, &pv, 0, 9).is_err());
    }

    #[test]
    fn formula_matches_enumeration_on_the_eight_unit_frame() {
        let pv = cumulate(&EIGHT).unwrap();
        let formula = pikl_matrix(&decompose(&pv), &pv).unwrap();
        let exact = design_pikl(&enumerate_pivotal(&pv).unwrap());
        assert!(formula.max_abs_diff(&exact) < 1e-12, "{}", formula.max_abs_diff(&exact));
    }
}
