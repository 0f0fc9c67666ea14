//! Criteria for comparing sampling designs: entropy, divergence, variance
//! of the Horvitz-Thompson estimator, design effects and the spread of the
//! eigenvalues of the variance-covariance matrix.
//!
//! Logarithms are natural throughout. Closed forms assume equal inclusion
//! probabilities `n / N` with `N = n p`, where stratum `i` holds units
//! `i p .. (i + 1) p`.

use alloc::vec::Vec;

use crate::design::SamplingDesign;
use crate::inclusion::PiklMatrix;
use crate::linalg::{symmetric_eigenvalues, SymMatrix};
use crate::math::{kahan, ln, KahanSum};
use crate::strata::ProbabilityVector;
use crate::{Error, Result};

/// Closed-form families for equal-probability designs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignKind {
    SimpleRandom,
    Systematic,
    Pivotal,
}

impl DesignKind {
    pub fn tag(&self) -> &'static str {
        match self {
            DesignKind::SimpleRandom => "srs",
            DesignKind::Systematic => "sys",
            DesignKind::Pivotal => "ops",
        }
    }
}

/// Values of a study variable, one per population unit.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyVariable(Vec<f64>);

impl StudyVariable {
    pub fn new(values: Vec<f64>) -> Self {
        StudyVariable(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        kahan(self.0.iter().copied())
    }

    pub fn is_constant(&self) -> bool {
        self.0.windows(2).all(|w| w[0] == w[1])
    }
}

/// `Delta_kl = pi_kl - pi_k pi_l`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix(SymMatrix);

impl DesignMatrix {
    pub fn matrix(&self) -> &SymMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.0.get(k, l)
    }

    /// Largest absolute row sum; zero for fixed-size designs.
    pub fn row_sum_residual(&self) -> f64 {
        self.0.row_sums().into_iter().map(f64::abs).fold(0.0, f64::max)
    }
}

pub fn delta_matrix(pm: &PiklMatrix) -> DesignMatrix {
    let pi = pm.first_order();
    let m = SymMatrix::from_fn(pm.dim(), |k, l| {
        if k == l {
            pi[k] * (1.0 - pi[k])
        } else {
            pm.get(k, l) - pi[k] * pi[l]
        }
    });
    DesignMatrix(m)
}

fn check_multiple(population: usize, size: usize) -> Result<usize> {
    if size == 0 || size > population {
        return Err(Error::InvalidSizes { population, sample: size });
    }
    if !population.is_multiple_of(size) {
        return Err(Error::NonMultiple { population, sample: size });
    }
    Ok(population / size)
}

fn check_length(variable: &StudyVariable, expected: usize) -> Result<()> {
    if variable.len() == expected {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found: variable.len() })
    }
}

/// Shannon entropy of a design, with `0 log 0 = 0`.
pub fn entropy(design: &SamplingDesign) -> f64 {
    let mut acc = KahanSum::default();
    for (_, q) in design.support() {
        if *q > 0.0 {
            acc.add(-q * ln(*q));
        }
    }
    acc.value()
}

/// `log C(N, n)`, summed termwise to stay accurate for large `N`.
fn log_binomial(population: usize, size: usize) -> f64 {
    kahan((0..size).map(|k| ln((population - k) as f64 / (size - k) as f64)))
}

pub fn entropy_closed_form(kind: DesignKind, population: usize, size: usize) -> Result<f64> {
    match kind {
        DesignKind::SimpleRandom => {
            if size > population {
                return Err(Error::InvalidSizes { population, sample: size });
            }
            Ok(log_binomial(population, size))
        }
        DesignKind::Systematic => Ok(ln(check_multiple(population, size)? as f64)),
        DesignKind::Pivotal => Ok(size as f64 * ln(check_multiple(population, size)? as f64)),
    }
}

/// `D(q || r) = sum_s q(s) log(q(s) / r(s))`. The support of `q` must lie
/// inside the support of `r`.
pub fn kl_divergence(q: &SamplingDesign, r: &SamplingDesign) -> Result<f64> {
    if q.population_size() != r.population_size() || q.sample_size() != r.sample_size() {
        return Err(Error::DimensionMismatch { expected: r.population_size(), found: q.population_size() });
    }
    let mut acc = KahanSum::default();
    for (s, qs) in q.support() {
        if *qs <= 0.0 {
            continue;
        }
        let rs = r.probability(s);
        if rs <= 0.0 {
            return Err(Error::SupportViolation);
        }
        acc.add(qs * ln(qs / rs));
    }
    Ok(acc.value())
}

/// Closed-form divergences between the equal-probability designs. Only
/// pairs whose first support lies inside the second are defined:
/// `(sys, srs)`, `(ops, srs)` and `(sys, ops)`, plus any kind against itself.
pub fn kl_closed_form(q: DesignKind, r: DesignKind, population: usize, size: usize) -> Result<f64> {
    use DesignKind::*;
    let p = check_multiple(population, size)?;
    let (big, n) = (population as f64, size as f64);
    match (q, r) {
        _ if q == r => Ok(0.0),
        (Systematic, SimpleRandom) => {
            Ok(kahan((1..size).map(|k| ln((big - k as f64) / (n - k as f64)))))
        }
        (Pivotal, SimpleRandom) => {
            Ok(kahan((0..size).map(|k| ln((1.0 - k as f64 / big) / (1.0 - k as f64 / n)))))
        }
        (Systematic, Pivotal) => Ok((n - 1.0) * ln(p as f64)),
        _ => Err(Error::SupportViolation),
    }
}

/// `V = sum_k sum_l Delta_kl (y_k / pi_k) (y_l / pi_l)`.
pub fn ht_variance(dm: &DesignMatrix, pv: &ProbabilityVector, y: &StudyVariable) -> Result<f64> {
    let size = dm.dim();
    if pv.population_size() != size {
        return Err(Error::DimensionMismatch { expected: size, found: pv.population_size() });
    }
    check_length(y, size)?;
    let expanded: Vec<f64> = y.values().iter().zip(pv.pi()).map(|(v, p)| v / p).collect();
    Ok(dm.matrix().quadratic_form(&expanded))
}

/// `sum_s q(s) (t_hat(s) - t_y)^2`, straight from the design.
pub fn design_variance(design: &SamplingDesign, pv: &ProbabilityVector, y: &StudyVariable) -> Result<f64> {
    check_length(y, design.population_size())?;
    let total = y.total();
    let mut acc = KahanSum::default();
    for (s, q) in design.support() {
        let estimate = kahan(s.units().iter().map(|&k| y.values()[k] / pv.pi()[k]));
        let e = estimate - total;
        acc.add(q * e * e);
    }
    Ok(acc.value())
}

fn mean(values: &[f64]) -> f64 {
    kahan(values.iter().copied()) / values.len() as f64
}

/// Sample variance with divisor `len - 1`.
fn dispersion(values: &[f64]) -> f64 {
    let mu = mean(values);
    kahan(values.iter().map(|v| (v - mu) * (v - mu))) / (values.len() - 1) as f64
}

/// Variance of the Horvitz-Thompson total under the equal-probability
/// design of the given kind, from the stratum and group summaries of `y`.
/// Only simple random sampling admits `N` that is not a multiple of `n`.
pub fn variance_closed_form(kind: DesignKind, y: &StudyVariable, size: usize) -> Result<f64> {
    let population = y.len();
    if size == 0 || size > population {
        return Err(Error::InvalidSizes { population, sample: size });
    }
    // simple random sampling needs no strata
    let p = if kind == DesignKind::SimpleRandom { 0 } else { check_multiple(population, size)? };
    let (big, n) = (population as f64, size as f64);
    let scale = big * big * (1.0 - n / big) / n;
    let values = y.values();
    match kind {
        DesignKind::SimpleRandom => {
            if population < 2 {
                return Ok(0.0);
            }
            Ok(scale * dispersion(values))
        }
        DesignKind::Pivotal => {
            if p < 2 {
                return Ok(0.0);
            }
            let within = kahan(values.chunks(p).map(dispersion));
            Ok(scale * within / n)
        }
        DesignKind::Systematic => {
            if p < 2 {
                return Ok(0.0);
            }
            // t_j sums the units at offset j of every stratum
            let totals: Vec<f64> = (0..p).map(|j| kahan((0..size).map(|i| values[i * p + j]))).collect();
            let centre = y.total() / p as f64;
            let spread = kahan(totals.iter().map(|t| (t - centre) * (t - centre))) / (p - 1) as f64;
            Ok(scale * spread / n)
        }
    }
}

/// Product of two commuting symmetric matrices.
fn commuting_product(a: &SymMatrix, b: &SymMatrix) -> SymMatrix {
    let dim = a.dim();
    SymMatrix::from_fn(dim, |i, j| kahan((0..dim).map(|t| a.get(i, t) * b.get(t, j))))
}

/// Joint inclusion probabilities of the compromise Markov chain design.
///
/// Offsets `r` and `s` in strata `i < j` are selected together with
/// probability `p^{-1} (M^{j-i})_{rs}`, where `M` keeps the offset with
/// probability `1 - rho` and redraws it uniformly otherwise.
pub fn markov_pikl(population: usize, size: usize, rho: f64) -> Result<PiklMatrix> {
    let p = check_multiple(population, size)?;
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::InvalidRho(rho));
    }
    let step = SymMatrix::from_fn(p, |r, s| rho / p as f64 + if r == s { 1.0 - rho } else { 0.0 });
    let mut powers = Vec::with_capacity(size);
    powers.push(SymMatrix::from_fn(p, |r, s| if r == s { 1.0 } else { 0.0 }));
    for gap in 1..size {
        let next = commuting_product(&powers[gap - 1], &step);
        powers.push(next);
    }
    let inv_p = 1.0 / p as f64;
    let m = SymMatrix::from_fn(population, |k, l| {
        let (i, r) = (k / p, k % p);
        let (j, s) = (l / p, l % p);
        if k == l {
            inv_p
        } else if i == j {
            0.0
        } else {
            inv_p * powers[i.abs_diff(j)].get(r, s)
        }
    });
    Ok(PiklMatrix::from_matrix(m))
}

/// `pi_kl = n (n - 1) / (N (N - 1))` for simple random sampling.
pub fn srs_pikl(population: usize, size: usize) -> Result<PiklMatrix> {
    if size == 0 || size > population {
        return Err(Error::InvalidSizes { population, sample: size });
    }
    let (big, n) = (population as f64, size as f64);
    let joint = if population > 1 { n * (n - 1.0) / (big * (big - 1.0)) } else { 0.0 };
    let m = SymMatrix::from_fn(population, |k, l| if k == l { n / big } else { joint });
    Ok(PiklMatrix::from_matrix(m))
}

pub fn deff(design_variance: f64, srs_variance: f64) -> Result<f64> {
    if srs_variance.is_nan() || srs_variance <= 0.0 {
        return Err(Error::ConstantVariable);
    }
    Ok(design_variance / srs_variance)
}

/// Design effect of the compromise Markov chain design with parameter
/// `rho` against simple random sampling, for `n` strata of equal size.
pub fn markov_deff(y: &StudyVariable, size: usize, rho: f64) -> Result<f64> {
    if y.is_constant() {
        return Err(Error::ConstantVariable);
    }
    let population = y.len();
    let dm = delta_matrix(&markov_pikl(population, size, rho)?);
    let pv = ProbabilityVector::new(alloc::vec![size as f64 / population as f64; population])?;
    deff(ht_variance(&dm, &pv, y)?, variance_closed_form(DesignKind::SimpleRandom, y, size)?)
}

/// Largest design effect over all non-constant study variables.
pub fn dmax_closed_form(kind: DesignKind, population: usize, size: usize) -> Result<f64> {
    check_multiple(population, size)?;
    let (big, n) = (population as f64, size as f64);
    match kind {
        DesignKind::SimpleRandom => Ok(1.0),
        DesignKind::Pivotal => Ok((big - 1.0) / (big - n)),
        DesignKind::Systematic => Ok(n * (big - 1.0) / (big - n)),
    }
}

/// Spectrum of a variance-covariance matrix and its dispersion.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDispersion {
    /// Ascending eigenvalues.
    pub eigenvalues: Vec<f64>,
    /// Mean eigenvalue `tr(Delta) / N`.
    pub mean: f64,
    /// `N^{-1} sum_k (lambda_k - mean)^2`.
    pub delta: f64,
}

impl EigenDispersion {
    /// Groups ascending eigenvalues closer than `tol` to the first of their
    /// group, returning `(value, multiplicity)` pairs.
    pub fn distinct(&self, tol: f64) -> Vec<(f64, usize)> {
        let mut groups: Vec<(f64, usize)> = Vec::new();
        for &v in &self.eigenvalues {
            match groups.last_mut() {
                Some((first, count)) if (v - *first).abs() <= tol => *count += 1,
                _ => groups.push((v, 1)),
            }
        }
        groups
    }
}

pub fn eigen_dispersion(dm: &DesignMatrix) -> EigenDispersion {
    let eigenvalues = symmetric_eigenvalues(dm.matrix());
    let n = eigenvalues.len().max(1) as f64;
    let mean = dm.matrix().trace() / n;
    let delta = kahan(eigenvalues.iter().map(|v| (v - mean) * (v - mean))) / n;
    EigenDispersion { eigenvalues, mean, delta }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{enumerate_design, enumerate_srs};
    use crate::inclusion::design_pikl;
    use crate::samplers::Algorithm;
    use crate::strata::cumulate;
    use alloc::vec;

    fn equal(population: usize, size: usize) -> ProbabilityVector {
        cumulate(&vec![size as f64 / population as f64; population]).unwrap()
    }

    #[test]
    fn entropies_for_four_units() {
        let pv = equal(4, 2);
        let sys = enumerate_design(Algorithm::Systematic, &pv).unwrap();
        let ops = enumerate_design(Algorithm::Pivotal, &pv).unwrap();
        let srs = enumerate_srs(4, 2).unwrap();
        assert!((entropy(&sys) - ln(2.0)).abs() < 1e-15);
        assert!((entropy(&ops) - 2.0 * ln(2.0)).abs() < 1e-15);
        assert!((entropy(&srs) - ln(6.0)).abs() < 1e-15);
    }

    #[test]
    fn closed_form_entropies() {
        assert!((entropy_closed_form(DesignKind::SimpleRandom, 12, 4).unwrap() - ln(495.0)).abs() < 1e-12);
        assert!((entropy_closed_form(DesignKind::Pivotal, 12, 4).unwrap() - 4.0 * ln(3.0)).abs() < 1e-15);
        assert!((entropy_closed_form(DesignKind::Systematic, 12, 4).unwrap() - ln(3.0)).abs() < 1e-15);
        assert!(matches!(
            entropy_closed_form(DesignKind::Pivotal, 10, 4),
            Err(Error::NonMultiple { .. })
        ));
    }

    #[test]
    fn divergences_for_four_units() {
        let pv = equal(4, 2);
        let sys = enumerate_design(Algorithm::Systematic, &pv).unwrap();
        let ops = enumerate_design(Algorithm::Pivotal, &pv).unwrap();
        let srs = enumerate_srs(4, 2).unwrap();
        assert!((kl_divergence(&sys, &ops).unwrap() - ln(2.0)).abs() < 1e-15);
        assert!((kl_divergence(&sys, &srs).unwrap() - ln(3.0)).abs() < 1e-15);
        assert_eq!(kl_divergence(&ops, &ops).unwrap(), 0.0);
        assert_eq!(kl_divergence(&ops, &sys), Err(Error::SupportViolation));
        assert!((kl_closed_form(DesignKind::Systematic, DesignKind::SimpleRandom, 4, 2).unwrap() - ln(3.0)).abs() < 1e-15);
    }

    #[test]
    fn pivotal_delta_is_block_diagonal() {
        let pv = equal(6, 2);
        let dm = delta_matrix(&design_pikl(&enumerate_design(Algorithm::Pivotal, &pv).unwrap()));
        let p = 3.0;
        let block = SymMatrix::from_fn(3, |i, j| (if i == j { 1.0 } else { 0.0 } - 1.0 / p) / p);
        let eye = SymMatrix::from_fn(2, |i, j| if i == j { 1.0 } else { 0.0 });
        assert!(dm.matrix().max_abs_diff(&eye.kronecker(&block)) < 1e-15);
        assert!(dm.row_sum_residual() < 1e-15);
    }

    #[test]
    fn markov_extremes_and_midpoint() {
        let ops = markov_pikl(6, 2, 1.0).unwrap();
        let sys = markov_pikl(6, 2, 0.0).unwrap();
        assert_eq!(ops.get(0, 4), 1.0 / 9.0);
        assert_eq!(sys.get(0, 3), 1.0 / 3.0);
        assert_eq!(sys.get(0, 4), 0.0);
        assert_eq!(ops.get(0, 1), 0.0);
        let mid = markov_pikl(4, 2, 0.5).unwrap();
        assert!((mid.get(0, 2) - 0.375).abs() < 1e-15);
        assert!(matches!(markov_pikl(4, 2, 1.5), Err(Error::InvalidRho(_))));
    }

    #[test]
    fn variances_agree_across_routes() {
        let y = StudyVariable::new(vec![3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0]);
        let pv = equal(8, 2);
        for (kind, rho) in [(DesignKind::Systematic, 0.0), (DesignKind::Pivotal, 1.0)] {
            let dm = delta_matrix(&markov_pikl(8, 2, rho).unwrap());
            let v = ht_variance(&dm, &pv, &y).unwrap();
            assert!((v - variance_closed_form(kind, &y, 2).unwrap()).abs() < 1e-9);
        }
        let srs = enumerate_srs(8, 2).unwrap();
        let direct = design_variance(&srs, &pv, &y).unwrap();
        let dm = delta_matrix(&design_pikl(&srs));
        assert!((ht_variance(&dm, &pv, &y).unwrap() - direct).abs() < 1e-9);
        assert!((variance_closed_form(DesignKind::SimpleRandom, &y, 2).unwrap() - direct).abs() < 1e-9);
    }

    #[test]
    fn constant_variables_have_no_design_effect() {
        let y = StudyVariable::new(vec![2.5; 6]);
        for kind in [DesignKind::SimpleRandom, DesignKind::Systematic, DesignKind::Pivotal] {
            assert_eq!(variance_closed_form(kind, &y, 3).unwrap(), 0.0);
        }
        assert_eq!(markov_deff(&y, 3, 0.5), Err(Error::ConstantVariable));
        assert_eq!(deff(1.0, 0.0), Err(Error::ConstantVariable));
    }

    #[test]
    fn dmax_values() {
        assert!((dmax_closed_form(DesignKind::Pivotal, 12, 2).unwrap() - 1.1).abs() < 1e-15);
        assert!((dmax_closed_form(DesignKind::Systematic, 12, 2).unwrap() - 2.2).abs() < 1e-15);
        let far = dmax_closed_form(DesignKind::Pivotal, 1_000_000, 2).unwrap();
        assert!((far - 1.0).abs() < 2e-6);
    }

    #[test]
    fn pivotal_spectrum_for_twelve_units() {
        let dm = delta_matrix(&markov_pikl(12, 4, 1.0).unwrap());
        let ed = eigen_dispersion(&dm);
        assert!((ed.mean - 2.0 / 9.0).abs() < 1e-15);
        let groups = ed.distinct(1e-10);
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].1, 4);
        assert!(groups[0].0.abs() < 1e-12);
        assert!((groups[1].0 - 1.0 / 3.0).abs() < 1e-12);
        assert!((ed.delta - 2.0 / 81.0).abs() < 1e-12);
    }

    #[test]
    fn srs_closed_form_matrix_matches_enumeration() {
        let exact = design_pikl(&enumerate_srs(7, 3).unwrap());
        assert!(srs_pikl(7, 3).unwrap().max_abs_diff(&exact) < 1e-15);
    }
}
