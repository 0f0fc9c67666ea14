//! Cumulative-probability geometry of an ordered population.
//!
//! Laying the inclusion probabilities end to end on the real line, the
//! integers `1, ..., n-1` fall inside `n-1` units called *cross-border*
//! units. They cut the population into `n` microstrata, adjacent strata
//! sharing their cross-border unit. Grouping the runs of interior units
//! and the cross-border singletons gives a population of `2n-1` clusters.
//!
//! Indexing is zero-based. Crossing `m` is the unit containing the integer
//! `m + 1`; it closes stratum `m` and opens stratum `m + 1`. Cluster `2m`
//! holds the interior units of stratum `m` and cluster `2m + 1` holds
//! crossing `m`.

use alloc::vec::Vec;
use core::ops::Range;

use crate::math::{kahan, snap, KahanSum};
use crate::{Error, Result, SNAP_TOLERANCE};

/// Ordered first-order inclusion probabilities with their running sums.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector {
    pi: Vec<f64>,
    cumulative: Vec<f64>,
    sample_size: usize,
}

/// Builds a [`ProbabilityVector`], rejecting probabilities outside `(0, 1)`
/// and totals further than [`SNAP_TOLERANCE`] from an integer.
pub fn cumulate(pi: &[f64]) -> Result<ProbabilityVector> {
    ProbabilityVector::new(pi.to_vec())
}

impl ProbabilityVector {
    pub fn new(pi: Vec<f64>) -> Result<Self> {
        for (unit, &value) in pi.iter().enumerate() {
            if !(value > 0.0 && value < 1.0) {
                return Err(Error::InvalidProbability { unit, value });
            }
        }
        Self::from_masses(pi)
    }

    /// Like [`ProbabilityVector::new`] but admits masses of exactly `0` and
    /// `1`, as carried by phantom and certainty clusters.
    pub(crate) fn from_masses(pi: Vec<f64>) -> Result<Self> {
        if pi.is_empty() {
            return Err(Error::EmptyPopulation);
        }
        for (unit, &value) in pi.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::InvalidProbability { unit, value });
            }
        }
        let mut cumulative = Vec::with_capacity(pi.len() + 1);
        cumulative.push(0.0);
        let mut acc = KahanSum::default();
        for &p in &pi {
            acc.add(p);
            cumulative.push(snap(acc.value(), SNAP_TOLERANCE));
        }
        let total = acc.value();
        let rounded = libm::round(total);
        if (total - rounded).abs() > SNAP_TOLERANCE || rounded < 1.0 {
            return Err(Error::NonIntegerSampleSize { total });
        }
        // A zero-mass unit repeats the previous running sum, so snapping can
        // never make the sequence decrease.
        for w in 1..cumulative.len() {
            if cumulative[w] < cumulative[w - 1] {
                cumulative[w] = cumulative[w - 1];
            }
        }
        Ok(Self { pi, cumulative, sample_size: rounded as usize })
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    /// Running sums `V_0 = 0, V_1, ..., V_N`, each snapped to an integer
    /// when within tolerance.
    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn population_size(&self) -> usize {
        self.pi.len()
    }

    pub fn sample_size(&self) -> usize {
        self.sample_size
    }

    /// The unit `k` with `V_k <= x < V_{k+1}` (zero-based), i.e. the unit
    /// whose segment of the line covers `x`. Zero-mass units never match.
    pub fn locate(&self, x: f64) -> usize {
        // first index w with V_w > x, minus one
        let w = self.cumulative.partition_point(|&v| v <= x);
        w.saturating_sub(1).min(self.pi.len() - 1)
    }

    /// The same probabilities listed in a different order; `order[r]` is the
    /// original unit placed at rank `r`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let pi = order.iter().map(|&k| self.pi[k]).collect();
        Self::from_masses(pi)
    }
}

/// Position of a unit relative to the microstrata, as used by the joint
/// inclusion formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitRole {
    /// A unit lying inside a single stratum. A crossing whose exit mass is
    /// zero is reported here, in the stratum it closes.
    Interior { stratum: usize },
    /// A crossing with positive mass on both sides of its integer.
    CrossBorder { crossing: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrataDecomposition {
    cross_border: Vec<usize>,
    entry: Vec<f64>,
    exit: Vec<f64>,
    strata: Vec<Range<usize>>,
    roles: Vec<UnitRole>,
}

/// Locates the cross-border units of `pv` and the microstrata they delimit.
///
/// Crossing `m` is the unit `k` with `V_{k-1} < m + 1 <= V_k`: a unit whose
/// running sum lands exactly on the integer owns it, with zero exit mass.
pub fn decompose(pv: &ProbabilityVector) -> StrataDecomposition {
    let v = pv.cumulative();
    let population = pv.population_size();
    let n = pv.sample_size();
    let mut cross_border = Vec::with_capacity(n.saturating_sub(1));
    let mut entry = Vec::with_capacity(n.saturating_sub(1));
    let mut exit = Vec::with_capacity(n.saturating_sub(1));
    for m in 0..n.saturating_sub(1) {
        let integer = (m + 1) as f64;
        // first w >= 1 with V_w >= integer; unit w - 1 then has V_{w-1} < integer
        let w = v.partition_point(|&x| x < integer);
        let unit = w - 1;
        cross_border.push(unit);
        entry.push(integer - v[unit]);
        exit.push(v[unit + 1] - integer);
    }

    let mut strata = Vec::with_capacity(n);
    for s in 0..n {
        let start = if s == 0 { 0 } else { cross_border[s - 1] };
        let end = if s + 1 == n { population } else { cross_border[s] + 1 };
        strata.push(start..end);
    }

    let mut roles = Vec::with_capacity(population);
    let mut next = 0;
    for k in 0..population {
        if next < cross_border.len() && cross_border[next] == k {
            if exit[next] > 0.0 {
                roles.push(UnitRole::CrossBorder { crossing: next });
            } else {
                roles.push(UnitRole::Interior { stratum: next });
            }
            next += 1;
        } else {
            roles.push(UnitRole::Interior { stratum: next });
        }
    }

    StrataDecomposition { cross_border, entry, exit, strata, roles }
}

impl StrataDecomposition {
    /// Cross-border units `k_1 < ... < k_{n-1}`, zero-based.
    pub fn cross_border(&self) -> &[usize] {
        &self.cross_border
    }

    /// Masses `a_m = (m+1) - V_{k-1}` each crossing brings to the stratum it
    /// closes.
    pub fn entry(&self) -> &[f64] {
        &self.entry
    }

    /// Masses `b_m = V_k - (m+1)` each crossing carries into the next stratum.
    pub fn exit(&self) -> &[f64] {
        &self.exit
    }

    /// Microstrata as half-open unit ranges; consecutive ranges share their
    /// crossing, including phantom members with zero exit mass.
    pub fn strata(&self) -> &[Range<usize>] {
        &self.strata
    }

    /// For each crossing, whether it enters the next stratum only as a
    /// zero-mass phantom.
    pub fn phantom_flags(&self) -> Vec<bool> {
        self.exit.iter().map(|&b| b == 0.0).collect()
    }

    pub fn sample_size(&self) -> usize {
        self.strata.len()
    }

    pub fn role(&self, unit: usize) -> UnitRole {
        self.roles[unit]
    }

    /// `c_m = a_m b_m / ((1 - a_m)(1 - b_m))`.
    pub fn chain_factor(&self, crossing: usize) -> f64 {
        let a = self.entry[crossing];
        let b = self.exit[crossing];
        a * b / ((1.0 - a) * (1.0 - b))
    }

    /// Product of the chain factors of crossings `from..to`; `1` when empty.
    pub fn chain_product(&self, from: usize, to: usize) -> f64 {
        (from..to).map(|m| self.chain_factor(m)).product()
    }

    /// The units of stratum `s`, leaving out an opening crossing with zero
    /// exit mass, which belongs to the previous stratum only.
    pub fn members(&self, stratum: usize) -> Range<usize> {
        let range = self.strata[stratum].clone();
        if stratum > 0 && self.exit[stratum - 1] == 0.0 {
            range.start + 1..range.end
        } else {
            range
        }
    }

    /// The units of stratum `s` other than its two crossings.
    pub fn interior(&self, stratum: usize) -> Range<usize> {
        let n = self.strata.len();
        let start = if stratum == 0 { 0 } else { self.cross_border[stratum - 1] + 1 };
        let end = if stratum + 1 == n { self.strata[n - 1].end } else { self.cross_border[stratum] };
        start..end.max(start)
    }

    /// Entry mass with the convention `a = 0` past the last crossing.
    pub(crate) fn entry_or_zero(&self, crossing: usize) -> f64 {
        self.entry.get(crossing).copied().unwrap_or(0.0)
    }

    /// Exit mass with `b = 0` for the virtual crossings before the first
    /// stratum and after the last.
    pub(crate) fn exit_or_zero(&self, crossing: Option<usize>) -> f64 {
        crossing.and_then(|m| self.exit.get(m).copied()).unwrap_or(0.0)
    }
}

/// The `2n - 1` clusters: stratum interiors alternating with crossings.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterPopulation {
    clusters: Vec<Range<usize>>,
    psi: Vec<f64>,
    cluster_of: Vec<usize>,
}

pub fn build_clusters(dec: &StrataDecomposition, pv: &ProbabilityVector) -> ClusterPopulation {
    let v = pv.cumulative();
    let population = pv.population_size();
    let n = dec.sample_size();
    let mut clusters = Vec::with_capacity(2 * n - 1);
    let mut psi = Vec::with_capacity(2 * n - 1);
    for s in 0..n {
        let interior = dec.interior(s);
        psi.push(v[interior.end] - v[interior.start]);
        clusters.push(interior);
        if s + 1 < n {
            let k = dec.cross_border[s];
            clusters.push(k..k + 1);
            psi.push(pv.pi()[k]);
        }
    }
    let mut cluster_of = Vec::with_capacity(population);
    for (j, c) in clusters.iter().enumerate() {
        cluster_of.extend(core::iter::repeat_n(j, c.len()));
    }
    ClusterPopulation { clusters, psi, cluster_of }
}

impl ClusterPopulation {
    pub fn clusters(&self) -> &[Range<usize>] {
        &self.clusters
    }

    /// Cluster masses `phi_1, ..., phi_{2n-1}`.
    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn cluster_of(&self, unit: usize) -> usize {
        self.cluster_of[unit]
    }

    pub fn phantom_clusters(&self) -> Vec<usize> {
        (0..self.len()).filter(|&j| self.clusters[j].is_empty()).collect()
    }

    /// The cluster masses as a sampling frame in their own right.
    pub fn psi_vector(&self) -> ProbabilityVector {
        ProbabilityVector::from_masses(self.psi.clone())
            .expect("cluster masses inherit the integer total of their units")
    }
}

/// Distribution of the unit drawn inside a cluster, proportional to `pi`.
pub fn within_cluster_distribution(
    cp: &ClusterPopulation,
    cluster: usize,
    pv: &ProbabilityVector,
) -> Result<Vec<(usize, f64)>> {
    let range = cp.clusters[cluster].clone();
    if range.is_empty() {
        return Err(Error::EmptyCluster { cluster });
    }
    let pi = &pv.pi()[range.clone()];
    let total = kahan(pi.iter().copied());
    Ok(range.zip(pi).map(|(k, &p)| (k, p / total)).collect())
}
