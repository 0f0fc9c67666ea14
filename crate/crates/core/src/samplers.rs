//! Sample selection under each design.

use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;

use crate::strata::{build_clusters, decompose, within_cluster_distribution, ProbabilityVector};
use crate::{Error, RandomSource, Result};

/// Selected units, zero-based and strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Sample(Vec<usize>);

impl Sample {
    /// Sorts `units`; duplicates are a logic error in the caller.
    pub fn from_units(mut units: Vec<usize>) -> Self {
        units.sort_unstable();
        debug_assert!(units.windows(2).all(|w| w[0] < w[1]), "duplicate unit in sample");
        Sample(units)
    }

    pub fn units(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, unit: usize) -> bool {
        self.0.binary_search(&unit).is_ok()
    }

    pub fn into_units(self) -> Vec<usize> {
        self.0
    }
}

impl fmt::Display for Sample {
    /// One-based labels joined by spaces.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{}", k + 1)?;
        }
        Ok(())
    }
}

/// The sampling designs this crate can draw from and enumerate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Algorithm {
    /// Ordered pivotal sampling.
    Pivotal,
    /// Deville's systematic sampling.
    DevilleSystematic,
    /// Classical ordered systematic sampling, one uniform start.
    Systematic,
    /// Simple random sampling without replacement of the same size.
    SimpleRandom,
    /// Compromise Markov chain design with mixing parameter `rho`.
    CompromiseMarkov(f64),
    /// Pivotal sampling after a uniform random reordering.
    RandomizedPivotal,
}

impl Algorithm {
    /// Short tag used in reports: `ops`, `dss`, `sys`, `srs`, `cmc`, `rps`.
    pub fn tag(&self) -> &'static str {
        match self {
            Algorithm::Pivotal => "ops",
            Algorithm::DevilleSystematic => "dss",
            Algorithm::Systematic => "sys",
            Algorithm::SimpleRandom => "srs",
            Algorithm::CompromiseMarkov(_) => "cmc",
            Algorithm::RandomizedPivotal => "rps",
        }
    }

    /// Draws one sample. `SimpleRandom` and `CompromiseMarkov` only use the
    /// population and sample sizes of `pv`.
    pub fn draw(&self, pv: &ProbabilityVector, rng: &mut RandomSource) -> Result<Sample> {
        match *self {
            Algorithm::Pivotal => Ok(ordered_pivotal(pv, rng)),
            Algorithm::DevilleSystematic => Ok(deville_systematic(pv, rng)),
            Algorithm::Systematic => Ok(ordered_systematic(pv, rng)),
            Algorithm::SimpleRandom => srs(pv.population_size(), pv.sample_size(), rng),
            Algorithm::CompromiseMarkov(rho) => {
                compromise_markov(pv.population_size(), pv.sample_size(), rho, rng)
            }
            Algorithm::RandomizedPivotal => Ok(randomized_pivotal(pv, rng)),
        }
    }
}

/// One run of ordered pivotal sampling, advanced fight by fight.
///
/// The survivor's accumulated mass before facing unit `t` is `V_t - i`,
/// where `i` counts the units already selected. Reading it off the snapped
/// running sums means a survivor reaching exactly `1` always takes the
/// selection branch.
#[derive(Debug, Clone)]
pub(crate) struct PivotalRun<'a> {
    pv: &'a ProbabilityVector,
    next: usize,
    survivor: usize,
    winners: Vec<usize>,
    jumpers: Vec<usize>,
}

/// Kind of the pending fight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Fight {
    /// Combined mass below one: the loser is eliminated. `lambda` is the
    /// probability that the current survivor keeps the mass.
    Merge { lambda: f64 },
    /// Combined mass reaches one: somebody is selected. `lambda` is the
    /// probability that the current survivor is the one selected.
    Select { lambda: f64 },
}

impl Fight {
    pub(crate) fn lambda(self) -> f64 {
        match self {
            Fight::Merge { lambda } | Fight::Select { lambda } => lambda,
        }
    }
}

impl<'a> PivotalRun<'a> {
    pub(crate) fn new(pv: &'a ProbabilityVector) -> Self {
        let n = pv.sample_size();
        Self {
            pv,
            next: 1,
            survivor: 0,
            winners: Vec::with_capacity(n),
            jumpers: Vec::with_capacity(n.saturating_sub(1)),
        }
    }

    pub(crate) fn pending(&self) -> Option<Fight> {
        let t = self.next;
        if t >= self.pv.population_size() {
            return None;
        }
        let v = self.pv.cumulative();
        let selected = self.winners.len() as f64;
        let held = (v[t] - selected).max(0.0);
        let incoming = self.pv.pi()[t];
        if v[t + 1] >= selected + 1.0 {
            Some(Fight::Select { lambda: (1.0 - incoming) / (2.0 - held - incoming) })
        } else {
            let total = held + incoming;
            let lambda = if total > 0.0 { held / total } else { 1.0 };
            Some(Fight::Merge { lambda })
        }
    }

    /// Resolves the pending fight; `survivor_wins` picks the branch taken
    /// with probability `lambda`.
    pub(crate) fn resolve(&mut self, survivor_wins: bool) {
        let t = self.next;
        match self.pending().expect("no fight left to resolve") {
            Fight::Merge { .. } => {
                if !survivor_wins {
                    self.survivor = t;
                }
            }
            Fight::Select { .. } => {
                let (winner, jumper) =
                    if survivor_wins { (self.survivor, t) } else { (t, self.survivor) };
                self.winners.push(winner);
                if self.winners.len() < self.pv.sample_size() {
                    self.jumpers.push(jumper);
                }
                self.survivor = jumper;
            }
        }
        self.next += 1;
    }

    /// Winners `W_1..W_n` in selection order and jumpers `J_1..J_{n-1}`.
    pub(crate) fn finish(mut self) -> (Vec<usize>, Vec<usize>) {
        debug_assert!(self.pending().is_none());
        // a one-unit frame of mass one never fights
        if self.winners.len() < self.pv.sample_size() {
            self.winners.push(self.survivor);
        }
        (self.winners, self.jumpers)
    }
}

/// Ordered pivotal sampling: units fight in list order, the survivor
/// accumulating mass until it reaches one and a unit is selected.
pub fn ordered_pivotal(pv: &ProbabilityVector, rng: &mut RandomSource) -> Sample {
    let mut run = PivotalRun::new(pv);
    while let Some(fight) = run.pending() {
        let keep = rng.bernoulli(fight.lambda());
        run.resolve(keep);
    }
    Sample::from_units(run.finish().0)
}

/// Upper end of `[lo, hi)` nudged so that `lo + w` stays in the stratum.
fn clamp_below(position: f64, ceiling: f64) -> f64 {
    if position >= ceiling {
        ceiling.next_down()
    } else {
        position
    }
}

/// Deville's systematic sampling: one draw per microstratum, the step-`i`
/// uniform depending on whether the crossing `k_{i-1}` was just taken.
pub fn deville_systematic(pv: &ProbabilityVector, rng: &mut RandomSource) -> Sample {
    let dec = decompose(pv);
    let n = pv.sample_size();
    let mut units = Vec::with_capacity(n);
    let mut took_crossing = false;
    for step in 0..n {
        let w = if step == 0 {
            rng.uniform()
        } else {
            let b = dec.exit()[step - 1];
            if took_crossing {
                rng.uniform_between(b, 1.0)
            } else if rng.bernoulli(dec.chain_factor(step - 1)) {
                rng.uniform_between(0.0, b)
            } else {
                rng.uniform()
            }
        };
        let position = clamp_below(w + step as f64, (step + 1) as f64);
        let k = pv.locate(position);
        took_crossing = step + 1 < n && k == dec.cross_border()[step];
        units.push(k);
    }
    Sample::from_units(units)
}

/// Classical systematic sampling: one uniform start `u`, then every unit
/// covering `u + j` for `j = 0..n`.
pub fn ordered_systematic(pv: &ProbabilityVector, rng: &mut RandomSource) -> Sample {
    let u = rng.uniform();
    systematic_from_start(pv, u)
}

pub(crate) fn systematic_from_start(pv: &ProbabilityVector, u: f64) -> Sample {
    let units = (0..pv.sample_size())
        .map(|j| pv.locate(clamp_below(u + j as f64, (j + 1) as f64)))
        .collect();
    Sample::from_units(units)
}

pub fn srs(population: usize, size: usize, rng: &mut RandomSource) -> Result<Sample> {
    if size == 0 || size > population {
        return Err(Error::InvalidSizes { population, sample: size });
    }
    let units = rand::seq::index::sample(rng, population, size).into_vec();
    Ok(Sample::from_units(units))
}

pub(crate) fn check_markov(population: usize, size: usize, rho: f64) -> Result<usize> {
    if size == 0 || size > population {
        return Err(Error::InvalidSizes { population, sample: size });
    }
    if !population.is_multiple_of(size) {
        return Err(Error::NonMultiple { population, sample: size });
    }
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::InvalidRho(rho));
    }
    Ok(population / size)
}

/// Compromise Markov chain design over `n` strata of `p = N/n` units: the
/// offset inside each stratum is redrawn uniformly with probability `rho`
/// and kept otherwise.
pub fn compromise_markov(
    population: usize,
    size: usize,
    rho: f64,
    rng: &mut RandomSource,
) -> Result<Sample> {
    let p = check_markov(population, size, rho)?;
    let mut offset = rng.below(p);
    let mut units = Vec::with_capacity(size);
    for stratum in 0..size {
        if stratum > 0 && rng.bernoulli(rho) {
            offset = rng.below(p);
        }
        units.push(stratum * p + offset);
    }
    Ok(Sample::from_units(units))
}

pub fn randomized_pivotal(pv: &ProbabilityVector, rng: &mut RandomSource) -> Sample {
    let mut order: Vec<usize> = (0..pv.population_size()).collect();
    order.shuffle(rng);
    let shuffled = pv.permuted(&order).expect("a reordering keeps the integer total");
    let drawn = ordered_pivotal(&shuffled, rng);
    Sample::from_units(drawn.units().iter().map(|&r| order[r]).collect())
}

/// First-stage algorithm of a two-stage draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusterAlgorithm {
    Pivotal,
    DevilleSystematic,
}

/// Selects `n` clusters with masses `psi`, then one unit in each selected
/// cluster proportionally to `pi`.
pub fn two_stage(
    pv: &ProbabilityVector,
    algorithm: ClusterAlgorithm,
    rng: &mut RandomSource,
) -> Result<Sample> {
    let cp = build_clusters(&decompose(pv), pv);
    let psi = cp.psi_vector();
    let clusters = match algorithm {
        ClusterAlgorithm::Pivotal => ordered_pivotal(&psi, rng),
        ClusterAlgorithm::DevilleSystematic => deville_systematic(&psi, rng),
    };
    let mut units = Vec::with_capacity(clusters.len());
    for &j in clusters.units() {
        let members = within_cluster_distribution(&cp, j, pv)
            .map_err(|_| Error::PhantomSelected { cluster: j })?;
        let u = rng.uniform();
        let mut acc = 0.0;
        let mut chosen = members[members.len() - 1].0;
        for &(k, p) in &members {
            acc += p;
            if u < acc {
                chosen = k;
                break;
            }
        }
        units.push(chosen);
    }
    Ok(Sample::from_units(units))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strata::cumulate;
    use alloc::vec;

    const EIGHT: [f64; 8] = [0.2, 0.5, 0.3, 0.4, 0.9, 0.8, 0.5, 0.4];

    #[test]
    fn single_fight_probability() {
        let pv = cumulate(&[0.4, 0.6]).unwrap();
        let run = PivotalRun::new(&pv);
        match run.pending() {
            Some(Fight::Select { lambda }) => assert!((lambda - 0.4).abs() < 1e-15),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn exact_unit_mass_takes_the_selection_branch() {
        // V_3 = 1.0 exactly after snapping, so unit 3 triggers a selection
        let pv = cumulate(&EIGHT).unwrap();
        let mut run = PivotalRun::new(&pv);
        assert!(matches!(run.pending(), Some(Fight::Merge { .. })));
        run.resolve(true);
        assert!(matches!(run.pending(), Some(Fight::Select { .. })));
        run.resolve(false);
        // survivor now carries zero mass and always loses the next merge
        assert_eq!(run.pending(), Some(Fight::Merge { lambda: 0.0 }));
    }

    #[test]
    fn deville_first_step_lookup() {
        let pv = cumulate(&EIGHT).unwrap();
        assert_eq!(pv.locate(0.5), 1);
        // with b_1 = 0 the mixing weight vanishes
        let dec = decompose(&pv);
        assert_eq!(dec.chain_factor(0), 0.0);
    }

    #[test]
    fn systematic_start_at_one_half() {
        let pv = cumulate(&EIGHT).unwrap();
        assert_eq!(systematic_from_start(&pv, 0.5).units(), &[1, 4, 5, 6]);
        let eq = cumulate(&[0.25; 8]).unwrap();
        assert_eq!(systematic_from_start(&eq, 0.3).units(), &[1, 5]);
    }

    #[test]
    fn every_sampler_returns_n_distinct_units() {
        let pv = cumulate(&EIGHT).unwrap();
        let algorithms = [
            Algorithm::Pivotal,
            Algorithm::DevilleSystematic,
            Algorithm::Systematic,
            Algorithm::SimpleRandom,
            Algorithm::CompromiseMarkov(0.5),
            Algorithm::RandomizedPivotal,
        ];
        for algo in algorithms {
            for r in 0..500 {
                let mut rng = RandomSource::for_replicate(11, r);
                let s = algo.draw(&pv, &mut rng).unwrap();
                assert_eq!(s.len(), 4, "{algo:?}");
                assert!(s.units().windows(2).all(|w| w[0] < w[1]));
                assert!(s.units().iter().all(|&k| k < 8));
            }
        }
        for r in 0..500 {
            for alg in [ClusterAlgorithm::Pivotal, ClusterAlgorithm::DevilleSystematic] {
                let mut rng = RandomSource::for_replicate(5, r);
                assert_eq!(two_stage(&pv, alg, &mut rng).unwrap().len(), 4);
            }
        }
    }

    #[test]
    fn deville_never_takes_a_crossing_twice() {
        let pv = cumulate(&[0.3, 0.6, 0.7, 0.9, 0.5]).unwrap();
        for r in 0..2000 {
            let mut rng = RandomSource::for_replicate(3, r);
            assert_eq!(deville_systematic(&pv, &mut rng).len(), 3);
        }
    }

    #[test]
    fn full_population_srs() {
        let mut rng = RandomSource::new(0);
        assert_eq!(srs(5, 5, &mut rng).unwrap().units(), &[0, 1, 2, 3, 4]);
        assert!(srs(3, 4, &mut rng).is_err());
        assert!(srs(3, 0, &mut rng).is_err());
    }

    #[test]
    fn markov_extremes() {
        for r in 0..200 {
            let mut rng = RandomSource::for_replicate(9, r);
            let s = compromise_markov(12, 4, 0.0, &mut rng).unwrap();
            let off = s.units()[0];
            assert_eq!(s.units(), &[off, off + 3, off + 6, off + 9]);
        }
        let mut rng = RandomSource::new(0);
        assert_eq!(compromise_markov(10, 4, 0.5, &mut rng), Err(Error::NonMultiple { population: 10, sample: 4 }));
        assert_eq!(compromise_markov(8, 4, 1.5, &mut rng), Err(Error::InvalidRho(1.5)));
    }

    #[test]
    fn single_cluster_two_stage() {
        let pv = cumulate(&[0.5, 0.5]).unwrap();
        let mut ones = 0;
        for r in 0..1000 {
            let mut rng = RandomSource::for_replicate(2, r);
            let s = two_stage(&pv, ClusterAlgorithm::Pivotal, &mut rng).unwrap();
            assert_eq!(s.len(), 1);
            ones += s.units()[0];
        }
        assert!(ones > 400 && ones < 600);
    }

    #[test]
    fn sample_display_is_one_based() {
        let s = Sample::from_units(vec![4, 0, 2]);
        assert_eq!(alloc::format!("{s}"), "1 3 5");
    }
}
