//! Exact sampling designs by exhaustive enumeration.
//!
//! Each enumerator walks every random branch of its algorithm and
//! multiplies branch probabilities, so the resulting distribution over
//! samples is exact up to floating-point rounding. Probabilities of a
//! sample reached along several paths are accumulated with compensated
//! summation.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::math::{kahan, KahanSum};
use crate::samplers::{check_markov, systematic_from_start, Algorithm, PivotalRun, Sample};
use crate::strata::{decompose, ProbabilityVector};
use crate::{Error, Result};

/// Largest number of branches an enumeration may visit.
pub const ENUMERATION_LIMIT: f64 = 1e7;

/// Largest population for which randomized pivotal sampling is enumerated
/// over every ordering.
pub const RANDOMIZED_LIMIT: usize = 8;

/// An explicit probability distribution over fixed-size samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingDesign {
    population: usize,
    size: usize,
    support: Vec<(Sample, f64)>,
}

impl SamplingDesign {
    /// Builds a design from `(sample, probability)` pairs, merging repeats.
    /// Probabilities must be non-negative and add up to one within `1e-12`.
    pub fn from_support<I>(population: usize, size: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Sample, f64)>,
    {
        let mut acc = Accumulator::default();
        for (s, p) in entries {
            if s.len() != size || s.units().iter().any(|&k| k >= population) {
                return Err(Error::InvalidSizes { population, sample: s.len() });
            }
            if p.is_nan() || p < 0.0 {
                return Err(Error::InvalidProbability { unit: 0, value: p });
            }
            acc.add(s.into_units(), p);
        }
        acc.finish(population, size)
    }

    pub fn population_size(&self) -> usize {
        self.population
    }

    pub fn sample_size(&self) -> usize {
        self.size
    }

    /// Samples with positive probability, in lexicographic order.
    pub fn support(&self) -> &[(Sample, f64)] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn probability(&self, sample: &Sample) -> f64 {
        self.support
            .binary_search_by(|(s, _)| s.cmp(sample))
            .map(|i| self.support[i].1)
            .unwrap_or(0.0)
    }

    /// First-order inclusion probabilities implied by the design.
    pub fn marginals(&self) -> Vec<f64> {
        let mut acc = vec![KahanSum::default(); self.population];
        for (s, p) in &self.support {
            for &k in s.units() {
                acc[k].add(*p);
            }
        }
        acc.iter().map(KahanSum::value).collect()
    }

    /// `sum_s |q(s) - r(s)| / 2` over the union of both supports.
    pub fn total_variation(&self, other: &SamplingDesign) -> f64 {
        let (a, b) = (&self.support, &other.support);
        let (mut i, mut j) = (0, 0);
        let mut diffs = Vec::with_capacity(a.len().max(b.len()));
        while i < a.len() || j < b.len() {
            let ord = match (a.get(i), b.get(j)) {
                (Some(x), Some(y)) => x.0.cmp(&y.0),
                (Some(_), None) => core::cmp::Ordering::Less,
                _ => core::cmp::Ordering::Greater,
            };
            match ord {
                core::cmp::Ordering::Less => {
                    diffs.push(a[i].1);
                    i += 1;
                }
                core::cmp::Ordering::Greater => {
                    diffs.push(b[j].1);
                    j += 1;
                }
                core::cmp::Ordering::Equal => {
                    diffs.push((a[i].1 - b[j].1).abs());
                    i += 1;
                    j += 1;
                }
            }
        }
        0.5 * kahan(diffs)
    }
}

#[derive(Default)]
struct Accumulator {
    mass: BTreeMap<Vec<usize>, KahanSum>,
}

impl Accumulator {
    fn add(&mut self, mut units: Vec<usize>, p: f64) {
        if p == 0.0 {
            return;
        }
        units.sort_unstable();
        self.mass.entry(units).or_default().add(p);
    }

    fn finish(self, population: usize, size: usize) -> Result<SamplingDesign> {
        let support: Vec<(Sample, f64)> = self
            .mass
            .into_iter()
            .map(|(units, p)| (Sample::from_units(units), p.value()))
            .filter(|(_, p)| *p > 0.0)
            .collect();
        let total = kahan(support.iter().map(|(_, p)| *p));
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::NonIntegerSampleSize { total });
        }
        Ok(SamplingDesign { population, size, support })
    }
}

fn guard(estimate: f64) -> Result<()> {
    if estimate > ENUMERATION_LIMIT {
        Err(Error::TooLarge { estimate, limit: ENUMERATION_LIMIT })
    } else {
        Ok(())
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Exact design of `algorithm` on the frame `pv`. Simple random sampling
/// and compromise Markov designs only use the sizes of `pv`.
pub fn enumerate_design(algorithm: Algorithm, pv: &ProbabilityVector) -> Result<SamplingDesign> {
    let (population, size) = (pv.population_size(), pv.sample_size());
    match algorithm {
        Algorithm::Pivotal => enumerate_pivotal(pv),
        Algorithm::DevilleSystematic => enumerate_deville(pv),
        Algorithm::Systematic => enumerate_systematic(pv),
        Algorithm::SimpleRandom => enumerate_srs(population, size),
        Algorithm::CompromiseMarkov(rho) => enumerate_markov(population, size, rho),
        Algorithm::RandomizedPivotal => enumerate_randomized_pivotal(pv),
    }
}

/// Visits every leaf of the pivotal decision tree with the winners in
/// selection order, the jumpers `J_1..J_{n-1}` and the path probability.
pub fn trace_pivotal<F>(pv: &ProbabilityVector, mut visit: F) -> Result<()>
where
    F: FnMut(&[usize], &[usize], f64),
{
    guard(libm::exp2((pv.population_size() - 1) as f64))?;
    fn walk<F: FnMut(&[usize], &[usize], f64)>(run: PivotalRun<'_>, prob: f64, visit: &mut F) {
        match run.pending() {
            None => {
                let (winners, jumpers) = run.finish();
                visit(&winners, &jumpers, prob);
            }
            Some(fight) => {
                let lambda = fight.lambda();
                if lambda < 1.0 {
                    let mut other = run.clone();
                    other.resolve(false);
                    walk(other, prob * (1.0 - lambda), visit);
                }
                if lambda > 0.0 {
                    let mut run = run;
                    run.resolve(true);
                    walk(run, prob * lambda, visit);
                }
            }
        }
    }
    walk(PivotalRun::new(pv), 1.0, &mut visit);
    Ok(())
}

/// Ordered pivotal sampling, by depth-first traversal of its fights.
pub fn enumerate_pivotal(pv: &ProbabilityVector) -> Result<SamplingDesign> {
    let mut acc = Accumulator::default();
    trace_pivotal(pv, |winners, _, p| acc.add(winners.to_vec(), p))?;
    acc.finish(pv.population_size(), pv.sample_size())
}

/// Deville's systematic sampling, chaining the exact probability of each
/// unit under the step-wise mixture of uniforms.
pub fn enumerate_deville(pv: &ProbabilityVector) -> Result<SamplingDesign> {
    let dec = decompose(pv);
    let estimate: f64 = dec.strata().iter().map(|r| r.len() as f64).product();
    guard(estimate)?;
    let v = pv.cumulative();
    let n = pv.sample_size();

    struct Walk<'a> {
        dec: &'a crate::strata::StrataDecomposition,
        v: &'a [f64],
        n: usize,
        acc: Accumulator,
        path: Vec<usize>,
    }

    impl Walk<'_> {
        fn step(&mut self, step: usize, took_crossing: bool, prob: f64) {
            if step == self.n {
                self.acc.add(self.path.clone(), prob);
                return;
            }
            // (weight, lo, hi) components of the law of w_step
            let mut parts: Vec<(f64, f64, f64)> = Vec::with_capacity(2);
            if step == 0 {
                parts.push((1.0, 0.0, 1.0));
            } else {
                let b = self.dec.exit()[step - 1];
                if took_crossing {
                    parts.push((1.0, b, 1.0));
                } else {
                    let c = self.dec.chain_factor(step - 1);
                    if c > 0.0 && b > 0.0 {
                        parts.push((c, 0.0, b));
                    }
                    if c < 1.0 {
                        parts.push((1.0 - c, 0.0, 1.0));
                    }
                }
            }
            let offset = step as f64;
            for k in self.dec.strata()[step].clone() {
                let (seg_lo, seg_hi) = (self.v[k] - offset, self.v[k + 1] - offset);
                let p: f64 = parts
                    .iter()
                    .map(|&(weight, lo, hi)| {
                        let overlap = seg_hi.min(hi) - seg_lo.max(lo);
                        if overlap > 0.0 {
                            weight * overlap / (hi - lo)
                        } else {
                            0.0
                        }
                    })
                    .sum();
                if p > 0.0 {
                    let took = step + 1 < self.n && k == self.dec.cross_border()[step];
                    self.path.push(k);
                    self.step(step + 1, took, prob * p);
                    self.path.pop();
                }
            }
        }
    }

    let mut walk = Walk { dec: &dec, v, n, acc: Accumulator::default(), path: Vec::with_capacity(n) };
    walk.step(0, false, 1.0);
    walk.acc.finish(pv.population_size(), n)
}

/// Classical systematic sampling: the start `u` is partitioned at the
/// fractional parts of the running sums, each piece giving one sample.
pub fn enumerate_systematic(pv: &ProbabilityVector) -> Result<SamplingDesign> {
    let mut cuts: Vec<f64> = pv.cumulative().iter().map(|&x| x - libm::floor(x)).collect();
    cuts.push(1.0);
    cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite running sums"));
    cuts.dedup();
    let mut acc = Accumulator::default();
    for w in cuts.windows(2) {
        let width = w[1] - w[0];
        if width > 0.0 {
            let s = systematic_from_start(pv, 0.5 * (w[0] + w[1]));
            acc.add(s.into_units(), width);
        }
    }
    acc.finish(pv.population_size(), pv.sample_size())
}

pub fn enumerate_srs(population: usize, size: usize) -> Result<SamplingDesign> {
    if size == 0 || size > population {
        return Err(Error::InvalidSizes { population, sample: size });
    }
    let count = binomial(population, size);
    guard(count)?;
    let p = 1.0 / count;
    let mut support = Vec::with_capacity(count as usize);
    let mut current: Vec<usize> = (0..size).collect();
    loop {
        support.push((Sample::from_units(current.clone()), p));
        // next combination in lexicographic order
        let mut i = size;
        while i > 0 && current[i - 1] == population - size + i - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        current[i - 1] += 1;
        for j in i..size {
            current[j] = current[j - 1] + 1;
        }
    }
    Ok(SamplingDesign { population, size, support })
}

/// Compromise Markov chain design, summing over all offset paths.
pub fn enumerate_markov(population: usize, size: usize, rho: f64) -> Result<SamplingDesign> {
    let p = check_markov(population, size, rho)?;
    guard(libm::pow(p as f64, size as f64))?;
    let stay = rho / p as f64 + (1.0 - rho);
    let jump = rho / p as f64;
    let mut acc = Accumulator::default();
    let mut path = Vec::with_capacity(size);
    fn walk(
        acc: &mut Accumulator,
        path: &mut Vec<usize>,
        p: usize,
        size: usize,
        prev: usize,
        prob: f64,
        moves: (f64, f64),
    ) {
        let stratum = path.len();
        if stratum == size {
            acc.add(path.clone(), prob);
            return;
        }
        for r in 0..p {
            let step = if r == prev { moves.0 } else { moves.1 };
            if step > 0.0 {
                path.push(stratum * p + r);
                walk(acc, path, p, size, r, prob * step, moves);
                path.pop();
            }
        }
    }
    for r in 0..p {
        path.push(r);
        walk(&mut acc, &mut path, p, size, r, 1.0 / p as f64, (stay, jump));
        path.pop();
    }
    acc.finish(population, size)
}

/// Randomized pivotal sampling: the ordered pivotal design averaged over
/// all `N!` orderings of the frame.
pub fn enumerate_randomized_pivotal(pv: &ProbabilityVector) -> Result<SamplingDesign> {
    let population = pv.population_size();
    if population > RANDOMIZED_LIMIT {
        let estimate = (1..=population).map(|k| k as f64).product::<f64>()
            * libm::exp2((population - 1) as f64);
        return Err(Error::TooLarge { estimate, limit: ENUMERATION_LIMIT });
    }
    let orderings: f64 = (1..=population).map(|k| k as f64).product();
    let weight = 1.0 / orderings;
    let mut acc = Accumulator::default();
    let mut order: Vec<usize> = (0..population).collect();
    let mut result = Ok(());
    heap_permutations(&mut order, population, &mut |order| {
        if result.is_err() {
            return;
        }
        let shuffled = match pv.permuted(order) {
            Ok(s) => s,
            Err(e) => {
                result = Err(e);
                return;
            }
        };
        result = trace_pivotal(&shuffled, |winners, _, p| {
            acc.add(winners.iter().map(|&r| order[r]).collect(), p * weight)
        });
    });
    result?;
    acc.finish(population, pv.sample_size())
}

fn heap_permutations<F: FnMut(&[usize])>(items: &mut [usize], k: usize, visit: &mut F) {
    if k <= 1 {
        visit(items);
        return;
    }
    heap_permutations(items, k - 1, visit);
    for i in 0..k - 1 {
        if k.is_multiple_of(2) {
            items.swap(i, k - 1);
        } else {
            items.swap(0, k - 1);
        }
        heap_permutations(items, k - 1, visit);
    }
}
