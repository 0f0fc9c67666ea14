//! Oracle suites: every closed form is checked against an independent
//! computation, usually an exhaustively enumerated design.

use std::fmt;

use pivot_core::analytics::{
    delta_matrix, dmax_closed_form, eigen_dispersion, entropy, entropy_closed_form, ht_variance,
    kl_closed_form, kl_divergence, markov_deff, markov_pikl, srs_pikl, variance_closed_form,
    DesignKind, StudyVariable,
};
use pivot_core::design::{enumerate_deville, enumerate_design, enumerate_pivotal, enumerate_srs, trace_pivotal};
use pivot_core::inclusion::{cluster_marginals, design_pikl, pikl_matrix, transition_probabilities, PiklMatrix};
use pivot_core::strata::{build_clusters, cumulate, decompose};
use pivot_core::{Algorithm, ProbabilityVector, RandomSource, SamplingDesign, StrataDecomposition};

use crate::montecarlo::parallel_counts;
use crate::tables::{deff_table, round2, REFERENCE};

/// Agreement required between a closed form and an enumerated design.
pub const EXACT_TOL: f64 = 1e-12;
/// Row-sum identity of joint inclusion matrices.
pub const ROW_SUM_TOL: f64 = 1e-9;
/// Cluster masses of the eight-unit frame.
pub const SNAP_TOL: f64 = 1e-9;
/// Design effects against their two-decimal reference values.
pub const TABLE_TOL: f64 = 0.005;
/// Slack on the worst-case design effect.
pub const BOUND_TOL: f64 = 1e-9;
/// Eigenvalues of variance-covariance matrices.
pub const SPECTRUM_TOL: f64 = 1e-10;
/// Monte Carlo frequencies, in binomial standard errors of the exact value.
pub const MC_SIGMAS: f64 = 3.0;

pub const RANDOM_INSTANCES: usize = 200;
pub const CHAIN_INSTANCES: usize = 50;
pub const INSTANCE_SEED: u64 = 20_091;
pub const STUDY_VARIABLES: usize = 1000;
pub const VARIABLE_SEED: u64 = 7_919;
pub const MC_SEED: u64 = 1;
pub const MC_REPLICATES_FULL: u64 = 1_000_000;
pub const MC_REPLICATES_FAST: u64 = 100_000;

pub const EIGHT_UNITS: [f64; 8] = [0.2, 0.5, 0.3, 0.4, 0.9, 0.8, 0.5, 0.4];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Fast,
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(id: usize, name: &'static str, failures: Vec<String>, summary: String) -> Self {
        let passed = failures.is_empty();
        let detail = if passed {
            summary
        } else {
            let shown: Vec<&str> = failures.iter().take(3).map(String::as_str).collect();
            format!("{} failure(s): {}", failures.len(), shown.join("; "))
        };
        Check { id, name, passed, detail }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{verdict}] {}. {}: {}", self.id, self.name, self.detail)
    }
}

pub fn eight_unit_frame() -> ProbabilityVector {
    cumulate(&EIGHT_UNITS).expect("the eight masses add up to 4")
}

/// A frame of `population` units summing to an integer with every `pi` in
/// `(0, 1)`. With `grid` the masses are multiples of `0.1`, so running sums
/// often land on integers and produce empty and phantom clusters.
pub fn random_frame(rng: &mut RandomSource, population: usize, grid: bool) -> ProbabilityVector {
    loop {
        if grid {
            let mut tenths: Vec<u32> = (0..population).map(|_| 1 + rng.below(9) as u32).collect();
            let excess = tenths.iter().sum::<u32>() % 10;
            let last = tenths[population - 1];
            if excess >= last {
                continue;
            }
            tenths[population - 1] = last - excess;
            if tenths.iter().sum::<u32>() < 10 {
                continue;
            }
            let pi: Vec<f64> = tenths.iter().map(|&t| f64::from(t) / 10.0).collect();
            return cumulate(&pi).expect("tenths add up to an integer");
        }
        let size = 1 + rng.below(population - 1);
        let weights: Vec<f64> = (0..population).map(|_| rng.uniform_between(0.05, 1.0)).collect();
        let total: f64 = weights.iter().sum();
        let pi: Vec<f64> = weights.iter().map(|w| w * size as f64 / total).collect();
        if pi.iter().all(|&p| p < 0.999) {
            if let Ok(pv) = cumulate(&pi) {
                return pv;
            }
        }
    }
}

/// The eight-unit frame followed by `count` random frames of 4 to 10
/// units, every third one on the tenths grid.
pub fn instances(count: usize, seed: u64) -> Vec<ProbabilityVector> {
    let mut rng = RandomSource::new(seed);
    let mut out = Vec::with_capacity(count + 1);
    out.push(eight_unit_frame());
    for i in 0..count {
        let population = 4 + rng.below(7);
        out.push(random_frame(&mut rng, population, i % 3 == 0));
    }
    out
}

/// `x < tol`, false for NaN.
fn below(x: f64, tol: f64) -> bool {
    x < tol
}

fn show(pv: &ProbabilityVector) -> String {
    format!("{:?}", pv.pi())
}

pub fn check_clusters() -> Check {
    const NAME: &str = "cluster decomposition of the eight-unit frame";
    // one-based members and masses of the seven clusters
    let expected: [(&[usize], f64); 7] = [
        (&[1, 2], 0.7),
        (&[3], 0.3),
        (&[4], 0.4),
        (&[5], 0.9),
        (&[], 0.0),
        (&[6], 0.8),
        (&[7, 8], 0.9),
    ];
    let pv = eight_unit_frame();
    let cp = build_clusters(&decompose(&pv), &pv);
    let mut failures = Vec::new();
    if cp.len() != expected.len() {
        failures.push(format!("{} clusters", cp.len()));
    }
    for (i, ((members, phi), range)) in expected.iter().zip(cp.clusters()).enumerate() {
        let got: Vec<usize> = range.clone().map(|k| k + 1).collect();
        if got != *members {
            failures.push(format!("u_{} = {got:?}", i + 1));
        }
        if (cp.psi()[i] - phi).abs() > SNAP_TOL {
            failures.push(format!("phi_{} = {}", i + 1, cp.psi()[i]));
        }
    }
    let phis: Vec<String> = cp.psi().iter().map(|p| format!("{p:.1}")).collect();
    Check::new(1, NAME, failures, format!("phi = ({})", phis.join(", ")))
}

pub fn check_equivalence(frames: &[ProbabilityVector]) -> Check {
    const NAME: &str = "pivotal and Deville systematic designs coincide";
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for pv in frames {
        match (enumerate_pivotal(pv), enumerate_deville(pv)) {
            (Ok(a), Ok(b)) => {
                let tv = a.total_variation(&b);
                worst = worst.max(tv);
                if !below(tv, EXACT_TOL) {
                    failures.push(format!("tv {tv:.3e} on {}", show(pv)));
                }
            }
            (Err(e), _) | (_, Err(e)) => failures.push(format!("{e} on {}", show(pv))),
        }
    }
    Check::new(2, NAME, failures, format!("{} frames, max tv {worst:.2e}", frames.len()))
}

/// Compares `formula` with the enumerated pivotal design on every frame.
pub fn check_joint_inclusion<F>(frames: &[ProbabilityVector], formula: F) -> Check
where
    F: Fn(&StrataDecomposition, &ProbabilityVector) -> pivot_core::Result<PiklMatrix>,
{
    const NAME: &str = "joint inclusion probabilities match enumeration";
    let mut failures = Vec::new();
    let (mut worst, mut worst_rows) = (0.0f64, 0.0f64);
    for pv in frames {
        let dec = decompose(pv);
        let m = match formula(&dec, pv) {
            Ok(m) => m,
            Err(e) => {
                failures.push(format!("{e} on {}", show(pv)));
                continue;
            }
        };
        let exact = match enumerate_pivotal(pv) {
            Ok(d) => design_pikl(&d),
            Err(e) => {
                failures.push(format!("{e} on {}", show(pv)));
                continue;
            }
        };
        let diff = m.max_abs_diff(&exact);
        let rows = m.row_sum_residual(pv.sample_size()).max(exact.row_sum_residual(pv.sample_size()));
        worst = worst.max(diff);
        worst_rows = worst_rows.max(rows);
        if !below(diff, EXACT_TOL) {
            failures.push(format!("max diff {diff:.3e} on {}", show(pv)));
        }
        if !below(rows, ROW_SUM_TOL) {
            failures.push(format!("row sums off by {rows:.3e} on {}", show(pv)));
        }
    }
    Check::new(
        3,
        NAME,
        failures,
        format!("{} frames, max diff {worst:.2e}, max row-sum residual {worst_rows:.2e}", frames.len()),
    )
}

/// `pr(Y_i = u, Y_{i+1} = v)` and `pr(Y_i = u)` where `Y_i` is the cluster
/// of the `i`-th smallest selected unit.
fn cluster_chain(design: &SamplingDesign, cluster_of: impl Fn(usize) -> usize, clusters: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = design.sample_size();
    let mut pair = vec![vec![0.0; clusters * clusters]; n];
    let mut single = vec![vec![0.0; clusters]; n];
    for (s, q) in design.support() {
        let path: Vec<usize> = s.units().iter().map(|&k| cluster_of(k)).collect();
        for i in 0..n {
            single[i][path[i]] += q;
            if i + 1 < n {
                pair[i][path[i] * clusters + path[i + 1]] += q;
            }
        }
    }
    (pair, single)
}

fn chain_failures(pv: &ProbabilityVector, failures: &mut Vec<String>, worst: &mut f64) -> pivot_core::Result<()> {
    let dec = decompose(pv);
    let cp = build_clusters(&dec, pv);
    let n = pv.sample_size();
    let c = cp.len();
    for design in [enumerate_pivotal(pv)?, enumerate_deville(pv)?] {
        let (pair, single) = cluster_chain(&design, |k| cp.cluster_of(k), c);
        for step in 0..n.saturating_sub(1) {
            for state in 0..c {
                let mass = single[step][state];
                match transition_probabilities(&dec, step, state) {
                    Ok(row) => {
                        if mass <= 0.0 {
                            failures.push(format!("feasible state {state} unreached at step {step} on {}", show(pv)));
                            continue;
                        }
                        let mut expected = vec![0.0; c];
                        for (target, p) in row {
                            expected[target] = p;
                        }
                        for target in 0..c {
                            let d = (pair[step][state * c + target] / mass - expected[target]).abs();
                            *worst = worst.max(d);
                            if !below(d, EXACT_TOL) {
                                failures.push(format!("step {step} {state}->{target} off by {d:.3e} on {}", show(pv)));
                            }
                        }
                    }
                    Err(_) if mass > EXACT_TOL => {
                        failures.push(format!("infeasible state {state} at step {step} has mass {mass} on {}", show(pv)));
                    }
                    Err(_) => {}
                }
            }
        }
    }

    let (mut winner, mut jumper, mut selected) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    trace_pivotal(&cp.psi_vector(), |w, j, p| {
        let mut sorted = w.to_vec();
        sorted.sort_unstable();
        for i in 0..n {
            if w[i] == 2 * i {
                winner[i] += p;
            }
            if j.get(i) == Some(&(2 * i)) {
                jumper[i] += p;
            }
            if sorted[i] == 2 * i {
                selected[i] += p;
            }
        }
    })?;
    for i in 0..n {
        let m = cluster_marginals(&dec, i)?;
        for (what, closed, observed) in
            [("W", m.winner, winner[i]), ("J", m.jumper, jumper[i]), ("X", m.selected, selected[i])]
        {
            let d = (closed - observed).abs();
            *worst = worst.max(d);
            if !below(d, EXACT_TOL) {
                failures.push(format!("pr({what}_{}) off by {d:.3e} on {}", i + 1, show(pv)));
            }
        }
    }
    Ok(())
}

pub fn check_transitions(frames: &[ProbabilityVector]) -> Check {
    const NAME: &str = "cluster transitions and marginals match enumeration";
    let mut failures = Vec::new();
    let mut worst = 0.0;
    for pv in frames {
        if let Err(e) = chain_failures(pv, &mut failures, &mut worst) {
            failures.push(format!("{e} on {}", show(pv)));
        }
    }
    Check::new(4, NAME, failures, format!("{} frames, max diff {worst:.2e}", frames.len()))
}

pub fn check_table() -> Check {
    const NAME: &str = "design-effect table";
    let rows = match deff_table() {
        Ok(rows) => rows,
        Err(e) => return Check::new(5, NAME, vec![e.to_string()], String::new()),
    };
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for (row, reference) in rows.iter().zip(REFERENCE) {
        for (j, (&v, p)) in row.values.iter().zip(reference).enumerate() {
            worst = worst.max((v - p).abs());
            if (v - p).abs() > TABLE_TOL || round2(v) != p {
                failures.push(format!("{} column {}: {v:.4} vs {p:.2}", row.strategy, j + 1));
            }
        }
    }
    Check::new(5, NAME, failures, format!("30 cells, max deviation {worst:.4}"))
}

fn entropy_failures(population: usize, size: usize, failures: &mut Vec<String>, worst: &mut f64) -> pivot_core::Result<()> {
    use DesignKind::*;
    let pv = cumulate(&vec![size as f64 / population as f64; population])?;
    let srs = enumerate_srs(population, size)?;
    let sys = enumerate_design(Algorithm::Systematic, &pv)?;
    let ops = enumerate_design(Algorithm::Pivotal, &pv)?;
    let mut compare = |what: String, closed: f64, enumerated: f64| {
        let d = (closed - enumerated).abs();
        *worst = worst.max(d);
        if !below(d, EXACT_TOL) {
            failures.push(format!("{what} at N={population}, n={size}: {closed} vs {enumerated}"));
        }
    };
    for (kind, design) in [(SimpleRandom, &srs), (Systematic, &sys), (Pivotal, &ops)] {
        compare(format!("H({})", kind.tag()), entropy_closed_form(kind, population, size)?, entropy(design));
    }
    for (q, r, dq, dr) in [
        (Systematic, SimpleRandom, &sys, &srs),
        (Pivotal, SimpleRandom, &ops, &srs),
        (Systematic, Pivotal, &sys, &ops),
    ] {
        compare(
            format!("D({}||{})", q.tag(), r.tag()),
            kl_closed_form(q, r, population, size)?,
            kl_divergence(dq, dr)?,
        );
    }
    Ok(())
}

pub fn check_entropy() -> Check {
    const NAME: &str = "entropy and divergence closed forms";
    let mut failures = Vec::new();
    let mut worst = 0.0;
    for (population, size) in [(4, 2), (6, 2), (6, 3), (12, 4)] {
        if let Err(e) = entropy_failures(population, size, &mut failures, &mut worst) {
            failures.push(format!("{e} at N={population}, n={size}"));
        }
    }
    Check::new(6, NAME, failures, format!("4 size pairs, max diff {worst:.2e}"))
}

fn bound_failures(variables: usize, seed: u64, failures: &mut Vec<String>, summary: &mut Vec<String>) -> pivot_core::Result<()> {
    const POPULATION: usize = 12;
    for size in [2, 4] {
        let pv = cumulate(&[size as f64 / POPULATION as f64; POPULATION])?;
        let ops = delta_matrix(&markov_pikl(POPULATION, size, 1.0)?);
        let sys = delta_matrix(&markov_pikl(POPULATION, size, 0.0)?);
        let ops_bound = dmax_closed_form(DesignKind::Pivotal, POPULATION, size)?;
        let sys_bound = dmax_closed_form(DesignKind::Systematic, POPULATION, size)?;
        let (mut ops_max, mut sys_max) = (0.0f64, 0.0f64);
        for v in 0..variables as u64 {
            let mut rng = RandomSource::for_replicate(seed, v);
            let y = StudyVariable::new((0..POPULATION).map(|_| rng.uniform_between(0.0, 100.0)).collect());
            let base = variance_closed_form(DesignKind::SimpleRandom, &y, size)?;
            let d_ops = ht_variance(&ops, &pv, &y)? / base;
            let d_sys = ht_variance(&sys, &pv, &y)? / base;
            ops_max = ops_max.max(d_ops);
            sys_max = sys_max.max(d_sys);
        }
        if ops_max > ops_bound + BOUND_TOL {
            failures.push(format!("n={size}: ops reaches {ops_max} above {ops_bound}"));
        }
        if sys_max > sys_bound + BOUND_TOL {
            failures.push(format!("n={size}: sys reaches {sys_max} above {sys_bound}"));
        }
        // identical strata: every stratum mean equals the population mean
        let p = POPULATION / size;
        let flat = StudyVariable::new((0..POPULATION).map(|k| (k % p) as f64 * 10.0 + 5.0).collect());
        let attained = markov_deff(&flat, size, 1.0)?;
        if (attained - ops_bound).abs() > BOUND_TOL {
            failures.push(format!("n={size}: equal stratum means give {attained}, bound {ops_bound}"));
        }
        summary.push(format!("n={size}: ops {ops_max:.3}/{ops_bound:.3}, sys {sys_max:.3}/{sys_bound:.3}"));
    }
    Ok(())
}

pub fn check_design_effect_bounds(variables: usize, seed: u64) -> Check {
    const NAME: &str = "worst-case design effects";
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    if let Err(e) = bound_failures(variables, seed, &mut failures, &mut summary) {
        failures.push(e.to_string());
    }
    Check::new(7, NAME, failures, format!("{variables} variables; {}", summary.join("; ")))
}

fn spectrum_failures(size: usize, p: usize, failures: &mut Vec<String>) -> pivot_core::Result<()> {
    let population = size * p;
    let mut deltas = Vec::with_capacity(3);
    for (tag, pm, plus) in [
        ("srs", srs_pikl(population, size)?, None),
        ("ops", markov_pikl(population, size, 1.0)?, Some(1.0 / p as f64)),
        ("sys", markov_pikl(population, size, 0.0)?, Some(size as f64 / p as f64)),
    ] {
        let ed = eigen_dispersion(&delta_matrix(&pm));
        let groups = ed.distinct(SPECTRUM_TOL);
        let expected = plus.unwrap_or(population as f64 * ed.mean / (population - 1) as f64);
        let ok = groups.len() == 2 && groups[0].0.abs() < SPECTRUM_TOL && (groups[1].0 - expected).abs() < SPECTRUM_TOL;
        if !ok {
            failures.push(format!("{tag} at n={size}, p={p}: spectrum {groups:?}, expected {{0, {expected}}}"));
        }
        deltas.push(ed.delta);
    }
    if !(deltas[0] <= deltas[1] && deltas[1] <= deltas[2]) {
        failures.push(format!("n={size}, p={p}: delta order {deltas:?}"));
    }
    Ok(())
}

pub fn check_spectra() -> Check {
    const NAME: &str = "eigenvalue spectra and dispersion order";
    let mut failures = Vec::new();
    for size in 2..=4 {
        for p in 2..=4 {
            if let Err(e) = spectrum_failures(size, p, &mut failures) {
                failures.push(e.to_string());
            }
        }
    }
    Check::new(8, NAME, failures, "9 (n, p) pairs, srs <= ops <= sys".to_string())
}

fn monte_carlo_failures(replicates: u64, seed: u64, failures: &mut Vec<String>, worst: &mut f64) -> crate::error::Result<()> {
    let pv = eight_unit_frame();
    let size = pv.population_size();
    for algorithm in [Algorithm::Pivotal, Algorithm::DevilleSystematic] {
        let exact = design_pikl(&enumerate_design(algorithm, &pv)?);
        let counts = parallel_counts(algorithm, &pv, replicates, seed)?;
        let r = replicates as f64;
        for k in 0..size {
            for l in k..size {
                let p = exact.get(k, l);
                let c = counts.count(k, l);
                let se = (p * (1.0 - p) / r).sqrt();
                let deviation = (c as f64 / r - p).abs();
                let tag = algorithm.tag();
                if se == 0.0 {
                    if deviation != 0.0 {
                        failures.push(format!("{tag} ({},{}) has {c} hits on a probability {p}", k + 1, l + 1));
                    }
                    continue;
                }
                let z = deviation / se;
                *worst = worst.max(z);
                if z > MC_SIGMAS {
                    failures.push(format!("{tag} ({},{}) at {z:.2} standard errors", k + 1, l + 1));
                }
            }
        }
        // a second run and a different split of the work reproduce the tally
        let short = replicates.min(50_000);
        let a = parallel_counts(algorithm, &pv, short, seed)?;
        let b = pivot_core::inclusion::tally_replicates(algorithm, &pv, seed, 0..short)?;
        if a != b || a != parallel_counts(algorithm, &pv, short, seed)? {
            failures.push(format!("{} tally depends on scheduling", algorithm.tag()));
        }
    }
    Ok(())
}

pub fn check_monte_carlo(replicates: u64, seed: u64) -> Check {
    const NAME: &str = "Monte Carlo inclusion frequencies";
    let mut failures = Vec::new();
    let mut worst = 0.0;
    if let Err(e) = monte_carlo_failures(replicates, seed, &mut failures, &mut worst) {
        failures.push(e.to_string());
    }
    Check::new(9, NAME, failures, format!("R = {replicates}, worst {worst:.2} standard errors"))
}

pub fn run(level: Level) -> Vec<Check> {
    let frames = instances(RANDOM_INSTANCES, INSTANCE_SEED);
    let replicates = match level {
        Level::Fast => MC_REPLICATES_FAST,
        Level::Full => MC_REPLICATES_FULL,
    };
    vec![
        check_clusters(),
        check_equivalence(&frames),
        check_joint_inclusion(&frames, pikl_matrix),
        check_transitions(&frames[..=CHAIN_INSTANCES]),
        check_table(),
        check_entropy(),
        check_design_effect_bounds(STUDY_VARIABLES, VARIABLE_SEED),
        check_spectra(),
        check_monte_carlo(replicates, MC_SEED),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frames_are_reproducible() {
        let a = instances(10, 5);
        let b = instances(10, 5);
        assert_eq!(a.len(), 11);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.pi(), y.pi());
        }
    }

    #[test]
    fn a_tampered_formula_is_caught() {
        let frames = instances(5, 3);
        let tampered = |dec: &StrataDecomposition, pv: &ProbabilityVector| {
            let m = pikl_matrix(dec, pv)?;
            let mut raw = m.matrix().clone();
            raw.set_sym(0, 2, raw.get(0, 2) + 1e-9);
            Ok(PiklMatrix::from_matrix(raw))
        };
        assert!(!check_joint_inclusion(&frames, tampered).passed);
        assert!(check_joint_inclusion(&frames, pikl_matrix).passed);
    }
}
