//! Equal-probability comparisons between simple random, systematic,
//! pivotal and compromise Markov designs.

use pivot_core::analytics::{
    delta_matrix, design_variance, dmax_closed_form, eigen_dispersion, entropy,
    entropy_closed_form, ht_variance, kl_closed_form, kl_divergence, markov_deff, markov_pikl,
    srs_pikl, variance_closed_form, DesignKind, StudyVariable,
};
use pivot_core::design::{enumerate_design, enumerate_markov, enumerate_srs};
use pivot_core::inclusion::{design_pikl, pikl_matrix};
use pivot_core::strata::{cumulate, decompose};
use pivot_core::{Algorithm, ProbabilityVector, RandomSource};

fn equal(population: usize, size: usize) -> ProbabilityVector {
    cumulate(&vec![size as f64 / population as f64; population]).unwrap()
}

#[test]
fn entropy_and_divergence_closed_forms() {
    use DesignKind::*;
    for (population, size) in [(4, 2), (6, 2), (6, 3), (12, 4)] {
        let pv = equal(population, size);
        let srs = enumerate_srs(population, size).unwrap();
        let sys = enumerate_design(Algorithm::Systematic, &pv).unwrap();
        let ops = enumerate_design(Algorithm::Pivotal, &pv).unwrap();
        for (kind, d) in [(SimpleRandom, &srs), (Systematic, &sys), (Pivotal, &ops)] {
            let h = entropy_closed_form(kind, population, size).unwrap();
            assert!((h - entropy(d)).abs() < 1e-12);
        }
        for (q, r, dq, dr) in [(Systematic, SimpleRandom, &sys, &srs), (Pivotal, SimpleRandom, &ops, &srs), (Systematic, Pivotal, &sys, &ops)] {
            let closed = kl_closed_form(q, r, population, size).unwrap();
            assert!((closed - kl_divergence(dq, dr).unwrap()).abs() < 1e-12);
        }
    }
}

#[test]
fn markov_matrix_matches_enumeration() {
    for rho in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let exact = design_pikl(&enumerate_markov(12, 4, rho).unwrap());
        assert!(markov_pikl(12, 4, rho).unwrap().max_abs_diff(&exact) < 1e-12);
    }
    let pv = equal(12, 4);
    let ops = pikl_matrix(&decompose(&pv), &pv).unwrap();
    assert!(markov_pikl(12, 4, 1.0).unwrap().max_abs_diff(&ops) < 1e-15);
}

#[test]
fn design_effects_stay_below_their_bounds() {
    let mut rng = RandomSource::new(2024);
    for size in [2, 4] {
        let pv = equal(12, size);
        let ops_dm = delta_matrix(&markov_pikl(12, size, 1.0).unwrap());
        let sys_dm = delta_matrix(&markov_pikl(12, size, 0.0).unwrap());
        let ops_bound = dmax_closed_form(DesignKind::Pivotal, 12, size).unwrap();
        let sys_bound = dmax_closed_form(DesignKind::Systematic, 12, size).unwrap();
        for _ in 0..200 {
            let y = StudyVariable::new((0..12).map(|_| rng.uniform_between(-10.0, 10.0)).collect());
            let base = variance_closed_form(DesignKind::SimpleRandom, &y, size).unwrap();
            assert!(ht_variance(&ops_dm, &pv, &y).unwrap() / base <= ops_bound + 1e-9);
            assert!(ht_variance(&sys_dm, &pv, &y).unwrap() / base <= sys_bound + 1e-9);
        }
        // equal stratum means: all variation lies inside the strata
        let p = 12 / size;
        let y = StudyVariable::new((0..12).map(|k| (k % p) as f64).collect());
        let d = markov_deff(&y, size, 1.0).unwrap();
        assert!((d - ops_bound).abs() < 1e-9);
    }
}

#[test]
fn spectra_have_two_values() {
    for n in 2..=4 {
        for p in 2..=4 {
            let big = n * p;
            let mut deltas = Vec::new();
            for (pm, plus) in [
                (srs_pikl(big, n).unwrap(), None),
                (markov_pikl(big, n, 1.0).unwrap(), Some(1.0 / p as f64)),
                (markov_pikl(big, n, 0.0).unwrap(), Some(n as f64 / p as f64)),
            ] {
                let ed = eigen_dispersion(&delta_matrix(&pm));
                let groups = ed.distinct(1e-10);
                assert_eq!(groups.len(), 2, "n={n} p={p} {:?}", ed.eigenvalues);
                assert!(groups[0].0.abs() < 1e-10);
                let expected = plus.unwrap_or(big as f64 * ed.mean / (big - 1) as f64);
                assert!((groups[1].0 - expected).abs() < 1e-10);
                assert!((ed.mean - (p - 1) as f64 / (p * p) as f64).abs() < 1e-12);
                deltas.push(ed.delta);
            }
            assert!(deltas[0] <= deltas[1] + 1e-15 && deltas[1] <= deltas[2] + 1e-15);
        }
    }
}

#[test]
fn closed_form_variances_match_direct_expectations() {
    let y = StudyVariable::new((0..12).map(|k| ((k * 7) % 5) as f64 + 0.5 * k as f64).collect());
    let pv = equal(12, 4);
    let cases = [
        (DesignKind::SimpleRandom, enumerate_srs(12, 4).unwrap()),
        (DesignKind::Systematic, enumerate_design(Algorithm::Systematic, &pv).unwrap()),
        (DesignKind::Pivotal, enumerate_design(Algorithm::Pivotal, &pv).unwrap()),
    ];
    for (kind, design) in cases {
        let direct = design_variance(&design, &pv, &y).unwrap();
        let closed = variance_closed_form(kind, &y, 4).unwrap();
        assert!((direct - closed).abs() < 1e-9 * direct.max(1.0), "{kind:?}");
    }
}
