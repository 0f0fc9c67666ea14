//! The work behind each subcommand, writing to any sink.

use std::io::Write;

use pivot_core::analytics::{
    delta_matrix, eigen_dispersion, entropy, ht_variance, markov_pikl, srs_pikl, variance_closed_form,
    DesignKind,
};
use pivot_core::design::{enumerate_design, enumerate_systematic};
use pivot_core::inclusion::{design_pikl, pikl_matrix, PiklMatrix};
use pivot_core::strata::{build_clusters, cumulate, decompose, UnitRole};
use pivot_core::{Algorithm, Error, ProbabilityVector, RandomSource};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::format::{write_design, write_matrix, write_matrix_json, write_metrics, MetricRow, OutputFormat};
use crate::frame::Frame;
use crate::montecarlo::{parallel_counts, parallel_pikl};
use crate::tables::{deff_table, render, round2};
use crate::verify::{run, Check, Level};

#[derive(Debug, Clone, Serialize)]
pub struct CrossingRow {
    pub unit: String,
    pub entry: f64,
    pub exit: f64,
    pub phantom: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClusterRow {
    pub members: Vec<String>,
    pub psi: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecomposeReport {
    pub population: usize,
    pub sample_size: usize,
    pub cumulative: Vec<f64>,
    pub crossings: Vec<CrossingRow>,
    pub strata: Vec<Vec<String>>,
    pub clusters: Vec<ClusterRow>,
}

pub fn decompose_report(frame: &Frame) -> DecomposeReport {
    let pv = &frame.pi;
    let dec = decompose(pv);
    let cp = build_clusters(&dec, pv);
    let names = |r: std::ops::Range<usize>| r.map(|k| frame.label(k).to_string()).collect::<Vec<_>>();
    let crossings = dec
        .cross_border()
        .iter()
        .enumerate()
        .map(|(m, &k)| CrossingRow {
            unit: frame.label(k).to_string(),
            entry: dec.entry()[m],
            exit: dec.exit()[m],
            phantom: matches!(dec.role(k), UnitRole::Interior { .. }),
        })
        .collect();
    DecomposeReport {
        population: pv.population_size(),
        sample_size: pv.sample_size(),
        cumulative: pv.cumulative()[1..].to_vec(),
        crossings,
        strata: (0..dec.sample_size()).map(|s| names(dec.members(s))).collect(),
        clusters: cp
            .clusters()
            .iter()
            .zip(cp.psi())
            .map(|(r, &psi)| ClusterRow { members: names(r.clone()), psi })
            .collect(),
    }
}

fn braces(members: &[String]) -> String {
    format!("{{{}}}", members.join(","))
}

pub fn render_decompose(report: &DecomposeReport) -> String {
    let mut out = format!("N = {}, n = {}\n", report.population, report.sample_size);
    out.push_str("running sums:");
    for v in &report.cumulative {
        out.push_str(&format!(" {v}"));
    }
    out.push_str("\ncrossings:\n  unit  a      b      phantom\n");
    for c in &report.crossings {
        out.push_str(&format!("  {:<5} {:<6.4} {:<6.4} {}\n", c.unit, c.entry, c.exit, c.phantom));
    }
    out.push_str("microstrata:\n");
    for (i, s) in report.strata.iter().enumerate() {
        out.push_str(&format!("  U_{} = {}\n", i + 1, braces(s)));
    }
    out.push_str("clusters:\n");
    for (i, c) in report.clusters.iter().enumerate() {
        out.push_str(&format!("  u_{:<3} {:<12} {}\n", i + 1, braces(&c.members), c.psi));
    }
    out
}

pub fn cmd_decompose<W: Write + ?Sized>(frame: &Frame, format: OutputFormat, out: &mut W) -> Result<()> {
    let report = decompose_report(frame);
    match format {
        OutputFormat::Csv => out.write_all(render_decompose(&report).as_bytes())?,
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, &report)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

/// Writes one `replicate,units...` line per replicate, or with `summary`
/// the first-order frequencies against `pi` with binomial standard errors.
pub fn cmd_sample<W: Write + ?Sized>(config: &RunConfig, frame: &Frame, summary: bool, out: &mut W) -> Result<()> {
    let pv = &frame.pi;
    if summary {
        let counts = parallel_counts(config.algorithm, pv, config.replicates, config.seed)?;
        let r = config.replicates as f64;
        writeln!(out, "unit,pi,frequency,standard_error,z")?;
        for k in 0..pv.population_size() {
            let p = pv.pi()[k];
            let f = counts.count(k, k) as f64 / r;
            let se = (p * (1.0 - p) / r).sqrt();
            writeln!(out, "{},{p},{f},{se},{:.3}", frame.label(k), (f - p) / se)?;
        }
        return Ok(());
    }
    let mut json_rows = Vec::new();
    for r in 0..config.replicates {
        let mut rng = RandomSource::for_replicate(config.seed, r);
        let sample = config.algorithm.draw(pv, &mut rng)?;
        let labels: Vec<&str> = sample.units().iter().map(|&k| frame.label(k)).collect();
        match config.format {
            OutputFormat::Csv => writeln!(out, "{r},{}", labels.join(","))?,
            OutputFormat::Json => json_rows.push(serde_json::json!({ "replicate": r, "units": labels })),
        }
    }
    if config.format == OutputFormat::Json {
        serde_json::to_writer(&mut *out, &json_rows)?;
        writeln!(out)?;
    }
    Ok(())
}

pub fn cmd_enumerate<W: Write + ?Sized>(algorithm: Algorithm, frame: &Frame, out: &mut W) -> Result<()> {
    let design = enumerate_design(algorithm, &frame.pi)?;
    write_design(out, &design, &frame.labels)
}

/// How second-order inclusion probabilities are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PiklMethod {
    Formula,
    Enumeration,
    MonteCarlo,
}

/// Equal probabilities `n / N` for the designs that only use the sizes.
fn sizes_only(pv: &ProbabilityVector) -> Result<ProbabilityVector> {
    let (big, n) = (pv.population_size(), pv.sample_size());
    Ok(cumulate(&vec![n as f64 / big as f64; big])?)
}

pub fn cmd_pikl<W: Write + ?Sized>(config: &RunConfig, method: PiklMethod, frame: &Frame, out: &mut W) -> Result<()> {
    let pv = &frame.pi;
    let matrix = match method {
        PiklMethod::Formula => match config.algorithm {
            Algorithm::Pivotal | Algorithm::DevilleSystematic => pikl_matrix(&decompose(pv), pv)?,
            Algorithm::SimpleRandom => srs_pikl(pv.population_size(), pv.sample_size())?,
            Algorithm::CompromiseMarkov(rho) => markov_pikl(pv.population_size(), pv.sample_size(), rho)?,
            other => {
                return Err(CliError::Usage(format!(
                    "no closed form for `{}`; use --method enumeration",
                    other.tag()
                )))
            }
        },
        PiklMethod::Enumeration => design_pikl(&enumerate_design(config.algorithm, pv)?),
        PiklMethod::MonteCarlo => {
            let mc = parallel_pikl(config.algorithm, pv, config.replicates, config.seed)?;
            if config.verbosity > 0 {
                eprintln!("standard errors:");
                let mut err = std::io::stderr();
                write_matrix(&mut err, &mc.standard_error)?;
            }
            mc.estimate
        }
    };
    match config.format {
        OutputFormat::Csv => write_matrix(out, matrix.matrix()),
        OutputFormat::Json => write_matrix_json(out, matrix.matrix()),
    }
}

/// Metric rows for the designs usable on `frame`: ordered pivotal, ordered
/// systematic and simple random sampling, plus compromise Markov designs
/// for each `rho` when the frame has equal probabilities.
pub fn metrics(frame: &Frame, rhos: &[f64]) -> Result<Vec<MetricRow>> {
    let pv = &frame.pi;
    let (big, n) = (pv.population_size(), pv.sample_size());
    let flat = sizes_only(pv)?;
    let mut designs: Vec<(String, PiklMatrix, &ProbabilityVector, Option<Algorithm>)> = vec![
        ("ops".into(), pikl_matrix(&decompose(pv), pv)?, pv, Some(Algorithm::Pivotal)),
        ("sys".into(), design_pikl(&enumerate_systematic(pv)?), pv, Some(Algorithm::Systematic)),
        ("srs".into(), srs_pikl(big, n)?, &flat, Some(Algorithm::SimpleRandom)),
    ];
    let equal = pv.pi().iter().all(|&p| (p - pv.pi()[0]).abs() < 1e-12);
    for &rho in rhos {
        if !equal {
            return Err(CliError::Usage("compromise Markov designs need equal probabilities".into()));
        }
        designs.push((format!("cmc{rho}"), markov_pikl(big, n, rho)?, &flat, Some(Algorithm::CompromiseMarkov(rho))));
    }

    let mut rows = Vec::new();
    for (name, pm, first, algorithm) in &designs {
        if let Some(alg) = algorithm {
            match enumerate_design(*alg, first) {
                Ok(d) => rows.push(MetricRow::new("entropy", name.as_str(), n, entropy(&d))),
                Err(Error::TooLarge { .. }) => {}
                Err(e) => return Err(e.into()),
            }
        }
        let dm = delta_matrix(pm);
        rows.push(MetricRow::new("delta", name.as_str(), n, eigen_dispersion(&dm).delta));
        for (var, y) in &frame.variables {
            let v = ht_variance(&dm, first, y)?;
            rows.push(MetricRow::new(format!("variance:{var}"), name.as_str(), n, v));
            let base = variance_closed_form(DesignKind::SimpleRandom, y, n)?;
            if base > 0.0 {
                rows.push(MetricRow::new(format!("deff:{var}"), name.as_str(), n, v / base));
            }
        }
    }
    Ok(rows)
}

pub fn cmd_metrics<W: Write + ?Sized>(frame: &Frame, rhos: &[f64], format: OutputFormat, out: &mut W) -> Result<()> {
    write_metrics(out, &metrics(frame, rhos)?, format)
}

/// Runs the oracle suites and reports whether all of them passed.
pub fn cmd_verify<W: Write + ?Sized>(level: Level, format: OutputFormat, out: &mut W) -> Result<bool> {
    let checks: Vec<Check> = run(level);
    match format {
        OutputFormat::Csv => {
            for c in &checks {
                writeln!(out, "{c}")?;
            }
        }
        OutputFormat::Json => {
            let rows: Vec<_> = checks
                .iter()
                .map(|c| serde_json::json!({ "id": c.id, "name": c.name, "passed": c.passed, "detail": c.detail }))
                .collect();
            serde_json::to_writer_pretty(&mut *out, &rows)?;
            writeln!(out)?;
        }
    }
    Ok(checks.iter().all(|c| c.passed))
}

pub fn cmd_reproduce<W: Write + ?Sized>(format: OutputFormat, out: &mut W) -> Result<()> {
    let rows = deff_table()?;
    match format {
        OutputFormat::Csv => out.write_all(render(&rows).as_bytes())?,
        OutputFormat::Json => {
            let rounded: Vec<_> = rows
                .iter()
                .map(|r| serde_json::json!({ "strategy": r.strategy, "rho": r.rho, "deff": r.values.map(round2) }))
                .collect();
            serde_json::to_writer_pretty(&mut *out, &rounded)?;
            writeln!(out)?;
        }
    }
    Ok(())
}
