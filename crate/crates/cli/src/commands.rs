//! One function per command; each returns its artifacts without touching
//! the filesystem.

use std::io::Write;

use linproc_core::lsd::LsdSolution;
use linproc_core::process::spectral_density;
use linproc_core::spectra::EmpiricalSpectrum;
use linproc_core::verify::{
    calibrate_equation_variant, convergence_study, run_ensemble, simulate_ensemble, EnsembleConfig, StudyConfig,
};
use linproc_core::{Error, Result};

use crate::config::{Command, ExperimentConfig};
use crate::output::Artifacts;

pub fn run(config: &ExperimentConfig) -> Result<Artifacts> {
    let mut out = Artifacts::default();
    match config.command {
        Command::Simulate => simulate(config, &mut out)?,
        Command::Solve => solve(config, &mut out)?,
        Command::Compare => compare(config, &mut out)?,
        Command::Calibrate => calibrate(config, &mut out)?,
        Command::Study => study(config, &mut out)?,
    }
    Ok(out)
}

fn ensemble(config: &ExperimentConfig) -> Result<EnsembleConfig> {
    let (Some(p), Some(n)) = (config.p, config.n) else {
        return Err(Error::InvalidParameter(format!("{} needs p and n", config.command)));
    };
    let mut e = EnsembleConfig::new(config.process.clone(), p, n, config.replicates, config.seed);
    e.variants = config.variants.clone();
    e.jobs = config.jobs;
    e.budget_entries = config.budget_entries;
    e.keep_eigenvalues = config.keep_eigenvalues;
    e.solver = config.solver;
    e.grid = config.grid;
    Ok(e)
}

fn json<T: serde::Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn simulate(config: &ExperimentConfig, out: &mut Artifacts) -> Result<()> {
    let replicates = simulate_ensemble(&ensemble(config)?)?;
    let mut eig = Vec::new();
    writeln!(eig, "replicate,index,lambda")?;
    for (r, rep) in replicates.iter().enumerate() {
        for (i, l) in rep.spectrum.eigenvalues().iter().enumerate() {
            writeln!(eig, "{r},{i},{l}")?;
        }
    }
    let pooled = EmpiricalSpectrum::pooled(replicates.iter().map(|r| &r.spectrum))?;
    let values = pooled.eigenvalues();
    let total = values.len() as f64;
    let mut esd = Vec::new();
    writeln!(esd, "x,F")?;
    // one row per distinct eigenvalue, at the top of its jump
    for (i, x) in values.iter().enumerate() {
        if values.get(i + 1) != Some(x) {
            writeln!(esd, "{x},{}", (i + 1) as f64 / total)?;
        }
    }
    out.add("eigenvalues.csv", eig);
    out.add("esd.csv", esd);
    Ok(())
}

fn solve(config: &ExperimentConfig, out: &mut Artifacts) -> Result<()> {
    let f = spectral_density(&config.process)?;
    let lsd = LsdSolution::compute(&f, config.y, config.variant, &config.solver, &config.grid)?;
    let mut doc = Vec::new();
    lsd.write_json(&mut doc)?;
    doc.push(b'\n');
    let mut density = Vec::new();
    lsd.write_density_csv(&mut density)?;
    let mut cdf = Vec::new();
    lsd.write_cdf_csv(&mut cdf)?;
    out.add("lsd.json", doc);
    out.add("density.csv", density);
    out.add("cdf.csv", cdf);
    Ok(())
}

fn compare(config: &ExperimentConfig, out: &mut Artifacts) -> Result<()> {
    let report = run_ensemble(&ensemble(config)?)?;
    if report.failed_replicates > 0 {
        log::warn!("{} of {} replicates failed", report.failed_replicates, report.replicates);
    }
    out.add("report.json", json(&report)?);
    Ok(())
}

fn calibrate(config: &ExperimentConfig, out: &mut Artifacts) -> Result<()> {
    let cal = calibrate_equation_variant(&ensemble(config)?)?;
    let mut evidence = Vec::new();
    cal.write_evidence_csv(&mut evidence)?;
    log::info!(
        "selected {} at y = {} (decisive: {}, degenerate: {})",
        cal.selected,
        cal.y,
        cal.decisive,
        cal.degenerate
    );
    out.add("evidence.csv", evidence);
    out.add("verdict.json", json(&cal)?);
    Ok(())
}

fn study(config: &ExperimentConfig, out: &mut Artifacts) -> Result<()> {
    let sizes = config
        .sizes
        .clone()
        .ok_or_else(|| Error::InvalidParameter("study needs sizes".into()))?;
    let mut s = StudyConfig::new(config.process.clone(), config.y, sizes, config.replicates, config.seed);
    s.variant = config.variant;
    s.jobs = config.jobs;
    s.budget_entries = config.budget_entries;
    s.solver = config.solver;
    s.grid = config.grid;
    let result = convergence_study(&s)?;
    if !result.strictly_decreasing() {
        log::warn!("median KS is not strictly decreasing in n");
    }
    let mut trend = Vec::new();
    result.write_csv(&mut trend)?;
    out.add("trend.csv", trend);
    Ok(())
}
