use std::path::Path;

use serde::Serialize;

use freqlab_core::combinatorics::*;

use crate::error::{CliError, Result};
use crate::output::{write_csv, write_json, Meta};
use crate::Outcome;

#[derive(Clone, Debug, Serialize)]
pub struct DimBoundReport {
    pub params: TreeParams,
    pub alpha: f64,
    pub epsilon0: f64,
    pub m: f64,
    pub contraction: bool,
    pub z_alpha: f64,
    pub dimension_bound: f64,
}

fn tree(cfg: &crate::ExperimentConfig) -> Result<TreeParams> {
    let p = cfg.tree.ok_or_else(|| CliError::missing("tree"))?;
    p.validate()?;
    Ok(p)
}

/// Closed-form counting quantities for one parameter set.
pub fn dim_bound(cfg: &crate::ExperimentConfig, meta: &Meta, out: &Path) -> Result<Outcome> {
    let p = tree(cfg)?;
    let alpha = p.alpha()?;
    let epsilon0 = epsilon0_of(alpha)?;
    let report = DimBoundReport {
        params: p,
        alpha,
        epsilon0,
        m: p.m(),
        contraction: contraction_holds(alpha, p.eps),
        z_alpha: z_of(alpha, p.delta0)?,
        dimension_bound: dimension_bound(&p)?,
    };
    let mut failures = Vec::new();
    if !report.contraction {
        failures.push(format!("(1/2)^α(1+ε)^(1−α) ≥ 1 at ε = {}", p.eps));
    }
    let json = write_json(out, "dim_bound.json", meta, &report)?;
    let summary = serde_json::json!({ "alpha": alpha, "epsilon0": epsilon0, "dimension_bound": report.dimension_bound });
    Ok(Outcome { files: vec![json], failures, summary })
}

/// Monte Carlo of the two-point recursion against the exact binomial tails.
pub fn simulate(cfg: &crate::ExperimentConfig, meta: &Meta, out: &Path) -> Result<Outcome> {
    let p = tree(cfg)?;
    let s = cfg.simulate.as_ref().ok_or_else(|| CliError::missing("simulate"))?;
    let seed = cfg.seed.ok_or_else(|| CliError::missing("seed"))?;
    let report = simulate_recursion(&p, s.generations, s.trials, seed)?;
    let n = s.trials as f64;
    let mut failures = Vec::new();
    let mut max_z: f64 = 0.0;
    for row in &report.rows {
        let se = (row.exact_tail * (1.0 - row.exact_tail) / n).sqrt();
        let dev = (row.mc_estimate - row.exact_tail).abs();
        if se > 0.0 {
            max_z = max_z.max(dev / se);
        }
        if dev > s.sigma * se + 1e-12 {
            failures.push(format!("j = {}: Monte Carlo {} vs exact {} ({} standard errors)", row.j, row.mc_estimate, row.exact_tail, dev / se));
        }
    }
    let mut body = Vec::new();
    report.write_csv(&mut body).map_err(|e| CliError::io(out, e))?;
    let csv = write_csv(out, "simulate.csv", meta, &String::from_utf8_lossy(&body))?;
    let json = write_json(out, "simulate.json", meta, &report)?;
    let slope = report.covering_slope();
    let summary = serde_json::json!({ "max_z": max_z, "covering_slope": slope });
    Ok(Outcome { files: vec![csv, json], failures, summary })
}
