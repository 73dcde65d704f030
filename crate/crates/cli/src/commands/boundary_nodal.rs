use std::path::Path;

use serde::Serialize;

use freqlab_core::frequency::{frequency, FrequencyCfg};
use freqlab_core::nodal::nodal_measure;

use crate::error::{CliError, Result};
use crate::output::{num, write_csv, write_json, Meta};
use crate::Outcome;

#[derive(Clone, Debug, Serialize)]
pub struct BoundaryNodalRow {
    pub r: f64,
    pub length: f64,
    pub n: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundaryNodalReport {
    pub rows: Vec<BoundaryNodalRow>,
    /// Geometric mean of the positive ratios at the configured α.
    pub fitted_c: f64,
    /// Least-squares slope of log(length/r) against log(N+1); null when degenerate.
    pub fitted_alpha: Option<f64>,
}

/// Nodal length in B(x, r) against r(N(x̃, Sr) + 1)^α with x̃ = x + (r/2)ν_in.
pub fn run(cfg: &crate::ExperimentConfig, meta: &Meta, out: &Path) -> Result<Outcome> {
    let p = cfg.boundary_nodal.as_ref().ok_or_else(|| CliError::missing("boundary_nodal"))?;
    if p.radii.is_empty() || p.s <= 0.0 || p.alpha < 1.0 {
        return Err(CliError::Config("boundary_nodal needs radii, s > 0 and alpha ≥ 1".into()));
    }
    let domain = cfg.domain()?;
    let field = cfg.coefficient_field()?;
    let u = cfg.solve(&domain, &field)?;
    let base = domain.sigma_point(p.x).ok_or_else(|| CliError::Config(format!("x = {} is not on Σ", p.x)))?;
    let nu = domain.inward_normal(p.x).ok_or_else(|| CliError::Config("Σ has no normal at x".into()))?;
    let fcfg = FrequencyCfg::default();

    let mut rows = Vec::with_capacity(p.radii.len());
    for &r in &p.radii {
        let length = nodal_measure(&u, &domain, base, r, false);
        let center = base + nu * (0.5 * r);
        let n = frequency(&u, &domain, center, p.s * r, &fcfg)?;
        let ratio = length / (r * (n + 1.0).powf(p.alpha));
        rows.push(BoundaryNodalRow { r, length, n, ratio });
    }
    let positive: Vec<&BoundaryNodalRow> = rows.iter().filter(|w| w.ratio > 0.0).collect();
    let fitted_c = if positive.is_empty() {
        0.0
    } else {
        (positive.iter().map(|w| w.ratio.ln()).sum::<f64>() / positive.len() as f64).exp()
    };
    let fitted_alpha = fit_alpha(&positive);

    let mut failures = Vec::new();
    for w in &rows {
        if w.ratio > fitted_c * (1.0 + p.tolerance) {
            failures.push(format!("ratio {} at r = {} exceeds fitted C = {fitted_c} by more than {}", w.ratio, w.r, p.tolerance));
        }
    }
    let mut body = String::from("r,length,N,ratio\n");
    for w in &rows {
        body.push_str(&format!("{},{},{},{}\n", num(w.r), num(w.length), num(w.n), num(w.ratio)));
    }
    let csv = write_csv(out, "boundary_nodal.csv", meta, &body)?;
    let report = BoundaryNodalReport { rows, fitted_c, fitted_alpha };
    let json = write_json(out, "boundary_nodal.json", meta, &report)?;
    let summary = serde_json::json!({ "fitted_c": fitted_c, "fitted_alpha": fitted_alpha });
    Ok(Outcome { files: vec![csv, json], failures, summary })
}

fn fit_alpha(rows: &[&BoundaryNodalRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows.iter().map(|w| ((w.n + 1.0).ln(), (w.length / w.r).ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / m, pts.iter().map(|p| p.1).sum::<f64>() / m);
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx < 1e-6 {
        return None;
    }
    Some(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}
