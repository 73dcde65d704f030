use std::path::Path;

use serde::Serialize;

use freqlab_core::cantor::*;
use freqlab_core::nodal::box_counting_dimension;
use freqlab_core::Vec2;

use crate::error::{CliError, Result};
use crate::output::{num, write_csv, write_json, Meta};
use crate::Outcome;

#[derive(Clone, Debug, Serialize)]
pub struct CantorRow {
    pub r: f64,
    pub theta_min: f64,
    pub bound: f64,
    pub measured: Option<f64>,
    pub measured_kernel: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CantorReport {
    pub dimension: f64,
    pub box_slope: Option<f64>,
    pub rows: Vec<CantorRow>,
    /// Consecutive factors bound(r_i)/r_i ÷ bound(r_{i+1})/r_{i+1}.
    pub decay: Vec<f64>,
}

/// dx/θ bounds, measured harmonic measure and the dimension of the Cantor set.
pub fn run(cfg: &crate::ExperimentConfig, meta: &Meta, out: &Path) -> Result<Outcome> {
    let p = cfg.cantor.as_ref().ok_or_else(|| CliError::missing("cantor"))?;
    let spec = CantorSpec::new(p.k, p.depth, p.aperture)?;
    let mut radii = p.radii.clone();
    radii.sort_by(|a, b| b.total_cmp(a));
    if radii.is_empty() {
        return Err(CliError::missing("cantor.radii"));
    }

    let measured = if p.measure { Some(measured_density(&spec, p.x, &radii, &DensityCfg::for_spec(&spec))?) } else { None };
    let mut rows = Vec::with_capacity(radii.len());
    for (i, &r) in radii.iter().enumerate() {
        let b = ahlfors_bound(&spec, p.x, r, ThetaSource::Geometry)?;
        let m = measured.as_ref().map(|m| m[i]);
        rows.push(CantorRow {
            r,
            theta_min: b.theta_min,
            bound: b.bound,
            measured: m.map(|m| m.measured),
            measured_kernel: m.map(|m| m.measured_kernel),
        });
    }
    let decay: Vec<f64> = rows.windows(2).map(|w| (w[0].bound / w[0].r) / (w[1].bound / w[1].r)).collect();

    let dimension = cantor_dimension(&spec);
    let box_slope = match p.box_depth {
        Some(d) => {
            let pts: Vec<Vec2> = cantor_intervals(&spec, d)?
                .iter()
                .flat_map(|&(l, r)| [Vec2::new(l, 0.0), Vec2::new(r, 0.0)])
                .collect();
            Some(box_counting_dimension(&pts, 14)?.slope)
        }
        None => None,
    };

    let mut failures = Vec::new();
    for row in &rows {
        if let Some(m) = row.measured {
            if m > row.bound {
                failures.push(format!("ω(B(x, {})) = {m} exceeds the bound {}", row.r, row.bound));
            }
        }
    }
    for (i, f) in decay.iter().enumerate() {
        if *f < p.min_decay {
            failures.push(format!("bound/r decays by {f} < {} between r = {} and {}", p.min_decay, rows[i].r, rows[i + 1].r));
        }
    }
    if let Some(s) = box_slope {
        if (s - dimension).abs() > 0.05 {
            failures.push(format!("box-count slope {s} differs from the dimension {dimension} by more than 0.05"));
        }
    }

    let mut body = String::from("r,theta_min,bound,measured,measured_kernel\n");
    let opt = |v: Option<f64>| v.map_or(String::new(), num);
    for r in &rows {
        body.push_str(&format!("{},{},{},{},{}\n", num(r.r), num(r.theta_min), num(r.bound), opt(r.measured), opt(r.measured_kernel)));
    }
    let csv = write_csv(out, "cantor.csv", meta, &body)?;
    let report = CantorReport { dimension, box_slope, rows, decay };
    let json = write_json(out, "cantor.json", meta, &report)?;
    let summary = serde_json::json!({ "dimension": dimension, "box_slope": box_slope, "decay": report.decay });
    Ok(Outcome { files: vec![csv, json], failures, summary })
}
