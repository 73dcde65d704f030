use std::path::Path;

use freqlab_core::nodal::cover_report;

use crate::error::{CliError, Result};
use crate::output::{write_json, Meta};
use crate::Outcome;

/// Sign-constant balls over a Σ-window and the uncovered residual.
pub fn run(cfg: &crate::ExperimentConfig, meta: &Meta, out: &Path) -> Result<Outcome> {
    let p = cfg.cover.as_ref().ok_or_else(|| CliError::missing("cover"))?;
    let domain = cfg.domain()?;
    let field = cfg.coefficient_field()?;
    let u = cfg.solve(&domain, &field)?;
    let rep = cover_report(&u, &domain, p.window, p.r_floor)?;

    let mut failures = Vec::new();
    if let Some(c) = p.residual_near {
        for s in &rep.residual {
            if (s[0] - c).abs() > p.r_floor {
                failures.push(format!("residual sample x = {} lies farther than r_floor from {c}", s[0]));
                break;
            }
        }
    }
    if let (Some(max), Some(b)) = (p.max_slope, &rep.boxcount) {
        if b.slope > max {
            failures.push(format!("residual box-count slope {} exceeds {max}", b.slope));
        }
    }
    if let Some(n) = p.expect_balls {
        if rep.balls.len() != n {
            failures.push(format!("{} balls, expected {n}", rep.balls.len()));
        }
    }
    let json = write_json(out, "cover.json", meta, &rep)?;
    let summary = serde_json::json!({
        "balls": rep.balls.len(),
        "residual": rep.residual.len(),
        "slope": rep.boxcount.as_ref().map(|b| b.slope),
    });
    Ok(Outcome { files: vec![json], failures, summary })
}
