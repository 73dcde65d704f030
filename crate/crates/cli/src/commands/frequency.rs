use std::path::Path;

use serde::Serialize;

use freqlab_core::frequency::*;
use freqlab_core::{Error, Vec2};

use crate::error::{CliError, Result};
use crate::output::{write_csv, write_json, Meta};
use crate::Outcome;

#[derive(Serialize)]
struct Checks {
    h_derivative: CheckLine,
    n_monotone: CheckLine,
    growth: CheckLine,
    annulus: CheckLine,
    ball_average: CheckLine,
    n_range: [f64; 2],
}

#[derive(Serialize)]
struct CheckLine {
    status: &'static str,
    value: f64,
    bound: f64,
}

impl CheckLine {
    fn new(pass: bool, value: f64, bound: f64) -> Self {
        Self { status: if pass { "pass" } else { "fail" }, value, bound }
    }

    fn skipped() -> Self {
        Self { status: "skipped", value: f64::NAN, bound: f64::NAN }
    }
}

/// Skips checks whose hypotheses fail at this center; keeps real failures.
fn optional<T>(r: freqlab_core::Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::Inadmissible(_) | Error::InvalidInput(_) | Error::BallEscapesChart { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Solves, samples N over [r_min, r_max] and runs the check suites.
pub fn run(cfg: &crate::ExperimentConfig, meta: &Meta, out: &Path) -> Result<Outcome> {
    let p = cfg.frequency.as_ref().ok_or_else(|| CliError::missing("frequency"))?;
    let domain = cfg.domain()?;
    let field = cfg.coefficient_field()?;
    let u = cfg.solve(&domain, &field)?;
    let fcfg = FrequencyCfg::default();
    let ccfg = CheckCfg::default();
    let x = Vec2::new(p.center[0], p.center[1]);
    let prof = frequency_profile(&u, &domain, x, p.r_min, p.r_max, p.samples, &fcfg)?;
    let mut failures = Vec::new();

    let hd = check_h_derivative(&prof, &u, &domain, None, &fcfg, &ccfg)?;
    if !hd.pass {
        failures.push(format!("H' residual {} exceeds {}", hd.max_residual, hd.bound));
    }
    let mono = check_n_monotone(&prof, field.lipschitz(), field.lambda(), &ccfg);
    let n_monotone = if mono.applicable {
        if mono.asserted && !mono.pass {
            failures.push(format!("N monotonicity constant {} exceeds {}", mono.c_hat, mono.bound));
        }
        CheckLine::new(mono.pass, mono.c_hat, mono.bound)
    } else {
        CheckLine::skipped()
    };
    let growth = match optional(check_growth_bound(&u, &domain, x, p.r_min, p.r_max / p.r_min, &fcfg, &ccfg))? {
        Some(g) => {
            if !g.pass {
                failures.push(format!("growth sandwich {} ∉ [{}, {}]", g.log_ratio, g.lower, g.upper));
            }
            CheckLine::new(g.pass, g.log_ratio, g.upper)
        }
        None => CheckLine::skipped(),
    };
    let delta = 0.5 * (p.r_max - p.r_min);
    let annulus = match optional(check_annulus_bounds(&u, &domain, x, p.r_min, delta, &fcfg, &ccfg))? {
        Some(a) => {
            if !a.pass {
                failures.push(format!("annulus mean {} ∉ [{}, {}]", a.mean, a.lower, a.upper));
            }
            CheckLine::new(a.pass, a.mean, a.upper)
        }
        None => CheckLine::skipped(),
    };
    let ball_average = match optional(check_ball_average(&u, &domain, x, p.r_min, &fcfg, &ccfg))? {
        Some(b) => {
            if !b.pass {
                failures.push(format!("ball-average constant {} exceeds {}", b.kappa_needed, ccfg.max_constant));
            }
            CheckLine::new(b.pass, b.kappa_needed, ccfg.max_constant)
        }
        None => CheckLine::skipped(),
    };

    let finite: Vec<f64> = prof.n_values.iter().copied().filter(|v| v.is_finite()).collect();
    let n_range = [finite.iter().copied().fold(f64::INFINITY, f64::min), finite.iter().copied().fold(f64::NEG_INFINITY, f64::max)];
    if let Some(target) = p.expect_n {
        for (r, n) in prof.radii.iter().zip(&prof.n_values) {
            if !((n - target).abs() <= p.rel_tol * target.abs().max(1.0)) {
                failures.push(format!("N({r}) = {n}, expected {target} ± {}", p.rel_tol));
            }
        }
    }

    let mut body = Vec::new();
    prof.write_csv(&mut body).map_err(|e| CliError::io(out, e))?;
    let csv = write_csv(out, "frequency_profile.csv", meta, &String::from_utf8_lossy(&body))?;
    let checks = Checks {
        h_derivative: CheckLine::new(hd.pass, hd.max_residual, hd.bound),
        n_monotone,
        growth,
        annulus,
        ball_average,
        n_range,
    };
    let json = write_json(out, "checks.json", meta, &checks)?;
    let summary = serde_json::json!({ "n_min": n_range[0], "n_max": n_range[1], "failures": failures.len() });
    Ok(Outcome { files: vec![csv, json], failures, summary })
}
