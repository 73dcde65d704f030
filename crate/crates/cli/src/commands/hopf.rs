use std::path::Path;

use serde::Serialize;

use freqlab_core::nodal::{cover_report, detect_small_gradient_points};
use freqlab_core::solver::{normal_derivative_trace, BoundaryArc, SolverOptions, System};
use freqlab_core::Vec2;

use crate::error::{CliError, Result};
use crate::output::{num, write_csv, write_json, Meta};
use crate::Outcome;

#[derive(Clone, Debug, Serialize)]
pub struct HopfRow {
    pub x: f64,
    pub grad: f64,
    pub density: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct HopfReport {
    pub rows: Vec<HopfRow>,
    /// Normalizing constant c = √(max·min) of the ratios.
    pub scale: f64,
    /// Smallest κ with ratio/c ∈ [1/κ, κ] at every sample.
    pub kappa: f64,
    /// Samples with |∂_ν u| below the threshold, times the sample spacing.
    pub small_gradient_measure: f64,
    pub balls: usize,
}

/// |∂_ν u| against dω/dσ on the sign-constant balls of a Σ-window.
pub fn run(cfg: &crate::ExperimentConfig, meta: &Meta, out: &Path) -> Result<Outcome> {
    let p = cfg.hopf.as_ref().ok_or_else(|| CliError::missing("hopf"))?;
    if p.samples < 2 || !(p.window[1] > p.window[0]) {
        return Err(CliError::Config("hopf needs samples ≥ 2 and an increasing window".into()));
    }
    let domain = cfg.domain()?;
    let field = cfg.coefficient_field()?;
    let u = cfg.solve(&domain, &field)?;
    let cover = cover_report(&u, &domain, p.window, p.r_floor)?;

    let [x0, x1] = p.window;
    let spacing = (x1 - x0) / (p.samples - 1) as f64;
    let xs: Vec<f64> = (0..p.samples)
        .map(|i| x0 + spacing * i as f64)
        .filter(|&x| cover.balls.iter().any(|b| (x - b.cx).abs() <= 0.5 * b.r))
        .collect();
    if xs.is_empty() {
        return Err(CliError::Assertion(vec!["no sample lies well inside a sign-constant ball".into()]));
    }

    let grads = normal_derivative_trace(&u, &domain, &xs)?;
    let sys = System::new(u.mesh().clone(), field, SolverOptions::default())?;
    let pole = Vec2::new(p.pole[0], p.pole[1]);
    let hm = sys.harmonic_measure_kernel(pole)?;
    let h = u.mesh().h();
    let (outer, inner) = (8.0 * h, 4.0 * h);
    let arc_len = |x: f64, d: f64| -> Result<f64> {
        let a = domain.sigma_point(x - d).ok_or_else(|| CliError::Config(format!("{} is off Σ", x - d)))?;
        let b = domain.sigma_point(x + d).ok_or_else(|| CliError::Config(format!("{} is off Σ", x + d)))?;
        let mid = domain.sigma_point(x).expect("x is on Σ");
        Ok((mid - a).norm() + (b - mid).norm())
    };
    let mut rows = Vec::with_capacity(xs.len());
    for (&x, g) in xs.iter().zip(&grads) {
        let w1 = sys.measure_of(&hm, &BoundaryArc::SigmaInterval { x0: x - outer, x1: x + outer })?;
        let w2 = sys.measure_of(&hm, &BoundaryArc::SigmaInterval { x0: x - inner, x1: x + inner })?;
        let density = (w1 - w2) / (arc_len(x, outer)? - arc_len(x, inner)?);
        let grad = g.abs();
        rows.push(HopfRow { x, grad, density, ratio: grad / density });
    }

    let (lo, hi) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r.ratio), b.max(r.ratio)));
    let (scale, kappa) = if lo > 0.0 && hi.is_finite() { ((lo * hi).sqrt(), (hi / lo).sqrt()) } else { (f64::NAN, f64::INFINITY) };
    let small = detect_small_gradient_points(&u, &domain, &xs, p.threshold)?;
    let small_gradient_measure = small.len() as f64 * spacing;

    let mut failures = Vec::new();
    if !(kappa <= p.max_kappa) {
        failures.push(format!("fitted κ = {kappa} exceeds {}", p.max_kappa));
    }
    if small_gradient_measure > 2.0 * p.r_floor {
        failures.push(format!("small-gradient set has measure {small_gradient_measure} > 2·r_floor"));
    }
    let mut body = String::from("x,grad,density,ratio\n");
    for r in &rows {
        body.push_str(&format!("{},{},{},{}\n", num(r.x), num(r.grad), num(r.density), num(r.ratio)));
    }
    let csv = write_csv(out, "hopf_density.csv", meta, &body)?;
    let report = HopfReport { rows, scale, kappa, small_gradient_measure, balls: cover.balls.len() };
    let json = write_json(out, "hopf_density.json", meta, &report)?;
    let summary = serde_json::json!({ "kappa": kappa, "small_gradient_measure": small_gradient_measure });
    Ok(Outcome { files: vec![csv, json], failures, summary })
}
