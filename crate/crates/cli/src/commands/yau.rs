use std::f64::consts::PI;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use freqlab_core::nodal::{extract_zero_set, Region};
use freqlab_core::solver::{eigenpairs, EigenOptions, MeshOptions, SolverOptions, System};
use freqlab_core::{DiscreteSolution, Vec2};

use crate::error::{CliError, Result};
use crate::output::{num, write_csv, write_json, Meta};
use crate::Outcome;

const GL4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
];

/// Composite 4-point Gauss–Legendre nodes and weights on [a, b].
fn gauss(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let w = (b - a) / panels as f64;
    (0..panels)
        .flat_map(|p| {
            let mid = a + (p as f64 + 0.5) * w;
            GL4.iter().map(move |&(x, wt)| (mid + 0.5 * w * x, 0.5 * w * wt))
        })
        .collect()
}

const MU_PANELS: usize = 16;
const N_PHI: usize = 128;
const RADIAL_PANELS: usize = 8;

/// Frequency of the harmonic lift U(x, t) = u(x)e^{kt} on the 3-ball of radius r at (c, 0).
struct Lift<'a> {
    u: &'a DiscreteSolution,
    k: f64,
    c: Vec2,
    mu: Vec<(f64, f64)>,
}

impl<'a> Lift<'a> {
    fn new(u: &'a DiscreteSolution, lambda: f64, c: Vec2) -> Self {
        Self { u, k: lambda.sqrt(), c, mu: gauss(-1.0, 1.0, MU_PANELS) }
    }

    /// ∫_{S²} g(c + ρ√(1−μ²)e_φ, ρμ) over the unit sphere.
    fn sphere(&self, rho: f64, g: impl Fn(Vec2, f64) -> f64 + Sync) -> f64 {
        let dphi = 2.0 * PI / N_PHI as f64;
        self.mu
            .par_iter()
            .map(|&(mu, w)| {
                let s = rho * (1.0 - mu * mu).sqrt();
                let t = rho * mu;
                let ring: f64 = (0..N_PHI)
                    .map(|j| {
                        let ph = (j as f64 + 0.5) * dphi;
                        g(self.c + Vec2::new(ph.cos(), ph.sin()) * s, t)
                    })
                    .sum();
                w * ring * dphi
            })
            .sum()
    }

    /// ∫_{∂B_r} U² dσ.
    fn height(&self, r: f64) -> f64 {
        r * r * self.sphere(r, |p, t| {
            let v = self.u.eval(p);
            v * v * (2.0 * self.k * t).exp()
        })
    }

    /// (r/2) d/dr log(r⁻² ∫_{∂B_r} U²), by a central difference.
    fn log_derivative(&self, r: f64) -> f64 {
        let e = 0.05;
        let (a, b) = (r * (1.0 - e), r * (1.0 + e));
        let la = (self.height(a) / (a * a)).ln();
        let lb = (self.height(b) / (b * b)).ln();
        0.5 * r * (lb - la) / (b - a)
    }

    /// r ∫_{B_r}|∇U|² / ∫_{∂B_r} U².
    fn energy_ratio(&self, r: f64) -> f64 {
        let mesh = self.u.mesh();
        let k2 = self.k * self.k;
        let energy: f64 = gauss(0.0, r, RADIAL_PANELS)
            .iter()
            .map(|&(rho, w)| {
                let inner = self.sphere(rho, |p, t| match mesh.locate(p) {
                    Some((tri, _)) => {
                        let v = self.u.eval(p);
                        let g = self.u.gradient_on(tri);
                        (g.norm_squared() + k2 * v * v) * (2.0 * self.k * t).exp()
                    }
                    None => 0.0,
                });
                w * rho * rho * inner
            })
            .sum();
        r * energy / self.height(r)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct YauRow {
    pub lambda: f64,
    pub length: f64,
    pub max_n: f64,
    pub length_ratio: f64,
    pub n_ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LiftCheck {
    pub mode: usize,
    pub center: [f64; 2],
    pub log_derivative: f64,
    pub energy_ratio: f64,
    pub rel_diff: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct YauReport {
    pub rows: Vec<YauRow>,
    /// max/min of length/√λ over modes with a nonempty nodal set.
    pub length_variation: f64,
    pub n_variation: f64,
    pub lift_checks: Vec<LiftCheck>,
    /// Least-squares slope of log length against log λ.
    pub length_exponent: Option<f64>,
}

fn variation(v: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

/// Eigenpairs, interior nodal lengths and lifted frequencies over a ball battery.
pub fn run(cfg: &crate::ExperimentConfig, meta: &Meta, out: &Path) -> Result<Outcome> {
    let p = cfg.yau.as_ref().ok_or_else(|| CliError::missing("yau"))?;
    if p.count == 0 || p.count > 50 {
        return Err(CliError::Config(format!("yau.count = {} must lie in 1..=50", p.count)));
    }
    if p.grid == 0 || !(p.lo <= p.hi) || !(p.radius > 0.0) {
        return Err(CliError::Config("yau needs grid ≥ 1, lo ≤ hi and radius > 0".into()));
    }
    let domain = cfg.domain()?;
    let field = cfg.coefficient_field()?;
    let h = cfg.mesh_h()?;
    let sys = System::build(&domain, &field, &MeshOptions::uniform(h), SolverOptions::default())?;
    let mut eopts = EigenOptions::default();
    if let Some(s) = cfg.seed {
        eopts.seed = s;
    }
    let pairs = eigenpairs(&sys, p.count, &eopts)?;

    let centers: Vec<Vec2> = (0..p.grid * p.grid)
        .map(|i| {
            let t = |j: usize| if p.grid == 1 { 0.5 * (p.lo + p.hi) } else { p.lo + (p.hi - p.lo) * j as f64 / (p.grid - 1) as f64 };
            Vec2::new(t(i % p.grid), t(i / p.grid))
        })
        .collect();
    for &c in &centers {
        let inside = (0..8).all(|j| {
            let th = j as f64 * PI / 4.0;
            domain.contains(c + Vec2::new(th.cos(), th.sin()) * p.radius)
        });
        if !inside {
            return Err(CliError::Config(format!("battery ball at {c:?} with radius {} leaves the domain", p.radius)));
        }
    }

    let mut rows = Vec::with_capacity(pairs.len());
    let mut lift_checks = Vec::new();
    for (mode, pair) in pairs.iter().enumerate() {
        let length = extract_zero_set(&pair.vector, Region::Everywhere).total_length;
        let max_n = centers
            .iter()
            .map(|&c| Lift::new(&pair.vector, pair.lambda, c).log_derivative(p.radius))
            .fold(f64::NEG_INFINITY, f64::max);
        let sq = pair.lambda.sqrt();
        rows.push(YauRow { lambda: pair.lambda, length, max_n, length_ratio: length / sq, n_ratio: max_n / sq });
        if mode < p.lift_checks {
            let c = centers[centers.len() / 2];
            let lift = Lift::new(&pair.vector, pair.lambda, c);
            let (a, b) = (lift.log_derivative(p.radius), lift.energy_ratio(p.radius));
            lift_checks.push(LiftCheck { mode, center: [c.x, c.y], log_derivative: a, energy_ratio: b, rel_diff: (a - b).abs() / b });
        }
    }

    let length_variation = variation(rows.iter().filter(|r| r.length > 0.0).map(|r| r.length_ratio));
    let n_variation = variation(rows.iter().map(|r| r.n_ratio));
    let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.length > 0.0).map(|r| (r.lambda.ln(), r.length.ln())).collect();
    let length_exponent = slope(&pts);

    let mut failures = Vec::new();
    if !(length_variation <= p.max_variation) {
        failures.push(format!("length/√λ varies by {length_variation} > {}", p.max_variation));
    }
    if !(n_variation <= p.max_variation) {
        failures.push(format!("max N/√λ varies by {n_variation} > {}", p.max_variation));
    }
    for l in &lift_checks {
        if !(l.rel_diff <= 0.1) {
            failures.push(format!("lift of mode {} is not harmonic: routes differ by {}", l.mode, l.rel_diff));
        }
    }

    let mut body = String::from("lambda,length,max_N,length_ratio,N_ratio\n");
    for r in &rows {
        body.push_str(&format!("{},{},{},{},{}\n", num(r.lambda), num(r.length), num(r.max_n), num(r.length_ratio), num(r.n_ratio)));
    }
    let csv = write_csv(out, "yau_scan.csv", meta, &body)?;
    let report = YauReport { rows, length_variation, n_variation, lift_checks, length_exponent };
    let json = write_json(out, "yau_scan.json", meta, &report)?;
    let summary = serde_json::json!({
        "length_variation": length_variation,
        "n_variation": n_variation,
        "length_exponent": length_exponent,
    });
    Ok(Outcome { files: vec![csv, json], failures, summary })
}

fn slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / m, pts.iter().map(|p| p.1).sum::<f64>() / m);
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 1e-12).then(|| pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}
