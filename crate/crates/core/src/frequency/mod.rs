//! Height H(x,r), energy I(x,r) and frequency N(x,r) = rI/H of a discrete solution,
//! including centers where A(x) ≠ I, together with the check suites built on them.

mod checks;
mod order;
mod quadrature;

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::geometry::{admissible, sqrtm_spd, AdmissibleCfg, CoefficientField, Domain, Mat2, Vec2};
use crate::solver::DiscreteSolution;

pub use checks::{
    check_annulus_bounds, check_ball_average, check_center_perturbation, check_growth_bound, check_h_derivative,
    check_h_transfer, check_n_monotone, AnnulusReport, BallAverageReport, CenterReport, CheckCfg, GrowthReport,
    HDerivativeReport, HTransferReport, MonotoneReport,
};
pub use order::{doubling_exponent, vanishing_order_estimate, OrderEstimate};
pub use quadrature::{polar_integral, triangle_disk_area};

/// Quadrature and admissibility settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrequencyCfg {
    /// Samples on the sphere.
    pub n_sphere: usize,
    pub admissible: AdmissibleCfg,
    /// H below this is treated as exact zero.
    pub zero_h: f64,
}

impl Default for FrequencyCfg {
    fn default() -> Self {
        Self { n_sphere: 2048, admissible: AdmissibleCfg::default(), zero_h: 1e-30 }
    }
}

/// μ_x(y) = (A(y)(y−x), y−x)/|y−x|².
pub fn mu_weight(field: &CoefficientField, x: Vec2, y: Vec2) -> Result<f64> {
    field.mu(x, y)
}

/// The normalizing square root S̃ = A(x)^{1/2} at a center.
#[derive(Clone, Copy, Debug)]
struct Frame {
    x: Vec2,
    s: Mat2,
    s_inv: Mat2,
    identity: bool,
}

impl Frame {
    fn new(field: &CoefficientField, x: Vec2, tol: f64) -> Result<Self> {
        let a = field.at(x);
        if (a - Mat2::identity()).abs().max() <= tol {
            return Ok(Self { x, s: Mat2::identity(), s_inv: Mat2::identity(), identity: true });
        }
        let s = sqrtm_spd(&a)?;
        let s_inv = s.try_inverse().ok_or(Error::NotPositiveDefinite(0.0))?;
        Ok(Self { x, s, s_inv, identity: false })
    }

    /// Radius of a round ball containing x + S̃B_r.
    fn reach(&self, r: f64) -> f64 {
        if self.identity {
            r
        } else {
            r * self.s.singular_values().max()
        }
    }
}

/// One (r, H, I, N) sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrequencySample {
    pub r: f64,
    pub h: f64,
    pub i: f64,
    /// `None` when H is numerically zero.
    pub n: Option<f64>,
    pub admissible: bool,
}

fn height_in_frame(u: &DiscreteSolution, fr: &Frame, r: f64, n: usize) -> f64 {
    let field = u.field();
    let step = 2.0 * PI / n as f64;
    let terms: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|j| {
            let th = j as f64 * step;
            let e = Vec2::new(th.cos(), th.sin());
            let z = fr.x + fr.s * e * r;
            let val = u.eval(z);
            if val == 0.0 {
                return 0.0;
            }
            let mu = if fr.identity && field.is_identity() {
                1.0
            } else {
                let at = fr.s_inv * field.at(z) * fr.s_inv;
                (at * e).dot(&e)
            };
            mu * val * val
        })
        .collect();
    step * terms.iter().sum::<f64>()
}

fn energy_in_frame(u: &DiscreteSolution, fr: &Frame, r: f64) -> f64 {
    let mesh = u.mesh();
    let cand = mesh.triangles_near(fr.x, fr.reach(r));
    let parts: Vec<f64> = cand
        .par_iter()
        .map(|&t| {
            let p = mesh.triangle(t).map(|v| fr.s_inv * (v - fr.x));
            let area = triangle_disk_area(p[0], p[1], p[2], r);
            if area <= 0.0 {
                0.0
            } else {
                u.energy_density(t) * area
            }
        })
        .collect();
    parts.iter().sum::<f64>() / r
}

fn check_center(domain: &Domain, x: Vec2) -> Result<()> {
    if domain.contains(x) || domain.on_sigma(x, 1e-12) {
        Ok(())
    } else {
        invalid(format!("center ({}, {}) is not in Ω ∪ Σ", x.x, x.y))
    }
}

/// H(x, r) in the normalized frame of x.
pub fn h_of(u: &DiscreteSolution, domain: &Domain, x: Vec2, r: f64, cfg: &FrequencyCfg) -> Result<f64> {
    check_radius(r)?;
    check_center(domain, x)?;
    let fr = Frame::new(u.field(), x, cfg.admissible.identity_tol)?;
    domain.check_ball(x, fr.reach(r))?;
    Ok(height_in_frame(u, &fr, r, cfg.n_sphere))
}

/// I(x, r) in the normalized frame of x.
pub fn i_of(u: &DiscreteSolution, domain: &Domain, x: Vec2, r: f64, cfg: &FrequencyCfg) -> Result<f64> {
    check_radius(r)?;
    check_center(domain, x)?;
    let fr = Frame::new(u.field(), x, cfg.admissible.identity_tol)?;
    domain.check_ball(x, fr.reach(r))?;
    Ok(energy_in_frame(u, &fr, r))
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        invalid(format!("radius must be positive, got {r}"))
    }
}

/// H, I, N and the admissibility flag at one radius.
pub fn frequency_at(u: &DiscreteSolution, domain: &Domain, x: Vec2, r: f64, cfg: &FrequencyCfg) -> Result<FrequencySample> {
    check_radius(r)?;
    check_center(domain, x)?;
    let fr = Frame::new(u.field(), x, cfg.admissible.identity_tol)?;
    domain.check_ball(x, fr.reach(r))?;
    let h = height_in_frame(u, &fr, r, cfg.n_sphere);
    let i = energy_in_frame(u, &fr, r);
    let n = (h >= cfg.zero_h).then(|| r * i / h);
    let adm = admissible(x, r, domain, u.field(), &cfg.admissible).unwrap_or(false);
    Ok(FrequencySample { r, h, i, n, admissible: adm })
}

/// N(x, r), failing when H vanishes.
pub fn frequency(u: &DiscreteSolution, domain: &Domain, x: Vec2, r: f64, cfg: &FrequencyCfg) -> Result<f64> {
    frequency_at(u, domain, x, r, cfg)?.n.ok_or(Error::VanishingHeight { r })
}

/// Sampled frequency data at one center.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyProfile {
    pub center: Vec2,
    pub radii: Vec<f64>,
    pub h_values: Vec<f64>,
    pub i_values: Vec<f64>,
    /// NaN where H is numerically zero.
    pub n_values: Vec<f64>,
    pub admissible_flags: Vec<bool>,
    /// Radii where H fell below the zero threshold.
    pub zero_flags: Vec<bool>,
    pub c_h: f64,
    pub c_n: f64,
}

impl FrequencyProfile {
    pub fn all_admissible(&self) -> bool {
        self.admissible_flags.iter().all(|&a| a)
    }

    /// Writes `r,H,I,N,admissible` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "r,H,I,N,admissible")?;
        for k in 0..self.radii.len() {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{}",
                self.radii[k], self.h_values[k], self.i_values[k], self.n_values[k], self.admissible_flags[k]
            )?;
        }
        Ok(())
    }
}

/// Profile at explicit radii (ascending).
pub fn profile_at(u: &DiscreteSolution, domain: &Domain, x: Vec2, radii: &[f64], cfg: &FrequencyCfg) -> Result<FrequencyProfile> {
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return invalid("radii must be strictly ascending");
    }
    let samples: Vec<FrequencySample> =
        radii.iter().map(|&r| frequency_at(u, domain, x, r, cfg)).collect::<Result<_>>()?;
    let l = u.field().lipschitz();
    Ok(FrequencyProfile {
        center: x,
        radii: radii.to_vec(),
        h_values: samples.iter().map(|s| s.h).collect(),
        i_values: samples.iter().map(|s| s.i).collect(),
        n_values: samples.iter().map(|s| s.n.unwrap_or(f64::NAN)).collect(),
        admissible_flags: samples.iter().map(|s| s.admissible).collect(),
        zero_flags: samples.iter().map(|s| s.n.is_none()).collect(),
        c_h: 10.0 * l,
        c_n: 10.0 * l,
    })
}

/// Profile at `n_samples` equally spaced radii in [r_min, r_max].
pub fn frequency_profile(
    u: &DiscreteSolution,
    domain: &Domain,
    x: Vec2,
    r_min: f64,
    r_max: f64,
    n_samples: usize,
    cfg: &FrequencyCfg,
) -> Result<FrequencyProfile> {
    if n_samples < 8 {
        return invalid("a profile needs at least 8 radii");
    }
    if !(r_min > 0.0 && r_max > r_min) {
        return invalid("need 0 < r_min < r_max");
    }
    let radii: Vec<f64> =
        (0..n_samples).map(|k| r_min + (r_max - r_min) * k as f64 / (n_samples - 1) as f64).collect();
    profile_at(u, domain, x, &radii, cfg)
}
