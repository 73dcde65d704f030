use std::f64::consts::PI;

use super::{frequency_at, h_of, polar_integral, FrequencyCfg, FrequencyProfile};
use crate::error::{invalid, Error, Result};
use crate::geometry::{admissible, sqrtm_spd, sym_eigen, Domain, Mat2, Vec2};
use crate::solver::DiscreteSolution;

/// Constants shared by the check suites.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CheckCfg {
    /// Multiplier κ in the bounds κ·L_A.
    pub kappa: f64,
    /// Additive slack for fitted constants (quadrature noise).
    pub slack: f64,
    /// Relative slack for the two-sided sandwiches.
    pub sandwich_slack: f64,
    /// c_H; `None` means 10·L_A.
    pub c_h: Option<f64>,
    /// C_N; `None` means 10·L_A.
    pub c_n: Option<f64>,
    /// Bound asserted on the fitted constants of the perturbation checks.
    pub max_constant: f64,
}

impl Default for CheckCfg {
    fn default() -> Self {
        Self { kappa: 10.0, slack: 2e-2, sandwich_slack: 1e-2, c_h: None, c_n: None, max_constant: 10.0 }
    }
}

impl CheckCfg {
    pub fn c_h(&self, lipschitz: f64) -> f64 {
        self.c_h.unwrap_or(10.0 * lipschitz)
    }

    pub fn c_n(&self, lipschitz: f64) -> f64 {
        self.c_n.unwrap_or(10.0 * lipschitz)
    }
}

/// H′ against 2I.
#[derive(Clone, Debug, PartialEq)]
pub struct HDerivativeReport {
    /// max |H′ − 2I| / H over the profile radii.
    pub max_residual: f64,
    /// Smallest c ≥ 0 with e^{cr}H nondecreasing across the samples.
    pub monotone_c: f64,
    /// Largest relative decrease of H between consecutive samples.
    pub max_rel_drop: f64,
    pub bound: f64,
    pub pass: bool,
}

/// H′ by a five-point difference with step `step` (default 2h) at every profile radius.
pub fn check_h_derivative(
    profile: &FrequencyProfile,
    u: &DiscreteSolution,
    domain: &Domain,
    step: Option<f64>,
    fcfg: &FrequencyCfg,
    cfg: &CheckCfg,
) -> Result<HDerivativeReport> {
    let d = step.unwrap_or(2.0 * u.mesh().h());
    let x = profile.center;
    let mut max_residual: f64 = 0.0;
    for (k, &r) in profile.radii.iter().enumerate() {
        if r - 2.0 * d <= 0.0 {
            return invalid(format!("radius {r} too small for difference step {d}"));
        }
        let hv = |s: f64| h_of(u, domain, x, s, fcfg);
        let dh = (-hv(r + 2.0 * d)? + 8.0 * hv(r + d)? - 8.0 * hv(r - d)? + hv(r - 2.0 * d)?) / (12.0 * d);
        let h = profile.h_values[k];
        if h < fcfg.zero_h {
            continue;
        }
        max_residual = max_residual.max((dh - 2.0 * profile.i_values[k]).abs() / h);
    }
    let (monotone_c, max_rel_drop) = monotone_fit(&profile.radii, &profile.h_values);
    let bound = cfg.kappa * u.field().lipschitz() + cfg.slack;
    Ok(HDerivativeReport { max_residual, monotone_c, max_rel_drop, bound, pass: max_residual <= bound })
}

/// Smallest c ≥ 0 making e^{cr}v(r) nondecreasing, and the largest relative drop.
fn monotone_fit(r: &[f64], v: &[f64]) -> (f64, f64) {
    let mut c: f64 = 0.0;
    let mut drop: f64 = 0.0;
    for k in 0..r.len().saturating_sub(1) {
        let (a, b) = (v[k], v[k + 1]);
        if !(a > 0.0 && b > 0.0) {
            continue;
        }
        if b < a {
            c = c.max((a / b).ln() / (r[k + 1] - r[k]));
            drop = drop.max((a - b) / a);
        }
    }
    (c, drop)
}

/// Almost-monotonicity of N.
#[derive(Clone, Debug, PartialEq)]
pub struct MonotoneReport {
    /// False when some radius is inadmissible.
    pub applicable: bool,
    /// Whether the assertion is made (Λ_A < 2).
    pub asserted: bool,
    /// Smallest Ĉ ≥ 0 with e^{rĈ}N(r) nondecreasing.
    pub c_hat: f64,
    /// Largest relative decrease of N between consecutive samples.
    pub max_rel_drop: f64,
    pub bound: f64,
    pub pass: bool,
}

pub fn check_n_monotone(profile: &FrequencyProfile, lipschitz: f64, lambda: f64, cfg: &CheckCfg) -> MonotoneReport {
    let bound = cfg.kappa * lipschitz + cfg.slack;
    if !profile.all_admissible() || profile.zero_flags.iter().any(|&z| z) {
        return MonotoneReport { applicable: false, asserted: false, c_hat: f64::NAN, max_rel_drop: f64::NAN, bound, pass: false };
    }
    let (c_hat, max_rel_drop) = monotone_fit(&profile.radii, &profile.n_values);
    let asserted = lambda < 2.0;
    MonotoneReport { applicable: true, asserted, c_hat, max_rel_drop, bound, pass: !asserted || c_hat <= bound }
}

/// Two-sided growth bound for log(H(αρ)/H(ρ)).
#[derive(Clone, Debug, PartialEq)]
pub struct GrowthReport {
    pub rho: f64,
    pub alpha: f64,
    pub lower: f64,
    pub log_ratio: f64,
    pub upper: f64,
    pub pass: bool,
}

pub fn check_growth_bound(
    u: &DiscreteSolution,
    domain: &Domain,
    x: Vec2,
    rho: f64,
    alpha: f64,
    fcfg: &FrequencyCfg,
    cfg: &CheckCfg,
) -> Result<GrowthReport> {
    if !(alpha > 1.0) {
        return invalid("α must exceed 1");
    }
    require_identity(u, x, fcfg)?;
    let a = frequency_at(u, domain, x, rho, fcfg)?;
    let b = frequency_at(u, domain, x, alpha * rho, fcfg)?;
    if !b.admissible {
        return Err(Error::Inadmissible(format!("(x, {}) is not admissible", alpha * rho)));
    }
    let (na, nb) = match (a.n, b.n) {
        (Some(p), Some(q)) => (p, q),
        _ => return Err(Error::VanishingHeight { r: rho }),
    };
    let l = u.field().lipschitz();
    let (ch, cn) = (cfg.c_h(l), cfg.c_n(l));
    let la = alpha.ln();
    let lower = 2.0 * na * la * (-cn * (alpha - 1.0) * rho).exp() - ch * (alpha - 1.0) * rho;
    let upper = 2.0 * nb * la * (cn * (alpha - 1.0) * rho).exp() + ch * (alpha - 1.0) * rho;
    let log_ratio = (b.h / a.h).ln();
    let s = cfg.sandwich_slack;
    let pass = lower - s * lower.abs() <= log_ratio && log_ratio <= upper + s * upper.abs();
    Ok(GrowthReport { rho, alpha, lower, log_ratio, upper, pass })
}

fn require_identity(u: &DiscreteSolution, x: Vec2, fcfg: &FrequencyCfg) -> Result<()> {
    if (u.field().at(x) - Mat2::identity()).abs().max() > fcfg.admissible.identity_tol {
        return invalid("the check requires A(x) = I; normalize the field first");
    }
    Ok(())
}

/// Annulus-average sandwich.
#[derive(Clone, Debug, PartialEq)]
pub struct AnnulusReport {
    pub r: f64,
    pub delta: f64,
    pub lower: f64,
    pub mean: f64,
    pub upper: f64,
    pub pass: bool,
}

fn polar_panels(u: &DiscreteSolution, width: f64) -> usize {
    ((width / u.mesh().h()).ceil() as usize).clamp(2, 64)
}

pub fn check_annulus_bounds(
    u: &DiscreteSolution,
    domain: &Domain,
    x: Vec2,
    r: f64,
    delta: f64,
    fcfg: &FrequencyCfg,
    cfg: &CheckCfg,
) -> Result<AnnulusReport> {
    if !(r > 0.0 && delta > 0.0) {
        return invalid("need r > 0 and δ > 0");
    }
    require_identity(u, x, fcfg)?;
    domain.check_ball(x, r + delta)?;
    let c = cfg.c_h(u.field().lipschitz());
    let field = u.field();
    let integrand = |y: Vec2| {
        let v = u.eval(y);
        if v == 0.0 {
            return 0.0;
        }
        let d = y - x;
        let mu = (field.at(y) * d).dot(&d) / d.norm_squared();
        (c * d.norm()).exp() * mu * v * v
    };
    let total = polar_integral(integrand, x, r, r + delta, polar_panels(u, delta), fcfg.n_sphere);
    let mean = total / (PI * ((r + delta).powi(2) - r * r));
    let norm = 2.0 * PI;
    let lower = (c * r).exp() * h_of(u, domain, x, r, fcfg)? / norm;
    let upper = (c * (r + delta)).exp() * h_of(u, domain, x, r + delta, fcfg)? / norm;
    let s = cfg.sandwich_slack;
    let pass = lower * (1.0 - s) <= mean && mean <= upper * (1.0 + s);
    Ok(AnnulusReport { r, delta, lower, mean, upper, pass })
}

/// Ball average of |u|² against H at the Λ-enlarged radius.
#[derive(Clone, Debug, PartialEq)]
pub struct BallAverageReport {
    pub r: f64,
    pub mean: f64,
    pub h_scaled: f64,
    /// mean / (e^{c_H Λ^{1/2} r} H(x, Λ^{1/2} r)).
    pub kappa_needed: f64,
    pub pass: bool,
}

pub fn check_ball_average(
    u: &DiscreteSolution,
    domain: &Domain,
    x: Vec2,
    r: f64,
    fcfg: &FrequencyCfg,
    cfg: &CheckCfg,
) -> Result<BallAverageReport> {
    let lam = u.field().lambda();
    let rs = lam.sqrt() * r;
    domain.check_ball(x, rs)?;
    let total = polar_integral(
        |y| {
            let v = u.eval(y);
            v * v
        },
        x,
        0.0,
        r,
        polar_panels(u, r),
        fcfg.n_sphere,
    );
    let mean = total / (PI * r * r);
    let c = cfg.c_h(u.field().lipschitz());
    let h_scaled = (c * rs).exp() * h_of(u, domain, x, rs, fcfg)?;
    if h_scaled < fcfg.zero_h {
        return Err(Error::VanishingHeight { r: rs });
    }
    let kappa_needed = mean / h_scaled;
    Ok(BallAverageReport { r, mean, h_scaled, kappa_needed, pass: kappa_needed <= cfg.max_constant })
}

/// H(x, r) against H at a nearby center.
#[derive(Clone, Debug, PartialEq)]
pub struct HTransferReport {
    pub h_x: f64,
    pub h_z: f64,
    /// The explicit annulus-ratio constant C(γ, δ).
    pub c_bound: f64,
    pub ratio: f64,
    pub pass: bool,
}

#[allow(clippy::too_many_arguments)]
pub fn check_h_transfer(
    u: &DiscreteSolution,
    domain: &Domain,
    x: Vec2,
    z: Vec2,
    r: f64,
    gamma: f64,
    delta: f64,
    fcfg: &FrequencyCfg,
    cfg: &CheckCfg,
) -> Result<HTransferReport> {
    if !(gamma > 0.0 && gamma < 1.0) || !(delta > 0.0 && delta < 10.0) {
        return invalid("need γ ∈ (0,1) and δ ∈ (0,10)");
    }
    if (z - x).norm() > gamma * r {
        return invalid("|z − x| exceeds γr");
    }
    require_identity(u, x, fcfg)?;
    let s = sqrtm_spd(&u.field().at(z))?;
    let (lmin, lmax) = sym_eigen(&s);
    let c_bound = ((1.0 + gamma + delta) / lmin).powi(2) - ((1.0 - gamma) / lmax).powi(2);
    let c_bound = c_bound / ((1.0 + delta).powi(2) - 1.0);
    let rz = u.field().lambda().sqrt() * r * (1.0 + gamma + delta);
    let h_x = h_of(u, domain, x, r, fcfg)?;
    let h_z = h_of(u, domain, z, rz, fcfg)?;
    if h_z < fcfg.zero_h {
        return Err(Error::VanishingHeight { r: rz });
    }
    let ratio = h_x / h_z;
    Ok(HTransferReport { h_x, h_z, c_bound, ratio, pass: ratio <= c_bound * (1.0 + cfg.sandwich_slack) })
}

/// N(x, r) against N(z, 4r).
#[derive(Clone, Debug, PartialEq)]
pub struct CenterReport {
    pub n_x: f64,
    pub n_z: f64,
    /// Smallest C with N(x,r) ≤ C + C·N(z,4r).
    pub c_needed: f64,
    pub pass: bool,
}

#[allow(clippy::too_many_arguments)]
pub fn check_center_perturbation(
    u: &DiscreteSolution,
    domain: &Domain,
    x: Vec2,
    z: Vec2,
    r: f64,
    gamma: f64,
    fcfg: &FrequencyCfg,
    cfg: &CheckCfg,
) -> Result<CenterReport> {
    let lam = u.field().lambda();
    if !(gamma > 0.0 && gamma < 1.0 / (lam + 1.0)) {
        return invalid(format!("γ = {gamma} must lie in (0, 1/(Λ+1)) = (0, {})", 1.0 / (lam + 1.0)));
    }
    if (z - x).norm() > gamma * r {
        return invalid("|z − x| exceeds γr");
    }
    if !admissible(z, 4.0 * r, domain, u.field(), &fcfg.admissible)? {
        return Err(Error::Inadmissible(format!("(z, {}) is not admissible", 4.0 * r)));
    }
    let n_x = super::frequency(u, domain, x, r, fcfg)?;
    let n_z = super::frequency(u, domain, z, 4.0 * r, fcfg)?;
    let c_needed = n_x / (1.0 + n_z);
    Ok(CenterReport { n_x, n_z, c_needed, pass: c_needed <= cfg.max_constant })
}
