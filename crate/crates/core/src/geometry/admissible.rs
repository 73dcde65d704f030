use super::{CoefficientField, Domain, Mat2, Vec2};
use crate::error::{invalid, Result};

/// Options for the admissibility predicate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdmissibleCfg {
    /// The unspecified constant C in front of L_A.
    pub c: f64,
    /// Tolerance for treating A(x) as the identity.
    pub identity_tol: f64,
}

impl Default for AdmissibleCfg {
    fn default() -> Self {
        Self { c: 1.0, identity_tol: 1e-8 }
    }
}

/// Largest |slope| of Σ over the abscissae [x − r, x + r].
pub fn local_tau(domain: &Domain, x: Vec2, r: f64) -> f64 {
    let Some(g) = domain.graph() else { return 0.0 };
    let pts = g.polyline(x.x - r, x.x + r);
    pts.windows(2)
        .filter(|w| w[1].x > w[0].x)
        .map(|w| ((w[1].y - w[0].y) / (w[1].x - w[0].x)).abs())
        .fold(0.0, f64::max)
}

/// Whether (x, r) is admissible: either dist(x, Σ) > r, or the sufficient angle
/// condition holds (in its Λ-scaled form when A(x) ≠ I).
pub fn admissible(x: Vec2, r: f64, domain: &Domain, field: &CoefficientField, cfg: &AdmissibleCfg) -> Result<bool> {
    if !(r > 0.0) || !r.is_finite() {
        return invalid(format!("radius must be positive, got {r}"));
    }
    if !domain.contains(x) && !domain.on_sigma(x, 1e-12) {
        return invalid(format!("center ({}, {}) is not in Ω ∪ Σ", x.x, x.y));
    }
    let ax = field.at(x);
    let at_identity = (ax - Mat2::identity()).abs().max() <= cfg.identity_tol;
    let lam = if at_identity { 1.0 } else { field.lambda() };
    // the transformed ball has radius Λ^{1/2} r around x
    domain.check_ball(x, lam.sqrt() * r)?;
    let t = domain.dist_to_sigma(x);
    if t > lam * r {
        return Ok(true);
    }
    let tau = local_tau(domain, x, lam.sqrt() * r);
    let rhs = cfg.c * field.lipschitz() * lam.sqrt() * r;
    let ratio = (t / (lam * r)).min(1.0);
    let angle = ratio.acos() + (lam * tau).atan();
    Ok(ratio >= rhs && angle.cos() >= rhs)
}
