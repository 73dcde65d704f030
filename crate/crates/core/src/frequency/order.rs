use super::{h_of, FrequencyCfg};
use crate::error::{invalid, Error, Result};
use crate::geometry::{Domain, Vec2};
use crate::solver::DiscreteSolution;

/// log₂ √(H(x,2r)/H(x,r)).
pub fn doubling_exponent(u: &DiscreteSolution, domain: &Domain, x: Vec2, r: f64, cfg: &FrequencyCfg) -> Result<f64> {
    let h1 = h_of(u, domain, x, r, cfg)?;
    if h1 < cfg.zero_h {
        return Err(Error::VanishingHeight { r });
    }
    let h2 = h_of(u, domain, x, 2.0 * r, cfg)?;
    Ok(0.5 * (h2 / h1).log2())
}

/// Extrapolated vanishing order.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderEstimate {
    pub order: f64,
    pub uncertainty: f64,
    /// (r, doubling exponent) from the largest radius down.
    pub exponents: Vec<(f64, f64)>,
    /// Aitken-accelerated values.
    pub accelerated: Vec<f64>,
    /// False when the last three exponents are not monotone.
    pub monotone_tail: bool,
}

/// Aitken Δ² extrapolation of the doubling exponents over a ratio-2 radius sequence.
pub fn vanishing_order_estimate(
    u: &DiscreteSolution,
    domain: &Domain,
    x: Vec2,
    radii: &[f64],
    cfg: &FrequencyCfg,
) -> Result<OrderEstimate> {
    if radii.len() < 4 {
        return invalid("need at least 4 radii");
    }
    let mut rs = radii.to_vec();
    rs.sort_by(|a, b| b.total_cmp(a));
    if rs.windows(2).any(|w| ((w[0] / w[1]) - 2.0).abs() > 1e-9) {
        return invalid("radii must form a geometric sequence with ratio 2");
    }
    let exponents: Vec<(f64, f64)> =
        rs.iter().map(|&r| doubling_exponent(u, domain, x, r, cfg).map(|d| (r, d))).collect::<Result<_>>()?;
    let d: Vec<f64> = exponents.iter().map(|e| e.1).collect();
    let accelerated = aitken(&d);
    let n = d.len();
    let monotone_tail = (d[n - 1] - d[n - 2]) * (d[n - 2] - d[n - 3]) >= 0.0;
    let m = accelerated.len();
    let order = accelerated[m - 1];
    let uncertainty = if m >= 2 { (accelerated[m - 1] - accelerated[m - 2]).abs() } else { (d[n - 1] - d[n - 2]).abs() };
    Ok(OrderEstimate { order, uncertainty, exponents, accelerated, monotone_tail })
}

/// Aitken Δ² over consecutive triples; falls back to the last term when the
/// differences do not contract.
pub(crate) fn aitken(d: &[f64]) -> Vec<f64> {
    d.windows(3)
        .map(|w| {
            let (d1, d2) = (w[1] - w[0], w[2] - w[1]);
            let den = d2 - d1;
            if den.abs() < 1e-14 || d1 == 0.0 || (d2 / d1).abs() >= 1.0 || d2 / d1 < 0.0 {
                w[2]
            } else {
                w[2] - d2 * d2 / den
            }
        })
        .collect()
}
