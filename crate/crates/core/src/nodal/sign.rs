use rayon::prelude::*;
use serde::Serialize;

use super::{box_counting_dimension, h_at, BoxCount};
use crate::error::{invalid, Error, Result};
use crate::geometry::{Domain, Vec2};
use crate::solver::{normal_derivative_trace, DiscreteSolution};
use crate::whitney::{SignState, Square};

/// Nodes used for sign tests: interior and deeper than `layer` below Σ.
fn eligible(u: &DiscreteSolution, domain: &Domain, i: usize, layer: f64) -> bool {
    let p = u.mesh().nodes()[i];
    !u.mesh().tags()[i].is_boundary() && domain.dist_to_sigma(p) > layer
}

/// Sign-constant radius and sign at a point of Σ.
fn ball_and_sign(u: &DiscreteSolution, domain: &Domain, x: Vec2, rho_max: f64) -> Result<(f64, i8)> {
    let mesh = u.mesh();
    let h = h_at(mesh, x);
    if !(rho_max > 0.0) {
        return invalid(format!("ρ_max = {rho_max} must be positive"));
    }
    if domain.dist_to_sigma(x) > 2.0 * h {
        return invalid(format!("center {:?} is not within 2h = {} of Σ", [x.x, x.y], 2.0 * h));
    }
    if rho_max < 4.0 * h {
        return Ok((0.0, 0));
    }
    let vals = u.values();
    let mut r = rho_max.min(8.0 * h);
    loop {
        let mut near: Vec<(f64, usize)> = mesh
            .nodes_within(x, r)
            .into_iter()
            .filter(|&i| eligible(u, domain, i, 2.0 * h))
            .map(|i| ((mesh.nodes()[i] - x).norm(), i))
            .collect();
        near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        if let Some(&(_, first)) = near.first() {
            let sign = vals[first].signum();
            let hit = near.iter().find(|&&(_, i)| vals[i] == 0.0 || vals[i].signum() != sign);
            let rho = match hit {
                Some(&(d, _)) => d.min(rho_max),
                None if r >= rho_max => rho_max,
                None => {
                    r = (2.0 * r).min(rho_max);
                    continue;
                }
            };
            return Ok(if rho < 4.0 * h || vals[first] == 0.0 { (0.0, 0) } else { (rho, sign as i8) });
        }
        if r >= rho_max {
            return Ok((0.0, 0));
        }
        r = (2.0 * r).min(rho_max);
    }
}

/// Largest ρ ≤ ρ_max such that u has one strict sign on the mesh nodes of
/// B(x, ρ) ∩ Ω deeper than 2h below Σ; 0 when that fails already at 4h.
///
/// The radius is the distance to the nearest offending node, so the result is
/// exact for the nodal test rather than a bisection estimate.
pub fn sign_constant_ball(u: &DiscreteSolution, domain: &Domain, x: Vec2, rho_max: f64) -> Result<f64> {
    ball_and_sign(u, domain, x, rho_max).map(|(r, _)| r)
}

/// Sign test on t(Q) ∩ Ω, ignoring nodes within 2h of Σ.
pub fn square_sign_state(u: &DiscreteSolution, domain: &Domain, sq: &Square) -> Result<SignState> {
    let mesh = u.mesh();
    let layer = 2.0 * h_at(mesh, sq.center);
    let vals = u.values();
    let mut pos = false;
    let mut neg = false;
    let mut seen = 0;
    for i in mesh.nodes_within(sq.center, 0.5 * sq.diam()) {
        if !sq.contains(mesh.nodes()[i]) || !eligible(u, domain, i, layer) {
            continue;
        }
        seen += 1;
        let v = vals[i];
        pos |= v >= 0.0;
        neg |= v <= 0.0;
    }
    if seen == 0 {
        return invalid(format!("no mesh node resolves the square at {:?}", [sq.center.x, sq.center.y]));
    }
    Ok(if pos && neg { SignState::HasZeros } else { SignState::NoZeros })
}

fn sigma_points(domain: &Domain, xs: &[f64]) -> Result<Vec<Vec2>> {
    xs.iter()
        .map(|&x| domain.sigma_point(x).ok_or_else(|| Error::InvalidInput(format!("abscissa {x} is not on Σ"))))
        .collect()
}

/// Σ-samples at which every ball of radius below r_floor sees a sign change.
pub fn detect_sign_change_points(u: &DiscreteSolution, domain: &Domain, xs: &[f64], r_floor: f64) -> Result<Vec<f64>> {
    let pts = sigma_points(domain, xs)?;
    let hits: Vec<bool> = pts
        .par_iter()
        .map(|&p| {
            let h = h_at(u.mesh(), p);
            if r_floor < 4.0 * h {
                return invalid(format!("r_floor = {r_floor} is below 4h = {}", 4.0 * h));
            }
            Ok(sign_constant_ball(u, domain, p, r_floor)? < r_floor)
        })
        .collect::<Result<_>>()?;
    Ok(xs.iter().zip(hits).filter(|(_, h)| *h).map(|(&x, _)| x).collect())
}

/// Σ-samples with |∂_ν u| below the threshold.
pub fn detect_small_gradient_points(u: &DiscreteSolution, domain: &Domain, xs: &[f64], threshold: f64) -> Result<Vec<f64>> {
    let trace = normal_derivative_trace(u, domain, xs)?;
    Ok(xs.iter().zip(trace).filter(|(_, g)| g.abs() < threshold).map(|(&x, _)| x).collect())
}

/// A ball of the cover, centered on Σ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoverBall {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
    pub sign: i8,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverReport {
    pub window: [f64; 2],
    pub r_floor: f64,
    pub samples: usize,
    pub balls: Vec<CoverBall>,
    pub residual: Vec<[f64; 2]>,
    pub boxcount: Option<BoxCount>,
}

/// Greedy cover of the Σ-window by sign-constant balls, largest first.
///
/// Samples are spaced r_floor/4. A ball's reported radius is its nodal radius
/// minus the 2h boundary layer, so residual samples lie outside every ball.
pub fn cover_report(u: &DiscreteSolution, domain: &Domain, window: [f64; 2], r_floor: f64) -> Result<CoverReport> {
    let [x0, x1] = window;
    if !(x1 > x0) || !(r_floor > 0.0) {
        return invalid("need x0 < x1 and r_floor > 0");
    }
    let n = ((x1 - x0) / (0.25 * r_floor)).round().max(1.0) as usize;
    let xs: Vec<f64> = (0..=n).map(|i| x0 + (x1 - x0) * i as f64 / n as f64).collect();
    let pts = sigma_points(domain, &xs)?;
    let rho_max = x1 - x0;
    let found: Vec<(f64, i8)> = pts.par_iter().map(|&p| ball_and_sign(u, domain, p, rho_max)).collect::<Result<_>>()?;
    let mid = 0.5 * (x0 + x1);
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by(|&a, &b| {
        found[b].0.total_cmp(&found[a].0).then((xs[a] - mid).abs().total_cmp(&(xs[b] - mid).abs())).then(a.cmp(&b))
    });
    let mut balls: Vec<CoverBall> = Vec::new();
    let inside = |balls: &[CoverBall], p: Vec2| balls.iter().any(|b| (p - Vec2::new(b.cx, b.cy)).norm() < b.r);
    for i in order {
        let (rho, sign) = found[i];
        if rho == 0.0 {
            break;
        }
        let p = pts[i];
        if inside(&balls, p) {
            continue;
        }
        let r = rho - 2.0 * h_at(u.mesh(), p);
        balls.push(CoverBall { cx: p.x, cy: p.y, r, sign });
    }
    let residual_pts: Vec<Vec2> = pts.iter().copied().filter(|&p| !inside(&balls, p)).collect();
    let boxcount = if residual_pts.is_empty() { None } else { Some(box_counting_dimension(&residual_pts, 14)?) };
    Ok(CoverReport {
        window,
        r_floor,
        samples: pts.len(),
        balls,
        residual: residual_pts.iter().map(|p| [p.x, p.y]).collect(),
        boxcount,
    })
}
