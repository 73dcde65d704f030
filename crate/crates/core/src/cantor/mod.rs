//! The Cantor-cone domain: Cantor intervals, base-(2k+1) digit statistics, the
//! separating-arc angle Θ(s), the dx/θ upper bound for harmonic measure and the
//! directly measured density ω(B)/r.

mod density;

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{invalid, Result};
use crate::geometry::{LipschitzGraph, Vec2};

pub use density::{measured_density, DensityCfg, DensityReport};

/// λ = 1/(2k+1); cones of boundary slope 1/a over the depth-n intervals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CantorSpec {
    pub k: u32,
    pub depth: u32,
    pub aperture: f64,
}

impl CantorSpec {
    pub fn new(k: u32, depth: u32, aperture: f64) -> Result<Self> {
        if k == 0 {
            return invalid("k must be at least 1");
        }
        if depth > 20 {
            return invalid("depth must be at most 20");
        }
        if !(aperture > 0.0 && aperture.is_finite()) {
            return invalid("aperture must be positive");
        }
        Ok(Self { k, depth, aperture })
    }

    pub fn lambda(&self) -> f64 {
        1.0 / (2 * self.k + 1) as f64
    }

    pub fn base(&self) -> u32 {
        2 * self.k + 1
    }

    /// Length of the smallest gaps of E_depth.
    pub fn gap_scale(&self) -> f64 {
        let l = self.lambda();
        l * (0.5 * (1.0 - l)).powi(self.depth as i32 - 1)
    }

    pub fn with_depth(&self, depth: u32) -> Self {
        Self { depth, ..*self }
    }
}

/// Hausdorff dimension log 2 / log(2/(1−λ)).
pub fn cantor_dimension(spec: &CantorSpec) -> f64 {
    2f64.ln() / (2.0 / (1.0 - spec.lambda())).ln()
}

/// Intervals of E_depth as integer numerators over the common denominator (2k+1)^depth.
pub fn cantor_intervals_exact(spec: &CantorSpec, depth: u32) -> Result<(Vec<(u128, u128)>, u128)> {
    if depth > 20 {
        return invalid("depth must be at most 20");
    }
    let b = spec.base() as u128;
    let k = spec.k as u128;
    if (depth as f64) * (b as f64).log2() > 126.0 {
        return invalid("denominator overflows 128 bits");
    }
    let mut iv = vec![(0u128, 1u128)];
    let mut den = 1u128;
    for _ in 0..depth {
        let mut next = Vec::with_capacity(iv.len() * 2);
        for &(l, r) in &iv {
            next.push((k * l, k * r));
        }
        for &(l, r) in &iv {
            next.push(((k + 1) * den + k * l, (k + 1) * den + k * r));
        }
        den *= b;
        iv = next;
    }
    Ok((iv, den))
}

/// The 2^depth closed intervals of E_depth, sorted.
pub fn cantor_intervals(spec: &CantorSpec, depth: u32) -> Result<Vec<(f64, f64)>> {
    let (iv, den) = cantor_intervals_exact(spec, depth)?;
    let d = den as f64;
    Ok(iv.into_iter().map(|(l, r)| (l as f64 / d, r as f64 / d)).collect())
}

/// Base-b digits of the integer numerator `num` over b^n (most significant first).
pub fn numerator_digits(num: u128, base: u32, n: u32) -> Vec<u8> {
    let mut out = vec![0u8; n as usize];
    let mut v = num;
    for i in (0..n as usize).rev() {
        out[i] = (v % base as u128) as u8;
        v /= base as u128;
    }
    out
}

/// First `n` base-(2k+1) digits of x ∈ [0, 1] from its binary expansion.
/// Digits past the precision of f64 are rejected.
pub fn digits_of(x: f64, k: u32, n: usize) -> Result<Vec<u8>> {
    if !(0.0..=1.0).contains(&x) {
        return invalid("x must lie in [0, 1]");
    }
    let base = (2 * k + 1) as f64;
    let usable = (52.0 / base.log2()).floor() as usize;
    if n > usable && x != 0.0 {
        return invalid(format!("only {usable} base-{base} digits are resolved by f64"));
    }
    let mut out = Vec::with_capacity(n);
    let mut y = x;
    for _ in 0..n {
        y *= base;
        let d = (y.floor() as u32).min(2 * k);
        out.push(d as u8);
        y -= d as f64;
    }
    Ok(out)
}

/// Histogram over {0, …, 2k} of the digits, as frequencies.
pub fn digit_frequencies(digits: &[u8], k: u32) -> Vec<f64> {
    let mut h = vec![0.0; (2 * k + 1) as usize];
    for &d in digits {
        h[d as usize] += 1.0;
    }
    let n = digits.len().max(1) as f64;
    h.iter().map(|c| c / n).collect()
}

/// Uniform digit draws over the allowed digits {0..2k} \ {k}.
pub fn sample_normal_digits<R: Rng>(k: u32, n: usize, rng: &mut R) -> Vec<u8> {
    (0..n)
        .map(|_| {
            let d = rng.gen_range(0..2 * k);
            (if d >= k { d + 1 } else { d }) as u8
        })
        .collect()
}

/// Value of a digit string in base 2k+1.
pub fn digits_value(digits: &[u8], k: u32) -> f64 {
    let base = (2 * k + 1) as f64;
    digits.iter().rev().fold(0.0, |acc, &d| (acc + d as f64) / base)
}

/// Boundary graph φ(t) = dist(t, E_depth)/a of the truncated domain.
pub fn cantor_graph(spec: &CantorSpec) -> Result<LipschitzGraph> {
    let iv = cantor_intervals(spec, spec.depth)?;
    let inv_a = 1.0 / spec.aperture;
    let mut bp = vec![(-3.0, 3.0 * inv_a)];
    for (i, &(l, r)) in iv.iter().enumerate() {
        if i > 0 {
            let pr = iv[i - 1].1;
            let m = 0.5 * (pr + l);
            bp.push((m, (m - pr) * inv_a));
        }
        bp.push((l, 0.0));
        bp.push((r, 0.0));
    }
    bp.push((4.0, 3.0 * inv_a));
    LipschitzGraph::with_slope_limit(bp, inv_a * (1.0 + 1e-9))
}

/// Outer radius of the truncated domain B(0, 2) ∩ {y > φ}.
pub const OUTER_RADIUS: f64 = 2.0;

/// Θ(s): angle of the arc of ∂B((x,0), s) ∩ Ω through (x, s), i.e. the component
/// separating (x, 0) from the pole above it.
pub fn theta(spec: &CantorSpec, x: f64, s: f64) -> Result<f64> {
    let g = cantor_graph(spec)?;
    theta_with_graph(&g, spec, x, s)
}

fn theta_with_graph(g: &LipschitzGraph, spec: &CantorSpec, x: f64, s: f64) -> Result<f64> {
    if !(s > 0.0 && s <= 1.0) {
        return invalid("s must lie in (0, 1]");
    }
    if s < 2.0 * spec.gap_scale() {
        return invalid(format!("s = {s} is below twice the gap scale of depth {}", spec.depth));
    }
    let c = Vec2::new(x, 0.0);
    let top = Vec2::new(x, s);
    if top.y <= g.eval(x) || top.norm() >= OUTER_RADIUS {
        return invalid("the arc top (x, s) is not inside the domain");
    }
    let mut left = PI;
    let mut right = 0.0;
    let mut consider = |q: Vec2| {
        let th = (q.y - c.y).atan2(q.x - c.x);
        if th > 0.5 * PI {
            left = f64::min(left, th);
        } else if th < 0.5 * PI {
            right = f64::max(right, th);
        }
    };
    for q in g.circle_crossings(c, s) {
        consider(q);
    }
    for q in circle_circle(c, s, Vec2::zeros(), OUTER_RADIUS) {
        consider(q);
    }
    // angles below the axis are never reached since φ ≥ 0
    Ok((left - right).clamp(0.0, PI))
}

fn circle_circle(c0: Vec2, r0: f64, c1: Vec2, r1: f64) -> Vec<Vec2> {
    let d = (c1 - c0).norm();
    if d == 0.0 || d > r0 + r1 || d < (r0 - r1).abs() {
        return Vec::new();
    }
    let a = (r0 * r0 - r1 * r1 + d * d) / (2.0 * d);
    let h2 = r0 * r0 - a * a;
    let u = (c1 - c0) / d;
    let m = c0 + u * a;
    if h2 <= 0.0 {
        return vec![m];
    }
    let h = h2.sqrt();
    let perp = Vec2::new(-u.y, u.x);
    vec![m + perp * h, m - perp * h]
}

/// Source of Θ values for [`ahlfors_bound`].
pub enum ThetaSource<'a> {
    Geometry,
    Override(&'a dyn Fn(f64) -> f64),
}

/// Result of the dx/θ bound at one radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AhlforsBound {
    pub r: f64,
    pub theta_min: f64,
    pub integral: f64,
    pub bound: f64,
}

/// (8/π) exp(−π ∫_r^1 ds/(sΘ(s))) with the integral taken on a log-uniform grid
/// of 512 points per decade (trapezoid rule in log s).
pub fn ahlfors_bound(spec: &CantorSpec, x: f64, r: f64, source: ThetaSource<'_>) -> Result<AhlforsBound> {
    if !(r > 1e-4 && r < 1.0) {
        return invalid("r must lie in (1e-4, 1)");
    }
    let g = cantor_graph(spec)?;
    let th = |s: f64| -> Result<f64> {
        match &source {
            ThetaSource::Geometry => theta_with_graph(&g, spec, x, s),
            ThetaSource::Override(f) => Ok(f(s)),
        }
    };
    let decades = -r.log10();
    let n = ((512.0 * decades).ceil() as usize).max(2);
    let (lr, l1) = (r.ln(), 0.0f64);
    let mut integral = 0.0;
    let mut theta_min = f64::INFINITY;
    let mut prev = None;
    for i in 0..=n {
        let t = lr + (l1 - lr) * i as f64 / n as f64;
        let s = t.exp().min(1.0);
        let v = th(s)?;
        if !(v > 0.0) {
            return invalid(format!("Θ({s}) = {v} is not positive"));
        }
        theta_min = theta_min.min(v);
        let f = 1.0 / v;
        if let Some(pf) = prev {
            integral += 0.5 * (pf + f) * (l1 - lr) / n as f64;
        }
        prev = Some(f);
    }
    Ok(AhlforsBound { r, theta_min, integral, bound: 8.0 / PI * (-PI * integral).exp() })
}
