use serde::{Deserialize, Serialize};

use super::{closest_on_segment, Vec2};
use crate::error::{invalid, Result};

/// Piecewise-linear graph y = φ(x), extended linearly past its end breakpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzGraph {
    breakpoints: Vec<(f64, f64)>,
    slope_tau: f64,
}

impl LipschitzGraph {
    /// Builds a graph with slope bound τ < 1.
    pub fn new(breakpoints: Vec<(f64, f64)>) -> Result<Self> {
        Self::with_slope_limit(breakpoints, 1.0)
    }

    /// Builds a graph whose slopes are only required to stay strictly below `limit`.
    /// Planar cones with τ ≥ 1 and the Cantor-cone boundary use this.
    pub fn with_slope_limit(breakpoints: Vec<(f64, f64)>, limit: f64) -> Result<Self> {
        if breakpoints.is_empty() {
            return invalid("graph needs at least one breakpoint");
        }
        if breakpoints.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return invalid("graph breakpoints must be finite");
        }
        let mut tau: f64 = 0.0;
        for w in breakpoints.windows(2) {
            let (x0, y0) = w[0];
            let (x1, y1) = w[1];
            if x1 <= x0 {
                return invalid(format!("abscissae not strictly increasing at x = {x1}"));
            }
            tau = tau.max(((y1 - y0) / (x1 - x0)).abs());
        }
        if tau >= limit {
            return invalid(format!("slope τ = {tau} must be < {limit}"));
        }
        Ok(Self { breakpoints, slope_tau: tau })
    }

    /// Constant graph y = c.
    pub fn flat(c: f64) -> Self {
        Self { breakpoints: vec![(0.0, c)], slope_tau: 0.0 }
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    pub fn slope_tau(&self) -> f64 {
        self.slope_tau
    }

    fn segment_index(&self, x: f64) -> usize {
        // index i such that x is governed by segment (i, i+1), clamped to the end segments
        let n = self.breakpoints.len();
        if n < 2 {
            return 0;
        }
        let pos = self.breakpoints.partition_point(|&(bx, _)| bx <= x);
        pos.saturating_sub(1).min(n - 2)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let b = &self.breakpoints;
        if b.len() == 1 {
            return b[0].1;
        }
        let i = self.segment_index(x);
        let (x0, y0) = b[i];
        let (x1, y1) = b[i + 1];
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    /// Right derivative of φ at x.
    pub fn slope_at(&self, x: f64) -> f64 {
        let b = &self.breakpoints;
        if b.len() == 1 {
            return 0.0;
        }
        let i = self.segment_index(x);
        (b[i + 1].1 - b[i].1) / (b[i + 1].0 - b[i].0)
    }

    /// Vertices of the graph restricted to [xa, xb], including both ends.
    pub fn polyline(&self, xa: f64, xb: f64) -> Vec<Vec2> {
        let mut out = vec![Vec2::new(xa, self.eval(xa))];
        for &(x, y) in &self.breakpoints {
            if x > xa && x < xb {
                out.push(Vec2::new(x, y));
            }
        }
        out.push(Vec2::new(xb, self.eval(xb)));
        out
    }

    /// Closest point of the graph restricted to [xa, xb].
    pub fn closest_point(&self, p: Vec2, xa: f64, xb: f64) -> Vec2 {
        let pts = self.polyline(xa, xb);
        let mut best = pts[0];
        let mut best_d = f64::INFINITY;
        for w in pts.windows(2) {
            let q = closest_on_segment(p, w[0], w[1]);
            let d = (q - p).norm_squared();
            if d < best_d {
                best_d = d;
                best = q;
            }
        }
        best
    }

    /// Distance from p to the graph restricted to [xa, xb].
    pub fn distance(&self, p: Vec2, xa: f64, xb: f64) -> f64 {
        (self.closest_point(p, xa, xb) - p).norm()
    }

    /// Points (sorted by abscissa) where the graph crosses the circle |q - c| = r.
    pub fn circle_crossings(&self, c: Vec2, r: f64) -> Vec<Vec2> {
        let xa = c.x - r - 1.0;
        let xb = c.x + r + 1.0;
        let pts = self.polyline(xa, xb);
        let mut out: Vec<Vec2> = Vec::new();
        for w in pts.windows(2) {
            for t in segment_circle_params(w[0], w[1], c, r) {
                let q = w[0] + (w[1] - w[0]) * t;
                if out.last().map_or(true, |l: &Vec2| (l - q).norm() > 1e-14 * (1.0 + r)) {
                    out.push(q);
                }
            }
        }
        out.sort_by(|a, b| a.x.total_cmp(&b.x));
        out
    }
}

/// Parameters t ∈ [0,1) at which a + t(b-a) meets the circle |q-c| = r, ascending.
pub(crate) fn segment_circle_params(a: Vec2, b: Vec2, c: Vec2, r: f64) -> Vec<f64> {
    let d = b - a;
    let f = a - c;
    let qa = d.dot(&d);
    let qb = 2.0 * f.dot(&d);
    let qc = f.dot(&f) - r * r;
    let disc = qb * qb - 4.0 * qa * qc;
    if qa == 0.0 || disc < 0.0 {
        return Vec::new();
    }
    let s = disc.sqrt();
    // numerically stable roots
    let q = -0.5 * (qb + qb.signum() * s);
    let (mut t0, mut t1) = if q != 0.0 { (q / qa, qc / q) } else { (0.0, 0.0) };
    if t0 > t1 {
        std::mem::swap(&mut t0, &mut t1);
    }
    let mut out = Vec::new();
    for t in [t0, t1] {
        if (0.0..1.0).contains(&t) && out.last() != Some(&t) {
            out.push(t);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_and_extension() {
        let g = LipschitzGraph::new(vec![(0.0, 0.0), (1.0, 0.5), (2.0, 0.4)]).unwrap();
        assert_eq!(g.eval(0.5), 0.25);
        assert!((g.eval(3.0) - 0.3).abs() < 1e-15);
        assert_eq!(g.eval(-1.0), -0.5);
        assert_eq!(g.slope_tau(), 0.5);
    }

    #[test]
    fn rejects_steep_and_unsorted() {
        assert!(LipschitzGraph::new(vec![(0.0, 0.0), (1.0, 1.0)]).is_err());
        assert!(LipschitzGraph::new(vec![(1.0, 0.0), (0.0, 0.0)]).is_err());
        assert!(LipschitzGraph::new(vec![]).is_err());
    }

    #[test]
    fn circle_crossings_of_flat_line() {
        let g = LipschitzGraph::flat(0.0);
        let c = g.circle_crossings(Vec2::new(0.0, 0.0), 1.0);
        assert_eq!(c.len(), 2);
        assert!((c[0].x + 1.0).abs() < 1e-14 && (c[1].x - 1.0).abs() < 1e-14);
    }

    #[test]
    fn distance_to_vee() {
        let g = LipschitzGraph::with_slope_limit(vec![(-1.0, 1.0), (0.0, 0.0), (1.0, 1.0)], 2.0).unwrap();
        let d = g.distance(Vec2::new(0.0, 1.0), -5.0, 5.0);
        assert!((d - 0.5f64.sqrt()).abs() < 1e-14);
    }
}
