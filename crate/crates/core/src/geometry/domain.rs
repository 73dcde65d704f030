use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{closest_on_segment, LipschitzGraph, Vec2};
use crate::cantor::{cantor_graph, CantorSpec};
use crate::error::{invalid, Error, Result};

/// JSON-facing description of a domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    /// {y > φ(x)} ∩ box, box = [x0, x1, y0, y1].
    GraphEpigraph {
        breakpoints: Vec<(f64, f64)>,
        #[serde(rename = "box")]
        chart: [f64; 4],
    },
    HalfBall {
        center: [f64; 2],
        radius: f64,
    },
    PlanarCone {
        vertex: [f64; 2],
        tau: f64,
        s: f64,
    },
    CantorCone {
        k: u32,
        depth: u32,
        aperture: f64,
    },
    UnitSquare,
    /// Full disk; Σ is empty.
    Disk {
        center: [f64; 2],
        radius: f64,
    },
}

/// Bounding region that Ω is cut out of.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Outer {
    Disk { center: Vec2, radius: f64 },
    Rect { x0: f64, x1: f64, y0: f64, y1: f64 },
}

/// One piece of ∂Ω, traversed counter-clockwise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundaryPiece {
    Segment { a: Vec2, b: Vec2, sigma: bool },
    Arc { center: Vec2, radius: f64, theta0: f64, theta1: f64 },
}

impl BoundaryPiece {
    pub fn length(&self) -> f64 {
        match *self {
            BoundaryPiece::Segment { a, b, .. } => (b - a).norm(),
            BoundaryPiece::Arc { radius, theta0, theta1, .. } => radius * (theta1 - theta0),
        }
    }

    /// Point at arc-length fraction t ∈ [0,1].
    pub fn point(&self, t: f64) -> Vec2 {
        match *self {
            BoundaryPiece::Segment { a, b, .. } => a + (b - a) * t,
            BoundaryPiece::Arc { center, radius, theta0, theta1 } => {
                let th = theta0 + t * (theta1 - theta0);
                center + Vec2::new(th.cos(), th.sin()) * radius
            }
        }
    }

    fn closest(&self, p: Vec2) -> Vec2 {
        match *self {
            BoundaryPiece::Segment { a, b, .. } => closest_on_segment(p, a, b),
            BoundaryPiece::Arc { center, radius, theta0, theta1 } => {
                let d = p - center;
                let mut th = d.y.atan2(d.x);
                while th < theta0 {
                    th += 2.0 * PI;
                }
                if th <= theta1 && d.norm() > 0.0 {
                    center + d * (radius / d.norm())
                } else {
                    let a = self.point(0.0);
                    let b = self.point(1.0);
                    if (a - p).norm() <= (b - p).norm() {
                        a
                    } else {
                        b
                    }
                }
            }
        }
    }
}

/// A planar domain Ω = {y > φ(x)} ∩ Outer with Σ the graph portion inside Outer.
#[derive(Clone, Debug)]
pub struct Domain {
    spec: DomainSpec,
    graph: Option<LipschitzGraph>,
    outer: Outer,
    sigma: Option<(f64, f64)>,
    pieces: Vec<BoundaryPiece>,
    features: Vec<Vec2>,
}

impl Domain {
    pub fn from_spec(spec: &DomainSpec) -> Result<Self> {
        match spec {
            DomainSpec::GraphEpigraph { breakpoints, chart } => {
                let g = LipschitzGraph::new(breakpoints.clone())?;
                let [x0, x1, y0, y1] = *chart;
                if !(x1 > x0 && y1 > y0) {
                    return invalid("box must satisfy x0 < x1 and y0 < y1");
                }
                Self::build(spec.clone(), Some(g), Outer::Rect { x0, x1, y0, y1 }, Vec::new())
            }
            DomainSpec::HalfBall { center, radius } => {
                if *radius <= 0.0 {
                    return invalid("half-ball radius must be positive");
                }
                let c = Vec2::new(center[0], center[1]);
                let g = LipschitzGraph::flat(c.y);
                Self::build(spec.clone(), Some(g), Outer::Disk { center: c, radius: *radius }, Vec::new())
            }
            DomainSpec::PlanarCone { vertex, tau, s } => {
                if *s <= 0.0 {
                    return invalid("cone truncation s must be positive");
                }
                if !tau.is_finite() || *tau <= -1e6 {
                    return invalid("cone aperture must be finite");
                }
                let v = Vec2::new(vertex[0], vertex[1]);
                let g = LipschitzGraph::with_slope_limit(
                    vec![(v.x - 1.0, v.y + tau), (v.x, v.y), (v.x + 1.0, v.y + tau)],
                    tau.abs() + 1.0,
                )?;
                Self::build(spec.clone(), Some(g), Outer::Disk { center: v, radius: *s }, vec![v])
            }
            DomainSpec::CantorCone { k, depth, aperture } => {
                let cs = CantorSpec::new(*k, *depth, *aperture)?;
                let g = cantor_graph(&cs)?;
                let outer = Outer::Disk { center: Vec2::zeros(), radius: 2.0 };
                Self::build(spec.clone(), Some(g), outer, Vec::new())
            }
            DomainSpec::UnitSquare => Self::build(
                spec.clone(),
                Some(LipschitzGraph::flat(0.0)),
                Outer::Rect { x0: 0.0, x1: 1.0, y0: -1.0, y1: 1.0 },
                Vec::new(),
            ),
            DomainSpec::Disk { center, radius } => {
                if *radius <= 0.0 {
                    return invalid("disk radius must be positive");
                }
                let c = Vec2::new(center[0], center[1]);
                Self::build(spec.clone(), None, Outer::Disk { center: c, radius: *radius }, Vec::new())
            }
        }
    }

    pub fn unit_square() -> Self {
        Self::from_spec(&DomainSpec::UnitSquare).expect("unit square is valid")
    }

    pub fn half_ball(center: [f64; 2], radius: f64) -> Result<Self> {
        Self::from_spec(&DomainSpec::HalfBall { center, radius })
    }

    pub fn disk(center: [f64; 2], radius: f64) -> Result<Self> {
        Self::from_spec(&DomainSpec::Disk { center, radius })
    }

    pub fn planar_cone(vertex: [f64; 2], tau: f64, s: f64) -> Result<Self> {
        Self::from_spec(&DomainSpec::PlanarCone { vertex, tau, s })
    }

    pub fn graph_epigraph(breakpoints: Vec<(f64, f64)>, chart: [f64; 4]) -> Result<Self> {
        Self::from_spec(&DomainSpec::GraphEpigraph { breakpoints, chart })
    }

    fn build(spec: DomainSpec, graph: Option<LipschitzGraph>, outer: Outer, features: Vec<Vec2>) -> Result<Self> {
        let mut pieces = Vec::new();
        let sigma;
        match (&graph, outer) {
            (None, Outer::Disk { center, radius }) => {
                sigma = None;
                pieces.push(BoundaryPiece::Arc { center, radius, theta0: 0.0, theta1: 2.0 * PI });
            }
            (None, Outer::Rect { .. }) => return invalid("rectangular domains need a lower graph"),
            (Some(g), Outer::Rect { x0, x1, y1, .. }) => {
                let (l, r) = (g.eval(x0), g.eval(x1));
                let pl = g.polyline(x0, x1);
                if pl.iter().any(|p| p.y >= y1) {
                    return invalid("graph must stay below the top of the box");
                }
                sigma = Some((x0, x1));
                for w in pl.windows(2) {
                    pieces.push(BoundaryPiece::Segment { a: w[0], b: w[1], sigma: true });
                }
                let c = [Vec2::new(x1, r), Vec2::new(x1, y1), Vec2::new(x0, y1), Vec2::new(x0, l)];
                for w in c.windows(2) {
                    pieces.push(BoundaryPiece::Segment { a: w[0], b: w[1], sigma: false });
                }
            }
            (Some(g), Outer::Disk { center, radius }) => {
                let cr = g.circle_crossings(center, radius);
                if cr.len() != 2 {
                    return Err(Error::InvalidInput(format!(
                        "graph must cross the outer circle exactly twice (found {})",
                        cr.len()
                    )));
                }
                let (pl, pr) = (cr[0], cr[1]);
                sigma = Some((pl.x, pr.x));
                for w in g.polyline(pl.x, pr.x).windows(2) {
                    pieces.push(BoundaryPiece::Segment { a: w[0], b: w[1], sigma: true });
                }
                let t0 = (pr.y - center.y).atan2(pr.x - center.x);
                let mut t1 = (pl.y - center.y).atan2(pl.x - center.x);
                while t1 <= t0 {
                    t1 += 2.0 * PI;
                }
                let mid = 0.5 * (t0 + t1);
                let top = center + Vec2::new(mid.cos(), mid.sin()) * radius;
                if top.y <= g.eval(top.x) {
                    return invalid("outer circle lies below the graph");
                }
                pieces.push(BoundaryPiece::Arc { center, radius, theta0: t0, theta1: t1 });
            }
        }
        Ok(Self { spec, graph, outer, sigma, pieces, features })
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn graph(&self) -> Option<&LipschitzGraph> {
        self.graph.as_ref()
    }

    pub fn outer(&self) -> Outer {
        self.outer
    }

    /// Abscissa range of Σ (open interval), `None` when Σ is empty.
    pub fn sigma_range(&self) -> Option<(f64, f64)> {
        self.sigma
    }

    pub fn boundary_pieces(&self) -> &[BoundaryPiece] {
        &self.pieces
    }

    /// Points where meshes should be graded (cone vertices).
    pub fn feature_points(&self) -> &[Vec2] {
        &self.features
    }

    /// Lipschitz constant of Σ (0 when Σ is empty).
    pub fn tau(&self) -> f64 {
        self.graph.as_ref().map_or(0.0, |g| g.slope_tau())
    }

    /// Length scale of the domain (diameter of the outer region).
    pub fn scale(&self) -> f64 {
        match self.outer {
            Outer::Disk { radius, .. } => 2.0 * radius,
            Outer::Rect { x0, x1, y0, y1 } => (x1 - x0).max(y1 - y0),
        }
    }

    pub fn bbox(&self) -> (Vec2, Vec2) {
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = -lo;
        let mut add = |q: Vec2| {
            lo = lo.inf(&q);
            hi = hi.sup(&q);
        };
        for p in &self.pieces {
            add(p.point(0.0));
            add(p.point(1.0));
            if let BoundaryPiece::Arc { center, radius, theta0, theta1 } = *p {
                for k in 0..8 {
                    let th = k as f64 * 0.5 * PI;
                    if th >= theta0 && th <= theta1 {
                        add(center + Vec2::new(th.cos(), th.sin()) * radius);
                    }
                }
            }
        }
        (lo, hi)
    }

    pub fn outer_contains(&self, p: Vec2) -> bool {
        match self.outer {
            Outer::Disk { center, radius } => (p - center).norm() < radius,
            Outer::Rect { x0, x1, y1, .. } => p.x > x0 && p.x < x1 && p.y < y1,
        }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        self.outer_contains(p) && self.graph.as_ref().map_or(true, |g| p.y > g.eval(p.x))
    }

    /// Point of Σ over abscissa x.
    pub fn sigma_point(&self, x: f64) -> Option<Vec2> {
        let (a, b) = self.sigma?;
        if x <= a || x >= b {
            return None;
        }
        Some(Vec2::new(x, self.graph.as_ref()?.eval(x)))
    }

    /// Outward unit normal of Σ at abscissa x (right-sided at kinks).
    pub fn outward_normal(&self, x: f64) -> Option<Vec2> {
        let g = self.graph.as_ref()?;
        let s = g.slope_at(x);
        Some(Vec2::new(s, -1.0) / (1.0 + s * s).sqrt())
    }

    pub fn inward_normal(&self, x: f64) -> Option<Vec2> {
        self.outward_normal(x).map(|n| -n)
    }

    /// Distance to the closure of Σ (infinite when Σ is empty).
    pub fn dist_to_sigma(&self, p: Vec2) -> f64 {
        match (&self.graph, self.sigma) {
            (Some(g), Some((a, b))) => g.distance(p, a, b),
            _ => f64::INFINITY,
        }
    }

    /// Signed distance to Σ, positive on the Ω side of the graph.
    pub fn signed_dist_to_sigma(&self, p: Vec2) -> f64 {
        let d = self.dist_to_sigma(p);
        match &self.graph {
            Some(g) if p.y < g.eval(p.x) => -d,
            _ => d,
        }
    }

    /// Closest point of ∂Ω to p.
    pub fn project_to_boundary(&self, p: Vec2) -> Vec2 {
        let mut best = p;
        let mut bd = f64::INFINITY;
        for pc in &self.pieces {
            let q = pc.closest(p);
            let d = (q - p).norm_squared();
            if d < bd {
                bd = d;
                best = q;
            }
        }
        best
    }

    pub fn dist_to_boundary(&self, p: Vec2) -> f64 {
        (self.project_to_boundary(p) - p).norm()
    }

    /// Distance to ∂Ω \ Σ (the part of the boundary that is not the graph).
    pub fn dist_to_nonsigma_boundary(&self, p: Vec2) -> f64 {
        self.pieces
            .iter()
            .filter(|pc| !matches!(pc, BoundaryPiece::Segment { sigma: true, .. }))
            .map(|pc| (pc.closest(p) - p).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Whether p lies on Σ (within a relative tolerance), excluding the chart corners.
    pub fn on_sigma(&self, p: Vec2, tol: f64) -> bool {
        match (&self.graph, self.sigma) {
            (Some(g), Some((a, b))) => {
                let s = tol * self.scale();
                p.x > a + s && p.x < b - s && (p.y - g.eval(p.x)).abs() <= s
            }
            _ => false,
        }
    }

    /// True when B(x, r) meets ∂Ω only inside Σ, i.e. the ball stays in the Σ-chart.
    pub fn ball_in_chart(&self, x: Vec2, r: f64) -> bool {
        match self.outer {
            Outer::Disk { center, radius } => (x - center).norm() + r < radius,
            Outer::Rect { x0, x1, y1, .. } => x.x - r > x0 && x.x + r < x1 && x.y + r < y1,
        }
    }

    pub fn check_ball(&self, x: Vec2, r: f64) -> Result<()> {
        if self.ball_in_chart(x, r) {
            Ok(())
        } else {
            Err(Error::BallEscapesChart { center: [x.x, x.y], radius: r })
        }
    }
}

/// Homogeneity degree π/(π − 2 arctan τ) of the positive harmonic function in the
/// planar sector {y > τ|x|} vanishing on its sides.
pub fn cone_vanishing_order_2d(aperture_tau: f64) -> Result<f64> {
    if !aperture_tau.is_finite() {
        return invalid("aperture must be finite");
    }
    let opening = PI - 2.0 * aperture_tau.atan();
    if opening <= 0.0 || opening >= 2.0 * PI {
        return invalid(format!("opening angle {opening} outside (0, 2π)"));
    }
    Ok(PI / opening)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cone_orders() {
        assert_eq!(cone_vanishing_order_2d(0.0).unwrap(), 1.0);
        assert!((cone_vanishing_order_2d(1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((cone_vanishing_order_2d(-1.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(cone_vanishing_order_2d(f64::NAN).is_err());
    }

    #[test]
    fn half_ball_pieces() {
        let d = Domain::half_ball([0.0, 0.0], 1.0).unwrap();
        assert_eq!(d.sigma_range(), Some((-1.0, 1.0)));
        let len: f64 = d.boundary_pieces().iter().map(|p| p.length()).sum();
        assert!((len - (2.0 + PI)).abs() < 1e-12);
        assert!(d.contains(Vec2::new(0.0, 0.5)));
        assert!(!d.contains(Vec2::new(0.0, -0.1)));
        assert!((d.dist_to_boundary(Vec2::new(0.0, 0.7)) - 0.3).abs() < 1e-14);
    }

    #[test]
    fn square_and_chart() {
        let d = Domain::unit_square();
        assert!(d.ball_in_chart(Vec2::new(0.5, 0.0), 0.4));
        assert!(!d.ball_in_chart(Vec2::new(0.5, 0.0), 0.6));
        assert!(d.on_sigma(Vec2::new(0.3, 0.0), 1e-12));
        assert!(!d.on_sigma(Vec2::new(0.0, 0.0), 1e-12));
    }
}
