use serde::Serialize;

use super::{square_segment_dist, Square};
use crate::error::{invalid, Result};
use crate::geometry::{Domain, Outer, Vec2};

/// Default enlargement constant W. A maximal cube with diam(Q) < dist(Q, Σ)/20 can sit
/// up to 42√2·ℓ(Q) from Σ, so WQ reaches Σ only once (W − 1)/2 ≥ 42√2.
pub const DEFAULT_W: f64 = 128.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WhitneyCfg {
    pub w: f64,
    /// Smallest side produced.
    pub l_min: f64,
    /// Side of the top-level grid; defaults to the largest dyadic side aligned with the chart.
    pub l_top: Option<f64>,
    /// Refine down to ℓ_min only above this x-window, and to `l_far` elsewhere.
    pub window: Option<RefineWindow>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RefineWindow {
    pub x0: f64,
    pub x1: f64,
    pub l_far: f64,
}

impl WhitneyCfg {
    pub fn new(l_min: f64) -> Self {
        Self { w: DEFAULT_W, l_min, l_top: None, window: None }
    }

    pub fn windowed(l_min: f64, x0: f64, x1: f64, l_far: f64) -> Self {
        Self { window: Some(RefineWindow { x0, x1, l_far }), ..Self::new(l_min) }
    }

    fn floor_for(&self, q: &Square) -> f64 {
        match self.window {
            Some(w) if q.hi().x < w.x0 || q.lo().x > w.x1 => w.l_far.max(self.l_min),
            _ => self.l_min,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WhitneyCube {
    pub center: Vec2,
    pub side: f64,
    /// dist(Q, Σ), exact for the polygonal Σ.
    pub dist: f64,
}

impl WhitneyCube {
    pub fn square(&self) -> Square {
        Square::new(self.center, self.side)
    }

    pub fn projection(&self) -> (f64, f64) {
        self.square().projection()
    }
}

/// Outcome of the constructive post-checks.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WhitneyChecks {
    /// 10Q ⊂ Ω for every cube.
    pub inside_10q: bool,
    /// WQ ∩ Σ ≠ ∅ for every cube.
    pub reaches_sigma: bool,
    /// diam(Q) < dist(Q, Σ)/20 for every cube.
    pub small_diameter: bool,
    /// Interiors pairwise disjoint.
    pub disjoint: bool,
    /// Largest number of cubes Q' with 10Q ∩ 10Q' ≠ ∅ (Q included).
    pub d0: usize,
    /// ℓ(Q)/ℓ(Q') ∈ [1/2, 2] whenever 10Q ∩ 10Q' ≠ ∅.
    pub neighbor_sizes: bool,
    /// Largest number of other cubes whose closure meets Q.
    pub max_touching: usize,
    /// Range of dist(Q, Σ)/ℓ(Q).
    pub dist_ratio: (f64, f64),
    /// Points (above the refinement window, if any) farther than this multiple of ℓ_min from Σ are covered.
    pub covered_beyond: f64,
}

impl WhitneyChecks {
    pub fn all_pass(&self) -> bool {
        self.inside_10q && self.reaches_sigma && self.small_diameter && self.disjoint && self.neighbor_sizes
    }
}

#[derive(Clone, Debug)]
pub struct WhitneyDecomposition {
    pub cubes: Vec<WhitneyCube>,
    pub w: f64,
    pub l_min: f64,
    pub chart: [f64; 4],
    pub checks: WhitneyChecks,
    sigma: Vec<Vec2>,
}

impl WhitneyDecomposition {
    /// Exact distance from a square to Σ.
    pub fn dist_to_sigma(&self, q: &Square) -> f64 {
        sigma_dist(&self.sigma, q)
    }

    /// Graph height at abscissa x, or None outside the chart.
    pub fn sigma_height(&self, x: f64) -> Option<f64> {
        let s = &self.sigma;
        if x < s[0].x || x > s[s.len() - 1].x {
            return None;
        }
        let i = s.partition_point(|p| p.x <= x).clamp(1, s.len() - 1);
        let (a, b) = (s[i - 1], s[i]);
        Some(a.y + (b.y - a.y) * (x - a.x) / (b.x - a.x))
    }

    pub fn above_sigma(&self, p: Vec2) -> bool {
        self.sigma_height(p.x).is_some_and(|y| p.y > y)
    }
}

fn sigma_dist(sigma: &[Vec2], q: &Square) -> f64 {
    // vertical distance from the center bounds the search window
    let cx = q.center.x.clamp(sigma[0].x, sigma[sigma.len() - 1].x);
    let i = sigma.partition_point(|p| p.x <= cx).clamp(1, sigma.len() - 1);
    let mut best = square_segment_dist(q, sigma[i - 1], sigma[i]);
    let reach = best + 0.5 * q.side;
    let a = sigma.partition_point(|p| p.x < q.center.x - reach).saturating_sub(1);
    let b = (sigma.partition_point(|p| p.x <= q.center.x + reach) + 1).min(sigma.len());
    for j in a.max(1)..b {
        best = best.min(square_segment_dist(q, sigma[j - 1], sigma[j]));
    }
    best
}

/// Dyadic Whitney cubes above Σ inside the chart of a graph domain.
pub fn whitney_decompose(domain: &Domain, cfg: &WhitneyCfg) -> Result<WhitneyDecomposition> {
    let (Some(g), Outer::Rect { x0, x1, y0: _, y1 }) = (domain.graph(), domain.outer()) else {
        return invalid("Whitney decomposition needs a graph domain");
    };
    if domain.tau() >= 1.0 {
        return invalid(format!("slope τ = {} must be below 1", domain.tau()));
    }
    if !(cfg.w > 20.0) {
        return invalid("W must exceed 20");
    }
    if !(cfg.l_min > 0.0) {
        return invalid("ℓ_min must be positive");
    }
    let l_top = match cfg.l_top {
        Some(l) => l,
        None => {
            let mut l = 2f64.powi((x1 - x0).log2().floor() as i32);
            while l >= cfg.l_min && ((x0 / l).fract() != 0.0 || (x1 / l).fract() != 0.0) {
                l *= 0.5;
            }
            l
        }
    };
    if l_top < cfg.l_min || (x0 / l_top).fract() != 0.0 || (x1 / l_top).fract() != 0.0 {
        return invalid(format!("no dyadic grid of side ≥ ℓ_min aligned with [{x0}, {x1}]"));
    }
    let sigma = g.polyline(x0, x1);
    let ymin = sigma.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
    let mut cubes = Vec::new();
    let mut residual: f64 = 0.0;
    let mut stack: Vec<Square> = Vec::new();
    let nx = ((x1 - x0) / l_top).round() as i64;
    let j0 = (ymin / l_top).floor() as i64;
    let j1 = (y1 / l_top).ceil() as i64;
    for j in (j0..j1).rev() {
        for i in (0..nx).rev() {
            let lo = Vec2::new(x0 + i as f64 * l_top, j as f64 * l_top);
            stack.push(Square::new(lo + Vec2::new(0.5 * l_top, 0.5 * l_top), l_top));
        }
    }
    let above = |p: Vec2| p.y > g.eval(p.x);
    while let Some(q) = stack.pop() {
        let splittable = 0.5 * q.side >= cfg.floor_for(&q);
        if q.hi().y > y1 {
            if splittable {
                push_children(&mut stack, &q);
            }
            continue;
        }
        let d = sigma_dist(&sigma, &q);
        if d > 0.0 && !above(q.center) {
            continue;
        }
        if d > 20.0 * q.diam() {
            if d <= 0.5 * (cfg.w - 1.0) * q.side {
                cubes.push(WhitneyCube { center: q.center, side: q.side, dist: d });
            }
            continue;
        }
        if splittable {
            push_children(&mut stack, &q);
        } else if cfg.floor_for(&q) == cfg.l_min {
            residual = residual.max(d + q.diam());
        }
    }
    cubes.sort_by(|a, b| b.side.total_cmp(&a.side).then(a.center.y.total_cmp(&b.center.y)).then(a.center.x.total_cmp(&b.center.x)));
    let checks = verify(&cubes, &sigma, cfg.w, residual / cfg.l_min, above);
    Ok(WhitneyDecomposition { cubes, w: cfg.w, l_min: cfg.l_min, chart: [x0, x1, ymin, y1], checks, sigma })
}

fn push_children(stack: &mut Vec<Square>, q: &Square) {
    let h = 0.25 * q.side;
    for (dx, dy) in [(1.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)] {
        stack.push(Square::new(q.center + Vec2::new(dx * h, dy * h), 0.5 * q.side));
    }
}

fn verify(cubes: &[WhitneyCube], sigma: &[Vec2], w: f64, covered_beyond: f64, above: impl Fn(Vec2) -> bool) -> WhitneyChecks {
    let mut c = WhitneyChecks {
        inside_10q: true,
        reaches_sigma: true,
        small_diameter: true,
        disjoint: true,
        d0: 0,
        neighbor_sizes: true,
        max_touching: 0,
        dist_ratio: (f64::INFINITY, 0.0),
        covered_beyond,
    };
    for q in cubes {
        let s = q.square();
        c.inside_10q &= above(q.center) && sigma_dist(sigma, &s.dilate(10.0)) > 0.0;
        c.reaches_sigma &= sigma_dist(sigma, &s.dilate(w)) == 0.0;
        c.small_diameter &= s.diam() < q.dist / 20.0;
        let r = q.dist / q.side;
        c.dist_ratio = (c.dist_ratio.0.min(r), c.dist_ratio.1.max(r));
    }
    // sweep over the x-extent of 10Q
    let ten: Vec<Square> = cubes.iter().map(|q| q.square().dilate(10.0)).collect();
    let mut order: Vec<usize> = (0..cubes.len()).collect();
    order.sort_by(|&a, &b| ten[a].lo().x.total_cmp(&ten[b].lo().x));
    let mut overlap = vec![1usize; cubes.len()];
    let mut touching = vec![0usize; cubes.len()];
    for (k, &a) in order.iter().enumerate() {
        for &b in &order[k + 1..] {
            if ten[b].lo().x > ten[a].hi().x {
                break;
            }
            if !ten[a].touches(&ten[b]) {
                continue;
            }
            overlap[a] += 1;
            overlap[b] += 1;
            let ratio = cubes[a].side / cubes[b].side;
            c.neighbor_sizes &= (0.5..=2.0).contains(&ratio);
            let (qa, qb) = (cubes[a].square(), cubes[b].square());
            if qa.overlaps(&qb) {
                c.disjoint = false;
            }
            if qa.touches(&qb) {
                touching[a] += 1;
                touching[b] += 1;
            }
        }
    }
    c.d0 = overlap.into_iter().max().unwrap_or(0);
    c.max_touching = touching.into_iter().max().unwrap_or(0);
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_plane_layers() {
        let d = Domain::graph_epigraph(vec![(0.0, 0.0)], [-1.0, 1.0, -0.5, 1.0]).unwrap();
        let wd = whitney_decompose(&d, &WhitneyCfg::new(1.0 / 1024.0)).unwrap();
        assert!(wd.checks.all_pass(), "{:?}", wd.checks);
        assert!(wd.checks.max_touching <= 12);
        for q in &wd.cubes {
            // bottom height between 20√2 and 42√2 sides
            let r = q.dist / q.side;
            assert!(r > 20.0 * 2f64.sqrt() && r <= 42.0 * 2f64.sqrt() + 1e-9, "{r}");
        }
    }

    #[test]
    fn steep_graphs_are_rejected() {
        let d = Domain::planar_cone([0.0, 0.0], 1.5, 1.0).unwrap();
        assert!(whitney_decompose(&d, &WhitneyCfg::new(0.01)).is_err());
    }
}
