//! Whitney decomposition above Σ, the rooted projection tree, vertical
//! translates, and the frequency scans run over the tree.

mod decompose;
mod scan;
mod tree;

pub use decompose::{whitney_decompose, RefineWindow, WhitneyCfg, WhitneyChecks, WhitneyCube, WhitneyDecomposition, DEFAULT_W};
pub use scan::{
    key_lemma_scan, modified_frequency_scan, GenerationSummary, KeyLemmaReport, KeyLemmaRow, ModifiedFrequencyReport,
    NodeRecord, Rule, ScanCfg, SignState, scan_mesh_options,
};
pub use tree::{build_tree, vertical_translate, TreeNode, WhitneyTree};

use serde::Serialize;

use crate::geometry::Vec2;

/// Closed axis-parallel square.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Square {
    pub center: Vec2,
    pub side: f64,
}

impl Square {
    pub fn new(center: Vec2, side: f64) -> Self {
        Self { center, side }
    }

    pub fn lo(&self) -> Vec2 {
        self.center - Vec2::new(0.5 * self.side, 0.5 * self.side)
    }

    pub fn hi(&self) -> Vec2 {
        self.center + Vec2::new(0.5 * self.side, 0.5 * self.side)
    }

    pub fn diam(&self) -> f64 {
        self.side * std::f64::consts::SQRT_2
    }

    /// Concentric square with side scaled by `f`.
    pub fn dilate(&self, f: f64) -> Self {
        Self { center: self.center, side: f * self.side }
    }

    /// Π(Q): the projection onto the horizontal axis.
    pub fn projection(&self) -> (f64, f64) {
        (self.lo().x, self.hi().x)
    }

    pub fn contains(&self, p: Vec2) -> bool {
        let (lo, hi) = (self.lo(), self.hi());
        p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y
    }

    /// Closed squares share at least one point.
    pub fn touches(&self, o: &Square) -> bool {
        let (a, b, c, d) = (self.lo(), self.hi(), o.lo(), o.hi());
        a.x <= d.x && c.x <= b.x && a.y <= d.y && c.y <= b.y
    }

    /// Interiors overlap.
    pub fn overlaps(&self, o: &Square) -> bool {
        let (a, b, c, d) = (self.lo(), self.hi(), o.lo(), o.hi());
        a.x < d.x && c.x < b.x && a.y < d.y && c.y < b.y
    }

    /// Whether `o` lies inside this square.
    pub fn encloses(&self, o: &Square) -> bool {
        let (a, b, c, d) = (self.lo(), self.hi(), o.lo(), o.hi());
        a.x <= c.x && a.y <= c.y && d.x <= b.x && d.y <= b.y
    }
}

fn point_box_dist(p: Vec2, lo: Vec2, hi: Vec2) -> f64 {
    let dx = (lo.x - p.x).max(0.0).max(p.x - hi.x);
    let dy = (lo.y - p.y).max(0.0).max(p.y - hi.y);
    dx.hypot(dy)
}

fn segment_hits_box(a: Vec2, b: Vec2, lo: Vec2, hi: Vec2) -> bool {
    // Liang–Barsky clipping
    let d = b - a;
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for (p, q) in [(-d.x, a.x - lo.x), (d.x, hi.x - a.x), (-d.y, a.y - lo.y), (d.y, hi.y - a.y)] {
        if p == 0.0 {
            if q < 0.0 {
                return false;
            }
        } else {
            let t = q / p;
            if p < 0.0 {
                t0 = t0.max(t);
            } else {
                t1 = t1.min(t);
            }
            if t0 > t1 {
                return false;
            }
        }
    }
    true
}

/// Exact distance between a closed square and a segment.
pub(crate) fn square_segment_dist(q: &Square, a: Vec2, b: Vec2) -> f64 {
    let (lo, hi) = (q.lo(), q.hi());
    if segment_hits_box(a, b, lo, hi) {
        return 0.0;
    }
    let mut d = point_box_dist(a, lo, hi).min(point_box_dist(b, lo, hi));
    for c in [lo, hi, Vec2::new(lo.x, hi.y), Vec2::new(hi.x, lo.y)] {
        d = d.min((crate::geometry::closest_on_segment(c, a, b) - c).norm());
    }
    d
}
