use std::io::Write;

use serde::Serialize;

use super::h_at;
use crate::geometry::{Domain, Vec2};
use crate::solver::DiscreteSolution;

/// Area over which a zero set is collected.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    Everywhere,
    Ball { center: [f64; 2], radius: f64 },
    Rect { lo: [f64; 2], hi: [f64; 2] },
}

impl Region {
    pub fn ball(center: Vec2, radius: f64) -> Self {
        Region::Ball { center: [center.x, center.y], radius }
    }

    /// Part of the segment a→b inside the region, as parameters.
    fn clip(&self, a: Vec2, b: Vec2) -> Option<(f64, f64)> {
        let d = b - a;
        match *self {
            Region::Everywhere => Some((0.0, 1.0)),
            Region::Ball { center, radius } => {
                let f = a - Vec2::new(center[0], center[1]);
                let qa = d.norm_squared();
                if qa == 0.0 {
                    return (f.norm() < radius).then_some((0.0, 1.0));
                }
                let qb = 2.0 * f.dot(&d);
                let qc = f.norm_squared() - radius * radius;
                let disc = qb * qb - 4.0 * qa * qc;
                if disc <= 0.0 {
                    return None;
                }
                let s = disc.sqrt();
                let t0 = ((-qb - s) / (2.0 * qa)).max(0.0);
                let t1 = ((-qb + s) / (2.0 * qa)).min(1.0);
                (t1 > t0).then_some((t0, t1))
            }
            Region::Rect { lo, hi } => {
                let (mut t0, mut t1) = (0.0f64, 1.0f64);
                for (p, q) in [
                    (-d.x, a.x - lo[0]),
                    (d.x, hi[0] - a.x),
                    (-d.y, a.y - lo[1]),
                    (d.y, hi[1] - a.y),
                ] {
                    if p == 0.0 {
                        if q < 0.0 {
                            return None;
                        }
                    } else {
                        let r = q / p;
                        if p < 0.0 {
                            t0 = t0.max(r);
                        } else {
                            t1 = t1.min(r);
                        }
                    }
                }
                (t1 > t0).then_some((t0, t1))
            }
        }
    }
}

/// Zero set of the P1 interpolant as a soup of segments.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZeroSet {
    pub segments: Vec<[Vec2; 2]>,
    pub total_length: f64,
    pub region: Region,
}

impl ZeroSet {
    /// CSV with one segment per row.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x0,y0,x1,y1")?;
        for [a, b] in &self.segments {
            writeln!(w, "{},{},{},{}", a.x, a.y, b.x, b.y)?;
        }
        Ok(())
    }
}

/// Marching triangles on the mesh of u. Zero nodal values count as positive, so a
/// level set through nodes is traced once along mesh edges. Segments lying on ∂Ω
/// (both ends at boundary nodes) are dropped.
pub fn extract_zero_set(u: &DiscreteSolution, region: Region) -> ZeroSet {
    let mesh = u.mesh();
    let vals = u.values();
    let tags = mesh.tags();
    let mut segments = Vec::new();
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let v = tri.map(|i| vals[i as usize]);
        let pos = v.map(|x| x >= 0.0);
        if pos[0] == pos[1] && pos[1] == pos[2] {
            continue;
        }
        let p = mesh.triangle(t);
        let mut pts = [Vec2::zeros(); 2];
        let mut at_node = [None; 2];
        let mut n = 0;
        for (a, b) in [(0, 1), (1, 2), (2, 0)] {
            if pos[a] != pos[b] {
                let s = v[a] / (v[a] - v[b]);
                pts[n] = p[a] + (p[b] - p[a]) * s;
                at_node[n] = if s == 0.0 {
                    Some(tri[a] as usize)
                } else if s == 1.0 {
                    Some(tri[b] as usize)
                } else {
                    None
                };
                n += 1;
            }
        }
        let (a, b) = (pts[0], pts[1]);
        if a == b {
            continue;
        }
        if let (Some(i), Some(j)) = (at_node[0], at_node[1]) {
            if tags[i].is_boundary() && tags[j].is_boundary() {
                continue;
            }
        }
        if let Some((t0, t1)) = region.clip(a, b) {
            let d = b - a;
            segments.push([a + d * t0, a + d * t1]);
        }
    }
    let total_length = segments.iter().map(|[a, b]| (b - a).norm()).sum();
    ZeroSet { segments, total_length, region }
}

/// Length of the zero set inside B(center, r) ∩ Ω. With `sigma_aware`, segments
/// within 2h of Σ are discarded.
pub fn nodal_measure(u: &DiscreteSolution, domain: &Domain, center: Vec2, r: f64, sigma_aware: bool) -> f64 {
    let z = extract_zero_set(u, Region::ball(center, r));
    if !sigma_aware {
        return z.total_length;
    }
    z.segments
        .iter()
        .filter(|[a, b]| {
            let layer = 2.0 * h_at(u.mesh(), (a + b) * 0.5);
            domain.dist_to_sigma(*a) > layer || domain.dist_to_sigma(*b) > layer
        })
        .map(|[a, b]| (b - a).norm())
        .sum()
}
