use std::f64::consts::PI;

use rayon::prelude::*;

use crate::geometry::Vec2;

fn cross(a: Vec2, b: Vec2) -> f64 {
    a.perp(&b)
}

/// Signed area of the triangle (0, p, q) intersected with the disk of radius r at 0.
fn wedge_area(p: Vec2, q: Vec2, r: f64) -> f64 {
    let sector = |u: Vec2, v: Vec2| 0.5 * r * r * cross(u, v).atan2(u.dot(&v));
    let d = q - p;
    let a = d.dot(&d);
    if a == 0.0 {
        return 0.0;
    }
    let b = p.dot(&d);
    let c = p.dot(&p) - r * r;
    let disc = b * b - a * c;
    if disc <= 0.0 {
        return sector(p, q);
    }
    let sq = disc.sqrt();
    let s = ((-b - sq) / a).max(0.0);
    let e = ((-b + sq) / a).min(1.0);
    if s >= e {
        return sector(p, q);
    }
    let p1 = p + d * s;
    let p2 = p + d * e;
    let mut area = 0.5 * cross(p1, p2);
    if s > 0.0 {
        area += sector(p, p1);
    }
    if e < 1.0 {
        area += sector(p2, q);
    }
    area
}

/// Exact area of triangle (a, b, c) ∩ B(0, r).
pub fn triangle_disk_area(a: Vec2, b: Vec2, c: Vec2, r: f64) -> f64 {
    let rr = r * r;
    let lo = a.inf(&b).inf(&c);
    let hi = a.sup(&b).sup(&c);
    // bounding-box rejection
    let nx = 0f64.clamp(lo.x, hi.x);
    let ny = 0f64.clamp(lo.y, hi.y);
    if nx * nx + ny * ny >= rr {
        return 0.0;
    }
    if a.norm_squared() <= rr && b.norm_squared() <= rr && c.norm_squared() <= rr {
        return 0.5 * cross(b - a, c - a).abs();
    }
    (wedge_area(a, b, r) + wedge_area(b, c, r) + wedge_area(c, a, r)).abs()
}

const GL4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
];

/// ∫ f over the annulus r0 < |y − c| < r1 in polar coordinates: composite 4-point
/// Gauss–Legendre in the radius, uniform rule in the angle.
pub fn polar_integral(f: impl Fn(Vec2) -> f64 + Sync, c: Vec2, r0: f64, r1: f64, panels: usize, n_theta: usize) -> f64 {
    let panels = panels.max(1);
    let w = (r1 - r0) / panels as f64;
    let dth = 2.0 * PI / n_theta as f64;
    let nodes: Vec<(f64, f64)> = (0..panels)
        .flat_map(|p| {
            let mid = r0 + (p as f64 + 0.5) * w;
            GL4.iter().map(move |&(x, wt)| (mid + 0.5 * w * x, 0.5 * w * wt))
        })
        .collect();
    let parts: Vec<f64> = nodes
        .par_iter()
        .map(|&(s, ws)| {
            let ring: f64 = (0..n_theta)
                .map(|j| {
                    let th = (j as f64 + 0.5) * dth;
                    f(c + Vec2::new(th.cos(), th.sin()) * s)
                })
                .sum();
            ws * s * ring * dth
        })
        .collect();
    parts.iter().sum()
}
