use std::collections::HashMap;
use std::io::Write;

use spade::{AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation};

use crate::error::{Error, Result};
use crate::geometry::{Domain, DomainSpec, Outer, Vec2};

/// Role of a mesh node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeTag {
    Interior,
    /// Boundary node on Σ.
    Sigma,
    /// Boundary node on ∂Ω \ Σ.
    Boundary,
}

impl NodeTag {
    pub fn is_boundary(self) -> bool {
        self != NodeTag::Interior
    }
}

/// Radial refinement h(p) = h_min + grade·|p − center| around a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grading {
    pub center: Vec2,
    pub h_min: f64,
    pub grade: f64,
}

/// Mesh-generation options.
#[derive(Clone, Debug, PartialEq)]
pub struct MeshOptions {
    /// Maximal mesh size.
    pub h: f64,
    pub min_angle_deg: f64,
    pub grading: Vec<Grading>,
    /// Use the structured right-triangle grid on axis-aligned rectangles.
    pub allow_structured: bool,
}

impl MeshOptions {
    pub fn uniform(h: f64) -> Self {
        Self { h, min_angle_deg: 20.0, grading: Vec::new(), allow_structured: true }
    }

    pub fn graded(h: f64, grading: Vec<Grading>) -> Self {
        Self { grading, ..Self::uniform(h) }
    }

    /// Local target size.
    pub fn size_at(&self, p: Vec2) -> f64 {
        self.grading
            .iter()
            .map(|g| g.h_min + g.grade * (p - g.center).norm())
            .fold(self.h, f64::min)
    }

    pub fn h_min(&self) -> f64 {
        self.grading.iter().map(|g| g.h_min).fold(self.h, f64::min)
    }
}

/// Uniform bucket grid over a bounding box.
#[derive(Clone, Debug)]
struct Buckets {
    lo: Vec2,
    cell: f64,
    nx: usize,
    ny: usize,
    start: Vec<u32>,
    items: Vec<u32>,
}

impl Buckets {
    fn build(lo: Vec2, hi: Vec2, cell: f64, n_items: usize, mut ranges: impl FnMut(usize) -> (Vec2, Vec2)) -> Self {
        let nx = (((hi.x - lo.x) / cell).ceil() as usize).max(1);
        let ny = (((hi.y - lo.y) / cell).ceil() as usize).max(1);
        let mut counts = vec![0u32; nx * ny + 1];
        let cell_range = |a: Vec2, b: Vec2| {
            let i0 = (((a.x - lo.x) / cell).floor().max(0.0) as usize).min(nx - 1);
            let i1 = (((b.x - lo.x) / cell).floor().max(0.0) as usize).min(nx - 1);
            let j0 = (((a.y - lo.y) / cell).floor().max(0.0) as usize).min(ny - 1);
            let j1 = (((b.y - lo.y) / cell).floor().max(0.0) as usize).min(ny - 1);
            (i0, i1, j0, j1)
        };
        let mut boxes = Vec::with_capacity(n_items);
        for t in 0..n_items {
            let (a, b) = ranges(t);
            let r = cell_range(a, b);
            boxes.push(r);
            for j in r.2..=r.3 {
                for i in r.0..=r.1 {
                    counts[j * nx + i + 1] += 1;
                }
            }
        }
        for k in 1..counts.len() {
            counts[k] += counts[k - 1];
        }
        let mut fill = counts.clone();
        let mut items = vec![0u32; *counts.last().unwrap() as usize];
        for (t, r) in boxes.into_iter().enumerate() {
            for j in r.2..=r.3 {
                for i in r.0..=r.1 {
                    let c = j * nx + i;
                    items[fill[c] as usize] = t as u32;
                    fill[c] += 1;
                }
            }
        }
        Self { lo, cell, nx, ny, start: counts, items }
    }

    fn cell_of(&self, p: Vec2) -> Option<usize> {
        let fx = (p.x - self.lo.x) / self.cell;
        let fy = (p.y - self.lo.y) / self.cell;
        if fx < -1e-9 || fy < -1e-9 {
            return None;
        }
        let i = (fx.max(0.0) as usize).min(self.nx - 1);
        let j = (fy.max(0.0) as usize).min(self.ny - 1);
        if fx > self.nx as f64 + 1e-9 || fy > self.ny as f64 + 1e-9 {
            return None;
        }
        Some(j * self.nx + i)
    }

    fn cell_items(&self, c: usize) -> &[u32] {
        &self.items[self.start[c] as usize..self.start[c + 1] as usize]
    }

    fn items_near(&self, p: Vec2, r: f64, mut f: impl FnMut(u32)) {
        let i0 = (((p.x - r - self.lo.x) / self.cell).floor().max(0.0) as usize).min(self.nx - 1);
        let i1 = (((p.x + r - self.lo.x) / self.cell).floor().max(0.0) as usize).min(self.nx - 1);
        let j0 = (((p.y - r - self.lo.y) / self.cell).floor().max(0.0) as usize).min(self.ny - 1);
        let j1 = (((p.y + r - self.lo.y) / self.cell).floor().max(0.0) as usize).min(self.ny - 1);
        for j in j0..=j1 {
            for i in i0..=i1 {
                for &t in self.cell_items(j * self.nx + i) {
                    f(t);
                }
            }
        }
    }
}

/// Conforming P1 triangulation of a domain with boundary tags and point location.
#[derive(Clone, Debug)]
pub struct Mesh {
    nodes: Vec<Vec2>,
    tris: Vec<[u32; 3]>,
    tags: Vec<NodeTag>,
    h: f64,
    h_min: f64,
    structured: bool,
    tri_grid: Buckets,
    node_grid: Buckets,
}

impl Mesh {
    /// Builds a mesh from raw parts (triangles are reoriented counter-clockwise).
    pub fn from_parts(nodes: Vec<Vec2>, mut tris: Vec<[u32; 3]>, tags: Vec<NodeTag>, h: f64, structured: bool) -> Result<Self> {
        if nodes.len() != tags.len() {
            return Err(Error::Mesh("tag count does not match node count".into()));
        }
        if tris.is_empty() {
            return Err(Error::Mesh("no triangles".into()));
        }
        let mut h_min = f64::INFINITY;
        for t in tris.iter_mut() {
            let [a, b, c] = t.map(|i| nodes[i as usize]);
            let area = 0.5 * ((b - a).perp(&(c - a)));
            if area == 0.0 {
                return Err(Error::Mesh("degenerate triangle".into()));
            }
            if area < 0.0 {
                t.swap(1, 2);
            }
            for (p, q) in [(a, b), (b, c), (c, a)] {
                h_min = h_min.min((p - q).norm());
            }
        }
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = -lo;
        for p in &nodes {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        let ext = hi - lo;
        let cell = ((ext.x * ext.y / tris.len() as f64) * 2.0).sqrt().max(1e-300);
        let tri_grid = Buckets::build(lo, hi, cell, tris.len(), |t| {
            let [a, b, c] = tris[t].map(|i| nodes[i as usize]);
            (a.inf(&b).inf(&c), a.sup(&b).sup(&c))
        });
        let node_grid = Buckets::build(lo, hi, cell, nodes.len(), |i| (nodes[i], nodes[i]));
        Ok(Self { nodes, tris, tags, h, h_min, structured, tri_grid, node_grid })
    }

    /// Meshes a domain: structured grid for plain rectangles, constrained Delaunay
    /// refinement otherwise.
    pub fn generate(domain: &Domain, opts: &MeshOptions) -> Result<Self> {
        if !(opts.h > 0.0) || !opts.h.is_finite() {
            return Err(Error::InvalidInput(format!("mesh size must be positive, got {}", opts.h)));
        }
        if opts.allow_structured && opts.grading.is_empty() {
            if let Some(m) = Self::structured(domain, opts.h)? {
                return Ok(m);
            }
        }
        Self::delaunay(domain, opts)
    }

    fn structured(domain: &Domain, h: f64) -> Result<Option<Self>> {
        let Outer::Rect { x0, x1, y1, .. } = domain.outer() else { return Ok(None) };
        let Some(g) = domain.graph() else { return Ok(None) };
        if g.slope_tau() != 0.0 {
            return Ok(None);
        }
        let yb = g.eval(x0);
        let nx = ((x1 - x0) / h).round().max(1.0) as usize;
        let ny = ((y1 - yb) / h).round().max(1.0) as usize;
        if ((x1 - x0) / nx as f64 - (y1 - yb) / ny as f64).abs() > 1e-9 * h {
            return Ok(None);
        }
        let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
        let mut tags = Vec::with_capacity(nodes.capacity());
        for j in 0..=ny {
            for i in 0..=nx {
                let x = if i == nx { x1 } else { x0 + (x1 - x0) * i as f64 / nx as f64 };
                let y = if j == ny { y1 } else { yb + (y1 - yb) * j as f64 / ny as f64 };
                nodes.push(Vec2::new(x, y));
                let tag = if j == 0 && i > 0 && i < nx {
                    NodeTag::Sigma
                } else if i == 0 || i == nx || j == 0 || j == ny {
                    NodeTag::Boundary
                } else {
                    NodeTag::Interior
                };
                tags.push(tag);
            }
        }
        let id = |i: usize, j: usize| (j * (nx + 1) + i) as u32;
        let mut tris = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                tris.push([a, b, c]);
                tris.push([a, c, d]);
            }
        }
        Self::from_parts(nodes, tris, tags, (x1 - x0) / nx as f64, true).map(Some)
    }

    fn delaunay(domain: &Domain, opts: &MeshOptions) -> Result<Self> {
        let boundary = discretize_boundary(domain, opts);
        let nb = boundary.len();
        let mut verts: Vec<Point2<f64>> = boundary.iter().map(|p| Point2::new(p.x, p.y)).collect();
        let edges: Vec<[usize; 2]> = (0..nb).map(|i| [i, (i + 1) % nb]).collect();
        for p in interior_points(domain, opts) {
            verts.push(Point2::new(p.x, p.y));
        }
        let n_input = verts.len();
        let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> =
            ConstrainedDelaunayTriangulation::bulk_load_cdt(verts, edges)
                .map_err(|e| Error::Mesh(format!("triangulation failed: {e:?}")))?;
        let params = RefinementParameters::<f64>::new()
            .with_angle_limit(AngleLimit::from_deg(opts.min_angle_deg + 0.5))
            .exclude_outer_faces(true)
            .with_max_additional_vertices(n_input + 10_000);
        let res = cdt.refine(params);
        if !res.refinement_complete {
            return Err(Error::Mesh("angle refinement did not complete".into()));
        }
        let mut excluded = vec![false; cdt.num_all_faces()];
        for f in &res.excluded_faces {
            excluded[f.index()] = true;
        }
        let mut index = vec![u32::MAX; cdt.num_vertices()];
        let mut nodes = Vec::new();
        let mut tris = Vec::new();
        for f in cdt.inner_faces() {
            if excluded[f.fix().index()] {
                continue;
            }
            let mut t = [0u32; 3];
            for (k, v) in f.vertices().iter().enumerate() {
                let key = v.fix().index();
                if index[key] == u32::MAX {
                    let p = v.position();
                    index[key] = nodes.len() as u32;
                    nodes.push(Vec2::new(p.x, p.y));
                }
                t[k] = index[key];
            }
            tris.push(t);
        }
        let on_b = boundary_flags(nodes.len(), &tris);
        let mut tags = vec![NodeTag::Interior; nodes.len()];
        for i in 0..nodes.len() {
            if on_b[i] {
                let q = domain.project_to_boundary(nodes[i]);
                nodes[i] = q;
                tags[i] = if domain.on_sigma(q, 1e-10) { NodeTag::Sigma } else { NodeTag::Boundary };
            }
        }
        // order nodes by (y, x) for a banded factorization
        let mut order: Vec<u32> = (0..nodes.len() as u32).collect();
        order.sort_by(|&a, &b| {
            let (p, q) = (nodes[a as usize], nodes[b as usize]);
            p.y.total_cmp(&q.y).then(p.x.total_cmp(&q.x))
        });
        let mut inv = vec![0u32; nodes.len()];
        for (new, &old) in order.iter().enumerate() {
            inv[old as usize] = new as u32;
        }
        let nodes2: Vec<Vec2> = order.iter().map(|&o| nodes[o as usize]).collect();
        let tags2: Vec<NodeTag> = order.iter().map(|&o| tags[o as usize]).collect();
        for t in tris.iter_mut() {
            *t = t.map(|i| inv[i as usize]);
        }
        Self::from_parts(nodes2, tris, tags2, opts.h, false)
    }

    pub fn nodes(&self) -> &[Vec2] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.tris
    }

    pub fn tags(&self) -> &[NodeTag] {
        &self.tags
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_interior(&self) -> usize {
        self.tags.iter().filter(|t| !t.is_boundary()).count()
    }

    /// Nominal (maximal) mesh size.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Shortest edge.
    pub fn h_min(&self) -> f64 {
        self.h_min
    }

    pub fn is_structured(&self) -> bool {
        self.structured
    }

    pub fn triangle(&self, t: usize) -> [Vec2; 3] {
        self.tris[t].map(|i| self.nodes[i as usize])
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle(t);
        0.5 * (b - a).perp(&(c - a))
    }

    pub fn centroid(&self, t: usize) -> Vec2 {
        let [a, b, c] = self.triangle(t);
        (a + b + c) / 3.0
    }

    /// Smallest interior angle over all triangles, in degrees.
    pub fn min_angle_deg(&self) -> f64 {
        let mut m: f64 = 180.0;
        for t in 0..self.tris.len() {
            let p = self.triangle(t);
            for k in 0..3 {
                let u = p[(k + 1) % 3] - p[k];
                let v = p[(k + 2) % 3] - p[k];
                let c = (u.dot(&v) / (u.norm() * v.norm())).clamp(-1.0, 1.0);
                m = m.min(c.acos().to_degrees());
            }
        }
        m
    }

    /// Longest edge of the triangle containing p.
    pub fn local_h(&self, p: Vec2) -> Option<f64> {
        let (t, _) = self.locate(p)?;
        let [a, b, c] = self.triangle(t);
        Some((a - b).norm().max((b - c).norm()).max((c - a).norm()))
    }

    /// Triangle containing p with its barycentric coordinates.
    pub fn locate(&self, p: Vec2) -> Option<(usize, [f64; 3])> {
        let c = self.tri_grid.cell_of(p)?;
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for &t in self.tri_grid.cell_items(c) {
            let [a, b, cc] = self.triangle(t as usize);
            let det = (b - a).perp(&(cc - a));
            let l1 = (p - a).perp(&(cc - a)) / det;
            let l2 = (b - a).perp(&(p - a)) / det;
            let l0 = 1.0 - l1 - l2;
            let worst = l0.min(l1).min(l2);
            if worst >= 0.0 {
                return Some((t as usize, [l0, l1, l2]));
            }
            if worst > -1e-10 && best.map_or(true, |b| worst > b.2) {
                best = Some((t as usize, [l0, l1, l2], worst));
            }
        }
        best.map(|(t, l, _)| (t, l))
    }

    /// Nodes within distance r of p.
    pub fn nodes_within(&self, p: Vec2, r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.node_grid.items_near(p, r, |i| {
            if (self.nodes[i as usize] - p).norm() <= r {
                out.push(i as usize);
            }
        });
        out.sort_unstable();
        out
    }

    /// Triangles whose bounding boxes meet the square of half-width r around p.
    pub fn triangles_near(&self, p: Vec2, r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.tri_grid.items_near(p, r, |t| out.push(t as usize));
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Nearest node to p among nodes satisfying `keep`, searching in growing rings.
    pub fn nearest_node(&self, p: Vec2, keep: impl Fn(usize) -> bool) -> Option<usize> {
        let mut r = self.node_grid.cell;
        let max_r = 4.0 * (self.node_grid.nx.max(self.node_grid.ny) as f64 + 1.0) * self.node_grid.cell;
        while r <= max_r {
            let mut best: Option<(usize, f64)> = None;
            self.node_grid.items_near(p, r, |i| {
                let i = i as usize;
                if keep(i) {
                    let d = (self.nodes[i] - p).norm();
                    if d <= r && best.map_or(true, |b| d < b.1 || (d == b.1 && i < b.0)) {
                        best = Some((i, d));
                    }
                }
            });
            if let Some((i, _)) = best {
                return Some(i);
            }
            r *= 2.0;
        }
        None
    }

    /// Writes the mesh as OFF text: a header, counts line, vertex lines and triangle lines.
    pub fn write_off<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "OFF")?;
        writeln!(w, "{} {} 0", self.nodes.len(), self.tris.len())?;
        for p in &self.nodes {
            writeln!(w, "{:.16e} {:.16e} 0", p.x, p.y)?;
        }
        for t in &self.tris {
            writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }
}

/// Nodes on edges used by exactly one triangle.
pub(crate) fn boundary_flags(n: usize, tris: &[[u32; 3]]) -> Vec<bool> {
    let mut edges: Vec<u64> = Vec::with_capacity(tris.len() * 3);
    for t in tris {
        for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            edges.push(((a.min(b) as u64) << 32) | a.max(b) as u64);
        }
    }
    edges.sort_unstable();
    let mut on_b = vec![false; n];
    let mut k = 0;
    while k < edges.len() {
        let mut m = k + 1;
        while m < edges.len() && edges[m] == edges[k] {
            m += 1;
        }
        if m - k == 1 {
            on_b[(edges[k] >> 32) as usize] = true;
            on_b[(edges[k] & 0xffff_ffff) as usize] = true;
        }
        k = m;
    }
    on_b
}

/// Points along ∂Ω (counter-clockwise, no repetition) spaced by the local size.
fn discretize_boundary(domain: &Domain, opts: &MeshOptions) -> Vec<Vec2> {
    let mut out = Vec::new();
    for piece in domain.boundary_pieces() {
        let len = piece.length();
        // adaptive samples of ∫ ds / h along the piece
        let mut ts = vec![0.0];
        let mut cum = vec![0.0];
        let mut prev = 1.0 / opts.size_at(piece.point(0.0));
        let mut t = 0.0;
        while t < 1.0 {
            let dt = (0.25 / (prev * len)).min(1.0 / 16.0).min(1.0 - t);
            t = if 1.0 - t - dt < 1e-12 { 1.0 } else { t + dt };
            let f = 1.0 / opts.size_at(piece.point(t));
            let c = cum[cum.len() - 1] + 0.5 * (prev + f) * len * (t - ts[ts.len() - 1]);
            ts.push(t);
            cum.push(c);
            prev = f;
        }
        let total = *cum.last().unwrap();
        let n = total.ceil().max(1.0) as usize;
        let mut seg = 0;
        for k in 0..n {
            let target = total * k as f64 / n as f64;
            while seg + 2 < cum.len() && cum[seg + 1] < target {
                seg += 1;
            }
            let (c0, c1) = (cum[seg], cum[seg + 1]);
            let frac = if c1 > c0 { ((target - c0) / (c1 - c0)).clamp(0.0, 1.0) } else { 0.0 };
            let t = ts[seg] + frac * (ts[seg + 1] - ts[seg]);
            out.push(piece.point(if k == 0 { 0.0 } else { t }));
        }
    }
    out
}

/// Interior vertices from nested hexagonal lattices; level j has spacing h_min·2^j and
/// is used where the local size lies in [h_min·2^j, h_min·2^(j+1)).
fn interior_points(domain: &Domain, opts: &MeshOptions) -> Vec<Vec2> {
    let (lo, hi) = domain.bbox();
    let hmin = opts.h_min();
    let levels = ((opts.h / hmin).log2().floor().max(0.0)) as i32;
    let level_of = |p: Vec2| -> i32 { ((opts.size_at(p) / hmin).log2().floor() as i32).clamp(0, levels) };
    let mut out: Vec<Vec2> = Vec::new();
    let graded = levels > 0;
    for j in 0..=levels {
        let hj = if j == levels { opts.h.min(hmin * 2f64.powi(j)) } else { hmin * 2f64.powi(j) };
        // points of finer levels hashed at this level's spacing
        let key = |p: Vec2| ((p.x / hj).floor() as i64, (p.y / hj).floor() as i64);
        let mut grid: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
        if graded {
            for (k, &q) in out.iter().enumerate() {
                grid.entry(key(q)).or_default().push(k as u32);
            }
        }
        // finer levels only near the grading centers that can use them
        let boxes: Vec<(Vec2, Vec2)> = if j == levels {
            vec![(lo, hi)]
        } else {
            opts.grading
                .iter()
                .filter_map(|g| {
                    let rad = (2.0 * hj - g.h_min) / g.grade.max(1e-300);
                    if rad < 0.0 {
                        return None;
                    }
                    let a = (g.center - Vec2::new(rad, rad)).sup(&lo);
                    let b = (g.center + Vec2::new(rad, rad)).inf(&hi);
                    (a.x <= b.x && a.y <= b.y).then_some((a, b))
                })
                .collect()
        };
        let dy = hj * 3f64.sqrt() / 2.0;
        let mut seen: std::collections::HashSet<(i64, i64)> = std::collections::HashSet::new();
        for (rlo, rhi) in boxes {
            // anchor lattices at the origin so they are nested consistently
            let i0 = (rlo.y / dy).floor() as i64;
            let i1 = (rhi.y / dy).ceil() as i64;
            for i in i0..=i1 {
                let y = i as f64 * dy;
                let shift = if i.rem_euclid(2) == 1 { 0.5 * hj } else { 0.0 };
                let m0 = ((rlo.x - shift) / hj).floor() as i64;
                let m1 = ((rhi.x - shift) / hj).ceil() as i64;
                for m in m0..=m1 {
                    if j < levels && !seen.insert((i, m)) {
                        continue;
                    }
                    let p = Vec2::new(m as f64 * hj + shift, y);
                    if graded && level_of(p) != j {
                        continue;
                    }
                    if !domain.contains(p) {
                        continue;
                    }
                    let hp = opts.size_at(p).min(hj * 2.0);
                    if domain.dist_to_boundary(p) < 0.55 * hj.min(hp) {
                        continue;
                    }
                    if graded {
                        let (kx, ky) = key(p);
                        let mut close = false;
                        'outer: for gx in kx - 1..=kx + 1 {
                            for gy in ky - 1..=ky + 1 {
                                if let Some(v) = grid.get(&(gx, gy)) {
                                    for &q in v {
                                        if (out[q as usize] - p).norm() < 0.6 * hj {
                                            close = true;
                                            break 'outer;
                                        }
                                    }
                                }
                            }
                        }
                        if close {
                            continue;
                        }
                        grid.entry(key(p)).or_default().push(out.len() as u32);
                    }
                    out.push(p);
                }
            }
        }
    }
    out
}

/// Default grading for a domain: refine towards cone vertices.
pub fn default_grading(domain: &Domain, h: f64) -> Vec<Grading> {
    match domain.spec() {
        DomainSpec::PlanarCone { .. } => domain
            .feature_points()
            .iter()
            .map(|&c| Grading { center: c, h_min: h / 32.0, grade: 0.25 })
            .collect(),
        _ => Vec::new(),
    }
}
