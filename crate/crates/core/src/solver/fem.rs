use std::sync::Arc;

use super::mesh::{Mesh, MeshOptions, NodeTag};
use super::solution::DiscreteSolution;
use super::sparse::{pcg, Csr, Mic0, Rect};
use crate::error::{Error, Result};
use crate::geometry::{CoefficientField, Domain, Vec2};

/// Linear-solver settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Relative residual target.
    pub tol: f64,
    /// MIC(0) relaxation parameter.
    pub omega: f64,
    /// Iteration cap is `iter_factor · √(#unknowns)`.
    pub iter_factor: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-10, omega: 0.97, iter_factor: 10.0 }
    }
}

/// A boundary subset used as indicator data for harmonic measure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundaryArc {
    All,
    /// Σ-nodes with abscissa in [x0, x1].
    SigmaInterval { x0: f64, x1: f64 },
    /// Boundary nodes inside a ball.
    Ball { center: Vec2, radius: f64 },
    /// Boundary nodes whose polar angle about `center` lies in [theta0, theta1].
    Angular { center: Vec2, theta0: f64, theta1: f64 },
}

impl BoundaryArc {
    /// Signed distance from p into the arc, along the boundary direction; `None` if p
    /// is not eligible.
    fn depth(&self, p: Vec2, tag: NodeTag) -> Option<f64> {
        match *self {
            BoundaryArc::All => Some(f64::INFINITY),
            BoundaryArc::SigmaInterval { x0, x1 } => (tag == NodeTag::Sigma).then(|| (p.x - x0).min(x1 - p.x)),
            BoundaryArc::Ball { center, radius } => Some(radius - (p - center).norm()),
            BoundaryArc::Angular { center, theta0, theta1 } => {
                let d = p - center;
                let tau = std::f64::consts::TAU;
                let th = theta0 + (d.y.atan2(d.x) - theta0).rem_euclid(tau);
                let inside = (th - theta0).min(theta1 - th);
                let outside = if th > theta1 { -(th - theta1).min(theta0 + tau - th) } else { inside };
                Some(outside * d.norm())
            }
        }
    }
}

/// Per-boundary-node discrete harmonic measure for one pole.
#[derive(Clone, Debug)]
pub struct HarmonicMeasure {
    pole: Vec2,
    /// Weight of each boundary node (indexed like [`System::boundary_nodes`]).
    pub weights: Vec<f64>,
}

impl HarmonicMeasure {
    pub fn pole(&self) -> Vec2 {
        self.pole
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Assembled P1 stiffness system of a mesh and coefficient field.
#[derive(Debug)]
pub struct System {
    mesh: Arc<Mesh>,
    field: CoefficientField,
    opts: SolverOptions,
    k_full: Csr,
    k_ii: Csr,
    k_ib: Rect,
    pre: Mic0,
    int_of: Vec<u32>,
    bnd_of: Vec<u32>,
    interior: Vec<usize>,
    boundary: Vec<usize>,
    bnd_cell: Vec<f64>,
    bnd_edge: Vec<f64>,
    lumped: Vec<f64>,
}

/// Gradients of the three P1 basis functions on a counter-clockwise triangle.
pub(crate) fn basis_gradients(p: [Vec2; 3]) -> [Vec2; 3] {
    let two_a = (p[1] - p[0]).perp(&(p[2] - p[0]));
    let g = |j: usize, k: usize| Vec2::new(p[j].y - p[k].y, p[k].x - p[j].x) / two_a;
    [g(1, 2), g(2, 0), g(0, 1)]
}

impl System {
    pub fn new(mesh: Arc<Mesh>, field: CoefficientField, opts: SolverOptions) -> Result<Self> {
        let n = mesh.n_nodes();
        let mut trip = Vec::with_capacity(mesh.triangles().len() * 9);
        let mut lumped = vec![0.0; n];
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let p = mesh.triangle(t);
            let area = mesh.area(t);
            let a = field.at(mesh.centroid(t));
            let g = basis_gradients(p);
            for i in 0..3 {
                lumped[tri[i] as usize] += area / 3.0;
                let ag = a * g[i];
                for j in 0..3 {
                    trip.push((tri[j], tri[i], area * ag.dot(&g[j])));
                }
            }
        }
        let k_full = Csr::from_triplets(n, trip);
        let mut int_of = vec![u32::MAX; n];
        let mut bnd_of = vec![u32::MAX; n];
        let mut interior = Vec::new();
        let mut boundary = Vec::new();
        for (i, t) in mesh.tags().iter().enumerate() {
            if t.is_boundary() {
                bnd_of[i] = boundary.len() as u32;
                boundary.push(i);
            } else {
                int_of[i] = interior.len() as u32;
                interior.push(i);
            }
        }
        if interior.is_empty() {
            return Err(Error::EmptyInterior);
        }
        let k_ii = k_full.submatrix(&int_of, interior.len(), &int_of, interior.len()).into_square();
        let k_ib = k_full.submatrix(&int_of, interior.len(), &bnd_of, boundary.len());
        let pre = Mic0::new(&k_ii, opts.omega)?;
        let (bnd_cell, bnd_edge) = boundary_cells(&mesh, &bnd_of, boundary.len());
        Ok(Self { mesh, field, opts, k_full, k_ii, k_ib, pre, int_of, bnd_of, interior, boundary, bnd_cell, bnd_edge, lumped })
    }

    /// Meshes the domain and assembles.
    pub fn build(domain: &Domain, field: &CoefficientField, mesh: &MeshOptions, opts: SolverOptions) -> Result<Self> {
        let m = Mesh::generate(domain, mesh)?;
        Self::new(Arc::new(m), field.clone(), opts)
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn field(&self) -> &CoefficientField {
        &self.field
    }

    pub fn stiffness(&self) -> &Csr {
        &self.k_full
    }

    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary
    }

    /// Boundary length attributed to each boundary node.
    pub fn boundary_cells(&self) -> &[f64] {
        &self.bnd_cell
    }

    /// Lumped mass (one third of the adjacent triangle areas) per node.
    pub fn lumped_mass(&self) -> &[f64] {
        &self.lumped
    }

    fn max_iter(&self) -> usize {
        (self.opts.iter_factor * (self.interior.len() as f64).sqrt()).ceil() as usize
    }

    /// Solves K_II u_I = f − K_IB g from a zero guess.
    pub(crate) fn solve_interior(&self, f: &[f64]) -> Result<(Vec<f64>, f64)> {
        let mut x = vec![0.0; self.interior.len()];
        let st = pcg(&self.k_ii, &self.pre, f, &mut x, self.opts.tol, self.max_iter())?;
        Ok((x, st.relative_residual))
    }

    fn assemble_solution(&self, x_int: &[f64], g_bnd: &[f64], residual: f64) -> DiscreteSolution {
        let mut u = vec![0.0; self.mesh.n_nodes()];
        for (k, &i) in self.interior.iter().enumerate() {
            u[i] = x_int[k];
        }
        for (k, &i) in self.boundary.iter().enumerate() {
            u[i] = g_bnd[k];
        }
        DiscreteSolution::new(self.mesh.clone(), self.field.clone(), u, residual)
    }

    /// Solves div(A∇u) = 0 with u = data on ∂Ω.
    pub fn solve_dirichlet(&self, data: impl Fn(Vec2) -> f64) -> Result<DiscreteSolution> {
        let nodes = self.mesh.nodes();
        let g: Vec<f64> = self.boundary.iter().map(|&i| data(nodes[i])).collect();
        self.solve_boundary_values(&g)
    }

    /// Solves with prescribed values at the boundary nodes (ordered like `boundary_nodes`).
    pub fn solve_boundary_values(&self, g: &[f64]) -> Result<DiscreteSolution> {
        if g.len() != self.boundary.len() {
            return Err(Error::InvalidInput("boundary data length mismatch".into()));
        }
        let f: Vec<f64> = self.k_ib.mul(g).into_iter().map(|v| -v).collect();
        let (x, res) = self.solve_interior(&f)?;
        Ok(self.assemble_solution(&x, g, res))
    }

    /// Discrete Green function with a unit point mass lumped at the node nearest the pole.
    pub fn green_function(&self, pole: Vec2, domain: &Domain) -> Result<DiscreteSolution> {
        let min_dist = 10.0 * self.mesh.h();
        if !domain.contains(pole) || domain.dist_to_boundary(pole) < min_dist {
            return Err(Error::PoleTooClose { pole: [pole.x, pole.y], min_dist });
        }
        let node = self
            .mesh
            .nearest_node(pole, |i| self.int_of[i] != u32::MAX)
            .ok_or(Error::EmptyInterior)?;
        let mut f = vec![0.0; self.interior.len()];
        f[self.int_of[node] as usize] = 1.0;
        let (x, res) = self.solve_interior(&f)?;
        Ok(self.assemble_solution(&x, &vec![0.0; self.boundary.len()], res))
    }

    /// Mollified indicator of an arc at the boundary nodes and the arc length it carries.
    pub fn arc_data(&self, arc: &BoundaryArc) -> Result<Vec<f64>> {
        let nodes = self.mesh.nodes();
        let tags = self.mesh.tags();
        let mut data = vec![0.0; self.boundary.len()];
        let mut length = 0.0;
        let mut scale: f64 = 0.0;
        for (k, &i) in self.boundary.iter().enumerate() {
            if let Some(s) = arc.depth(nodes[i], tags[i]) {
                let l = self.bnd_edge[k];
                let v = (0.5 + s / l).clamp(0.0, 1.0);
                data[k] = v;
                if v > 0.0 {
                    length += v * self.bnd_cell[k];
                    scale = scale.max(l);
                }
            }
        }
        if !matches!(arc, BoundaryArc::All) && length < 2.0 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::DegenerateArc { length, min_length: 2.0 * scale });
        }
        Ok(data)
    }

    /// Harmonic measure of an arc seen from the pole, by solving with the arc indicator.
    pub fn harmonic_measure(&self, pole: Vec2, arc: &BoundaryArc) -> Result<f64> {
        let data = self.arc_data(arc)?;
        let sol = self.solve_boundary_values(&data)?;
        sol.try_eval(pole)
            .ok_or_else(|| Error::InvalidInput(format!("pole {pole:?} is not inside the mesh")))
    }

    /// Discrete harmonic measure of every boundary node from one adjoint solve:
    /// ω_b = −(K_BI g)_b with K_II g = (barycentric weights of the pole).
    pub fn harmonic_measure_kernel(&self, pole: Vec2) -> Result<HarmonicMeasure> {
        let (t, lam) = self
            .mesh
            .locate(pole)
            .ok_or_else(|| Error::InvalidInput(format!("pole {pole:?} is not inside the mesh")))?;
        let tri = self.mesh.triangles()[t];
        let mut f = vec![0.0; self.interior.len()];
        let mut direct = vec![0.0; self.boundary.len()];
        for k in 0..3 {
            let i = tri[k] as usize;
            if self.int_of[i] != u32::MAX {
                f[self.int_of[i] as usize] += lam[k];
            } else {
                direct[self.bnd_of[i] as usize] += lam[k];
            }
        }
        let (g, _) = self.solve_interior(&f)?;
        let kg = self.k_ib.mul_t(&g);
        let weights = kg.iter().zip(&direct).map(|(a, d)| d - a).collect();
        Ok(HarmonicMeasure { pole, weights })
    }

    /// Evaluates an arc against a precomputed kernel.
    pub fn measure_of(&self, hm: &HarmonicMeasure, arc: &BoundaryArc) -> Result<f64> {
        let data = self.arc_data(arc)?;
        Ok(hm.weights.iter().zip(&data).map(|(w, d)| w * d).sum())
    }

    /// Bilinear form a(u,u) = uᵀKu.
    pub fn energy(&self, u: &[f64]) -> f64 {
        let ku = self.k_full.mul(u);
        u.iter().zip(&ku).map(|(a, b)| a * b).sum()
    }

    /// Boundary flux pairing Σ_b u_b (Ku)_b.
    pub fn boundary_flux_pairing(&self, u: &[f64]) -> f64 {
        let ku = self.k_full.mul(u);
        self.boundary.iter().map(|&b| u[b] * ku[b]).sum()
    }

    /// Relative algebraic residual of the interior equations for nodal values u.
    pub fn residual(&self, u: &[f64]) -> f64 {
        let ku = self.k_full.mul(u);
        let num: f64 = self.interior.iter().map(|&i| ku[i] * ku[i]).sum::<f64>().sqrt();
        let g: Vec<f64> = self.boundary.iter().map(|&b| u[b]).collect();
        let den = super::sparse::norm(&self.k_ib.mul(&g));
        if den == 0.0 {
            num
        } else {
            num / den
        }
    }

    pub(crate) fn k_ii(&self) -> &Csr {
        &self.k_ii
    }
}

/// Boundary edges are those used by exactly one triangle; returns per-boundary-node
/// attributed length (half the adjacent edges) and mean adjacent edge length.
fn boundary_cells(mesh: &Mesh, bnd_of: &[u32], nb: usize) -> (Vec<f64>, Vec<f64>) {
    use std::collections::HashMap;
    let mut count: HashMap<(u32, u32), u32> = HashMap::with_capacity(mesh.triangles().len() * 2);
    for t in mesh.triangles() {
        for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            *count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    let mut cell = vec![0.0; nb];
    let mut deg = vec![0u32; nb];
    for (&(a, b), &c) in &count {
        if c == 1 {
            let l = (mesh.nodes()[a as usize] - mesh.nodes()[b as usize]).norm();
            for v in [a, b] {
                let k = bnd_of[v as usize];
                if k != u32::MAX {
                    cell[k as usize] += 0.5 * l;
                    deg[k as usize] += 1;
                }
            }
        }
    }
    let edge = cell.iter().zip(&deg).map(|(c, &d)| if d > 0 { 2.0 * c / d as f64 } else { mesh.h() }).collect();
    (cell, edge)
}

/// Meshes, assembles and solves div(A∇u) = 0 with Dirichlet data at mesh size h.
pub fn solve_dirichlet(
    domain: &Domain,
    field: &CoefficientField,
    data: impl Fn(Vec2) -> f64,
    h: f64,
) -> Result<DiscreteSolution> {
    let sys = System::build(domain, field, &MeshOptions::uniform(h), SolverOptions::default())?;
    if sys.interior_nodes().len() < 1000 {
        return Err(Error::InvalidInput(format!(
            "mesh size {h} leaves only {} interior nodes (need ≥ 1000)",
            sys.interior_nodes().len()
        )));
    }
    sys.solve_dirichlet(data)
}

/// Discrete Green function at mesh size h.
pub fn green_function(domain: &Domain, field: &CoefficientField, pole: Vec2, h: f64) -> Result<DiscreteSolution> {
    System::build(domain, field, &MeshOptions::uniform(h), SolverOptions::default())?.green_function(pole, domain)
}

/// Harmonic measure of an arc at mesh size h.
pub fn harmonic_measure(domain: &Domain, field: &CoefficientField, pole: Vec2, arc: &BoundaryArc, h: f64) -> Result<f64> {
    System::build(domain, field, &MeshOptions::uniform(h), SolverOptions::default())?.harmonic_measure(pole, arc)
}
