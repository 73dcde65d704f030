use std::io::Write;
use std::sync::Arc;

use super::fem::basis_gradients;
use super::mesh::{Mesh, NodeTag};
use crate::error::{Error, Result};
use crate::geometry::{CoefficientField, Domain, Vec2};

/// Nodal P1 solution on a mesh.
#[derive(Clone, Debug)]
pub struct DiscreteSolution {
    mesh: Arc<Mesh>,
    field: CoefficientField,
    values: Vec<f64>,
    residual_norm: f64,
}

impl DiscreteSolution {
    pub fn new(mesh: Arc<Mesh>, field: CoefficientField, values: Vec<f64>, residual_norm: f64) -> Self {
        assert_eq!(mesh.n_nodes(), values.len());
        Self { mesh, field, values, residual_norm }
    }

    /// Nodal interpolant of a closed-form function.
    pub fn interpolate(mesh: Arc<Mesh>, field: CoefficientField, f: impl Fn(Vec2) -> f64) -> Self {
        let values = mesh.nodes().iter().map(|&p| f(p)).collect();
        Self::new(mesh, field, values, 0.0)
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn field(&self) -> &CoefficientField {
        &self.field
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn residual_norm(&self) -> f64 {
        self.residual_norm
    }

    /// Linear combination a·self + b·other on the same mesh.
    pub fn combine(&self, a: f64, other: &DiscreteSolution, b: f64) -> Self {
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Self::new(self.mesh.clone(), self.field.clone(), values, self.residual_norm.max(other.residual_norm))
    }

    pub fn scaled(&self, a: f64) -> Self {
        let values = self.values.iter().map(|x| a * x).collect();
        Self::new(self.mesh.clone(), self.field.clone(), values, self.residual_norm)
    }

    /// Value at p, or `None` outside the triangulation.
    pub fn try_eval(&self, p: Vec2) -> Option<f64> {
        let (t, l) = self.mesh.locate(p)?;
        let tri = self.mesh.triangles()[t];
        Some((0..3).map(|k| l[k] * self.values[tri[k] as usize]).sum())
    }

    /// Value at p, extended by zero outside the triangulation.
    pub fn eval(&self, p: Vec2) -> f64 {
        self.try_eval(p).unwrap_or(0.0)
    }

    /// Gradient on triangle t.
    pub fn gradient_on(&self, t: usize) -> Vec2 {
        let tri = self.mesh.triangles()[t];
        let g = basis_gradients(self.mesh.triangle(t));
        (0..3).map(|k| g[k] * self.values[tri[k] as usize]).sum()
    }

    /// Cell-wise gradient field.
    pub fn gradient(&self) -> Vec<Vec2> {
        (0..self.mesh.triangles().len()).map(|t| self.gradient_on(t)).collect()
    }

    /// (A∇u, ∇u) on triangle t with A taken at the centroid.
    pub fn energy_density(&self, t: usize) -> f64 {
        let g = self.gradient_on(t);
        (self.field.at(self.mesh.centroid(t)) * g).dot(&g)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest |u| over Σ-tagged nodes.
    pub fn max_abs_on_sigma(&self) -> f64 {
        self.values
            .iter()
            .zip(self.mesh.tags())
            .filter(|(_, t)| **t == NodeTag::Sigma)
            .fold(0.0, |m, (v, _)| m.max(v.abs()))
    }

    /// Writes `x,y,u` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,y,u")?;
        for (p, u) in self.mesh.nodes().iter().zip(&self.values) {
            writeln!(w, "{:.16e},{:.16e},{:.16e}", p.x, p.y, u)?;
        }
        Ok(())
    }
}

/// Normal-derivative trace u(x + δν_in)/δ with δ = 3h at Σ abscissae.
pub fn normal_derivative_trace(u: &DiscreteSolution, domain: &Domain, xs: &[f64]) -> Result<Vec<f64>> {
    let on_sigma = u.max_abs_on_sigma();
    let scale = u.max_abs().max(1.0);
    if on_sigma > 1e-8 * scale {
        return Err(Error::InvalidInput(format!("solution does not vanish on Σ (max {on_sigma:e})")));
    }
    let delta = 3.0 * u.mesh().h();
    xs.iter()
        .map(|&x| {
            let base = domain
                .sigma_point(x)
                .ok_or_else(|| Error::InvalidInput(format!("abscissa {x} is not on Σ")))?;
            let nu = domain.inward_normal(x).expect("Σ has a normal");
            let q = base + nu * delta;
            if !domain.contains(q) || domain.dist_to_nonsigma_boundary(base) < 2.0 * delta {
                return Err(Error::InvalidInput(format!("sample {x} is too close to the Σ-chart edge")));
            }
            Ok(u.eval(q) / delta)
        })
        .collect()
}
