use std::sync::Arc;

use super::{cantor_graph, CantorSpec};
use crate::error::{invalid, Error, Result};
use crate::geometry::{CoefficientField, Domain, DomainSpec, Vec2};
use crate::solver::{BoundaryArc, Grading, Mesh, MeshOptions, SolverOptions, System};

/// Mesh controls for the direct harmonic-measure computation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityCfg {
    /// Mesh size at the cone boundary; must not exceed gap/8.
    pub h: f64,
    /// Mesh size far from the boundary.
    pub h_far: f64,
    /// Growth rate of the mesh size away from the boundary kinks.
    pub grade: f64,
    /// Pole height above x.
    pub pole_height: f64,
}

impl DensityCfg {
    /// Finest admissible setting for a spec: h = gap/8.
    pub fn for_spec(spec: &CantorSpec) -> Self {
        Self { h: spec.gap_scale() / 8.0, h_far: 0.05, grade: 0.3, pole_height: 1.0 }
    }
}

/// ω(B((x,0), r)) measured on the truncated domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityReport {
    pub r: f64,
    /// Harmonic measure from the indicator solve.
    pub measured: f64,
    /// Same quantity from the adjoint (kernel) solve.
    pub measured_kernel: f64,
    /// measured / r.
    pub density: f64,
}

/// Harmonic measure of the boundary inside B((x,0), r), divided by r, for every radius.
pub fn measured_density(spec: &CantorSpec, x: f64, radii: &[f64], cfg: &DensityCfg) -> Result<Vec<DensityReport>> {
    let gap = spec.gap_scale();
    if !(cfg.h > 0.0) || cfg.h > gap / 8.0 * (1.0 + 1e-12) {
        return Err(Error::InvalidInput(format!("mesh size {} too coarse for depth {} (gap/8 = {})", cfg.h, spec.depth, gap / 8.0)));
    }
    if radii.iter().any(|&r| !(r > 0.0 && r < 1.0)) {
        return invalid("radii must lie in (0, 1)");
    }
    let domain = Domain::from_spec(&DomainSpec::CantorCone { k: spec.k, depth: spec.depth, aperture: spec.aperture })?;
    let graph = cantor_graph(spec)?;
    let grading = graph
        .breakpoints()
        .iter()
        .filter(|(bx, _)| (-1.0..=2.0).contains(bx))
        .map(|&(bx, by)| Grading { center: Vec2::new(bx, by), h_min: cfg.h, grade: cfg.grade })
        .collect();
    let opts = MeshOptions { allow_structured: false, ..MeshOptions::graded(cfg.h_far, grading) };
    let mesh = Arc::new(Mesh::generate(&domain, &opts)?);
    let sys = System::new(mesh, CoefficientField::identity(), SolverOptions::default())?;
    let pole = Vec2::new(x, cfg.pole_height);
    if !domain.contains(pole) {
        return invalid(format!("pole {pole:?} is outside the domain"));
    }
    let kernel = sys.harmonic_measure_kernel(pole)?;
    radii
        .iter()
        .map(|&r| {
            let arc = BoundaryArc::Ball { center: Vec2::new(x, 0.0), radius: r };
            let measured = sys.harmonic_measure(pole, &arc)?;
            let measured_kernel = sys.measure_of(&kernel, &arc)?;
            Ok(DensityReport { r, measured, measured_kernel, density: measured / r })
        })
        .collect()
}
