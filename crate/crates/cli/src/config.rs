use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use freqlab_core::combinatorics::TreeParams;
use freqlab_core::geometry::expr::Expr;
use freqlab_core::geometry::FieldSpec;
use freqlab_core::solver::{Mesh, MeshOptions, SolverOptions, System};
use freqlab_core::{CoefficientField, DiscreteSolution, Domain, DomainSpec, Vec2};

use crate::error::{CliError, Result};

/// One experiment. Every section is optional at parse time; each command
/// requires the sections it reads. Unknown keys are rejected at every level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh_h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution: Option<SolutionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<FrequencyParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cover: Option<CoverParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_nodal: Option<BoundaryNodalParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub yau: Option<YauParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hopf: Option<HopfParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tree: Option<TreeParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cantor: Option<CantorParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

/// How the solution u is produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SolutionSpec {
    /// Solve div(A∇u) = 0 with closed-form Dirichlet data.
    Dirichlet { data: String },
    /// Nodal interpolant of a closed-form solution.
    Interpolate { expr: String },
    /// Discrete Green function with the given pole.
    Green { pole: [f64; 2] },
}

fn default_samples() -> usize {
    16
}

fn default_rel_tol() -> f64 {
    0.01
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyParams {
    pub center: [f64; 2],
    pub r_min: f64,
    pub r_max: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Asserted value of N at every radius.
    #[serde(default)]
    pub expect_n: Option<f64>,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverParams {
    pub window: [f64; 2],
    pub r_floor: f64,
    /// Asserts every residual sample lies within r_floor of this abscissa.
    #[serde(default)]
    pub residual_near: Option<f64>,
    /// Asserts the residual box-count slope is at most this.
    #[serde(default)]
    pub max_slope: Option<f64>,
    /// Asserts the number of balls.
    #[serde(default)]
    pub expect_balls: Option<usize>,
}

fn default_nodal_tol() -> f64 {
    0.1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryNodalParams {
    /// Abscissa of the boundary point.
    pub x: f64,
    pub radii: Vec<f64>,
    /// Enlargement S of the frequency ball.
    pub s: f64,
    /// Exponent α in the bound.
    pub alpha: f64,
    #[serde(default = "default_nodal_tol")]
    pub tolerance: f64,
}

fn default_variation() -> f64 {
    3.0
}

fn default_lift_checks() -> usize {
    3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct YauParams {
    pub count: usize,
    /// Ball centers form a `grid`×`grid` lattice on [lo, hi]².
    pub grid: usize,
    pub lo: f64,
    pub hi: f64,
    pub radius: f64,
    #[serde(default = "default_variation")]
    pub max_variation: f64,
    #[serde(default = "default_lift_checks")]
    pub lift_checks: usize,
}

fn default_threshold() -> f64 {
    1e-3
}

fn default_kappa() -> f64 {
    10.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HopfParams {
    pub window: [f64; 2],
    pub r_floor: f64,
    /// Pole of the harmonic measure.
    pub pole: [f64; 2],
    pub samples: usize,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_kappa")]
    pub max_kappa: f64,
}

fn default_sigma() -> f64 {
    3.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateParams {
    pub generations: u32,
    pub trials: u64,
    /// Asserted agreement between Monte Carlo and exact tails, in standard errors.
    #[serde(default = "default_sigma")]
    pub sigma: f64,
}

fn default_decay() -> f64 {
    1.2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CantorParams {
    pub k: u32,
    pub depth: u32,
    pub aperture: f64,
    pub x: f64,
    pub radii: Vec<f64>,
    /// Also solve for the harmonic measure.
    #[serde(default)]
    pub measure: bool,
    /// Required factor between consecutive bound(r)/r values.
    #[serde(default = "default_decay")]
    pub min_decay: f64,
    /// Depth of the interval endpoints used for box counting.
    #[serde(default)]
    pub box_depth: Option<u32>,
}

impl ExperimentConfig {
    /// Parses JSON text; the error names the offending key.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn domain(&self) -> Result<Domain> {
        let spec = self.domain.as_ref().ok_or_else(|| CliError::missing("domain"))?;
        Ok(Domain::from_spec(spec)?)
    }

    pub fn coefficient_field(&self) -> Result<CoefficientField> {
        match &self.field {
            None => Ok(CoefficientField::identity()),
            Some(f) => Ok(CoefficientField::from_spec(f)?),
        }
    }

    pub fn mesh_h(&self) -> Result<f64> {
        let h = self.mesh_h.ok_or_else(|| CliError::missing("mesh_h"))?;
        if !(h > 0.0 && h < 1.0) {
            return Err(CliError::Config(format!("mesh_h = {h} must lie in (0, 1)")));
        }
        Ok(h)
    }

    /// Builds u on a uniform mesh of size `mesh_h`.
    pub fn solve(&self, domain: &Domain, field: &CoefficientField) -> Result<DiscreteSolution> {
        let h = self.mesh_h()?;
        let spec = self.solution.as_ref().ok_or_else(|| CliError::missing("solution"))?;
        let opts = MeshOptions::uniform(h);
        match spec {
            SolutionSpec::Interpolate { expr } => {
                let e = Expr::parse(expr)?;
                let mesh = Arc::new(Mesh::generate(domain, &opts)?);
                Ok(DiscreteSolution::interpolate(mesh, field.clone(), |p| e.eval(p.x, p.y)))
            }
            SolutionSpec::Dirichlet { data } => {
                let e = Expr::parse(data)?;
                let sys = System::build(domain, field, &opts, SolverOptions::default())?;
                Ok(sys.solve_dirichlet(|p| e.eval(p.x, p.y))?)
            }
            SolutionSpec::Green { pole } => {
                let sys = System::build(domain, field, &opts, SolverOptions::default())?;
                Ok(sys.green_function(Vec2::new(pole[0], pole[1]), domain)?)
            }
        }
    }
}
