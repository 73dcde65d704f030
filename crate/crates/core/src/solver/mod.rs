//! P1 finite elements for div(A∇u) = 0: meshing, assembly, Dirichlet solves, Green
//! functions, harmonic measure, eigenpairs and boundary traces.

mod eigen;
mod fem;
mod mesh;
mod solution;
pub mod sparse;

pub use eigen::{dirichlet_eigenpairs, eigenpairs, EigenOptions, EigenPair};
pub use fem::{green_function, harmonic_measure, solve_dirichlet, BoundaryArc, HarmonicMeasure, SolverOptions, System};
pub use mesh::{default_grading, Grading, Mesh, MeshOptions, NodeTag};
pub use solution::{normal_derivative_trace, DiscreteSolution};
