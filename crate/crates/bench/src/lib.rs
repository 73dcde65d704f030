//! Fixtures shared by the criterion benches.

use freqlab_core::solver::{solve_dirichlet, DiscreteSolution};
use freqlab_core::{CoefficientField, Domain};

/// Unit half-disk with its flat side on the x-axis.
pub fn half_disk() -> Domain {
    Domain::half_ball([0.0, 0.0], 1.0).expect("half-disk is valid")
}

/// FEM solution of the Dirichlet problem with data 2xy on the half-disk.
pub fn half_disk_2xy(h: f64) -> (Domain, DiscreteSolution) {
    let d = half_disk();
    let u = solve_dirichlet(&d, &CoefficientField::identity(), |p| 2.0 * p.x * p.y, h).expect("solve");
    (d, u)
}
