//! Zero sets, sign-constant balls on Σ, singular-set detection and box counting.

mod boxcount;
mod sign;
mod zero;

pub use boxcount::{box_counting_dimension, BoxCount};
pub use sign::{
    cover_report, detect_sign_change_points, detect_small_gradient_points, sign_constant_ball, square_sign_state,
    CoverBall, CoverReport,
};
pub use zero::{extract_zero_set, nodal_measure, Region, ZeroSet};

use crate::solver::Mesh;
use crate::geometry::Vec2;

/// Local mesh size at p, falling back to the global size off the mesh.
pub(crate) fn h_at(mesh: &Mesh, p: Vec2) -> f64 {
    mesh.local_h(p).unwrap_or(mesh.h())
}
