//! Planar domains with a Lipschitz-graph boundary portion Σ, coefficient fields,
//! the admissibility predicate for frequency centers, and cone vanishing orders.

mod admissible;
mod domain;
pub mod expr;
mod field;
mod graph;

pub use admissible::{admissible, local_tau, AdmissibleCfg};
pub use domain::{cone_vanishing_order_2d, BoundaryPiece, Domain, DomainSpec, Outer};
pub use field::{sqrtm_spd, sym_eigen, AffineMap, CoefficientField, FieldSpec, FieldValidation};
pub use graph::LipschitzGraph;

pub type Vec2 = nalgebra::Vector2<f64>;
pub type Mat2 = nalgebra::Matrix2<f64>;

/// Closest point to p on the segment [a, b].
pub fn closest_on_segment(p: Vec2, a: Vec2, b: Vec2) -> Vec2 {
    let d = b - a;
    let l2 = d.norm_squared();
    if l2 == 0.0 {
        return a;
    }
    let t = ((p - a).dot(&d) / l2).clamp(0.0, 1.0);
    a + d * t
}
