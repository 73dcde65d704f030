pub mod boundary_nodal;
pub mod cantor;
pub mod combinatorics;
pub mod cover;
pub mod frequency;
pub mod hopf;
pub mod yau;
