//! Newton polyhedra, toric fans and candidate poles of Archimedean local
//! zeta functions of polynomial mappings.

pub mod cli;
pub mod expr;
pub mod fan;
pub mod geometry;
pub mod lattice;
pub mod nondegen;
pub mod poles;
pub mod simplex;
pub mod verify;
