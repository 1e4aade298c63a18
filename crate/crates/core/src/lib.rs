//! Finite element laboratory for elliptic Dirichlet boundary control problems
//! on polygonal sector domains.
//!
//! The state is the (discrete) harmonic extension of a boundary control, the
//! cost is `1/2 |S u - y_target|^2 + nu/2 |u|^2_{L2(boundary)}`, and the
//! control may be subject to box constraints. The crate builds the meshes,
//! assembles the P1 operators, solves the discrete control problem and
//! measures experimental orders of convergence against exact solutions.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod check;
pub mod cli;
pub mod control;
pub mod fem;
pub mod geometry;
pub mod manufactured;
pub mod mesh;
pub mod study;
