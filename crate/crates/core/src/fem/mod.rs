//! P1 finite elements: assembly, Dirichlet solves, the discrete harmonic
//! extension and the variational discrete normal derivative.

mod assembly;
mod discretization;
mod dofmap;
mod functions;
pub mod io;
mod quadrature;
mod solver;
mod sparse;

use thiserror::Error;

pub use assembly::{assemble_boundary_mass, assemble_mass, assemble_stiffness, local_stiffness};
pub use discretization::{cyclic_tridiagonal, BoundaryEvaluator, Discretization, ZERO_TRACE_TOL};
pub use dofmap::DofMap;
pub use functions::{
    map_point, Analytic, P1Field, QuadratureField, TraceFunction, VolumeData, VolumeFunction,
};
pub use quadrature::{LineRule, QuadratureOrders, TriangleRule};
pub use solver::{cg_solve, dot, CgOptions, CgOutcome, FnOperator, LinearOperator};
pub use sparse::{CsrMatrix, TripletBuilder};

#[derive(Debug, Error)]
pub enum FemError {
    #[error("degenerate element {triangle} (signed area {area})")]
    DegenerateElement { triangle: usize, area: f64 },
    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),
    #[error("CG did not converge after {iterations} iterations (relative residual {relative_residual:e})")]
    SolverDivergence {
        iterations: usize,
        relative_residual: f64,
    },
    #[error("function has nonzero boundary value {value:e} at vertex {vertex}")]
    NonzeroTrace { vertex: usize, value: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("parse error: {0}")]
    Parse(String),
}
