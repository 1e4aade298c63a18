//! The discrete Dirichlet boundary control problem: objective, reduced
//! derivatives, an unconstrained CG solver and a primal-dual active set solver.

mod problem;
mod solvers;

use thiserror::Error;

use crate::fem::FemError;

pub use problem::{ControlProblem, ReducedResidual};
pub use solvers::{
    solve_constrained_pdas, solve_unconstrained, trace_csv, verify_discrete_vi, vi_violation_at,
    ControlSolution, PdasTraceRow, SolverOptions,
};

#[derive(Debug, Error)]
pub enum ControlError {
    #[error("invalid control problem: {0}")]
    InvalidProblem(String),
    #[error("active set iteration did not settle within {iterations} iterations")]
    MaxIterationsExceeded { iterations: usize },
    #[error(transparent)]
    Fem(#[from] FemError),
}

impl ControlError {
    pub(crate) fn into_fem(self) -> FemError {
        match self {
            Self::Fem(e) => e,
            other => FemError::DimensionMismatch(other.to_string()),
        }
    }
}
