//! Exact solutions with prescribed corner singularities, the data that makes
//! them optimal, and the interpolants used to measure discretization errors.

mod exact;
mod interpolation;
mod target;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fem::FemError;
use crate::mesh::{build_sector_domain, MeshError, PolygonSpec};

pub use exact::{bubble, bubble_case_for, eval_singular, CornerFrame, ExactFields};
pub use interpolation::{
    casas_raymond_interpolant, interpolate_control, modified_lagrange_interpolant, EDGE_SAMPLES,
};
pub use target::{build_y_omega, TargetData, TargetMode};

#[derive(Debug, Error)]
pub enum ManufacturedError {
    #[error("gradient of r^{lambda} sin(lambda theta) is unbounded at the corner")]
    CornerSingularity { lambda: f64 },
    #[error("bubble case {case} does not match opening angle {omega1}")]
    CaseMismatch { case: u8, omega1: f64 },
    #[error("both control bounds are active next to boundary node {node}")]
    AmbiguousBounds { node: usize },
    #[error("invalid manufactured problem: {0}")]
    InvalidProblem(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Fem(#[from] FemError),
}

/// Which singular exponent multiplies the bubble.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LambdaChoice {
    /// `lambda = pi / omega1`
    Leading,
    /// `lambda = 2 pi / omega1`; only for reentrant corners.
    Special,
}

impl fmt::Display for LambdaChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Leading => "leading",
            Self::Special => "special",
        })
    }
}

impl FromStr for LambdaChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "leading" | "lambda1" => Ok(Self::Leading),
            "special" | "2lambda1" => Ok(Self::Special),
            other => Err(format!("unknown lambda choice '{other}'")),
        }
    }
}

/// One manufactured test problem on the sector domain of opening `omega1`.
#[derive(Clone, Debug, PartialEq)]
pub struct ManufacturedProblem {
    pub omega1: f64,
    pub lambda_choice: LambdaChoice,
    pub bubble_case: u8,
    pub constrained: bool,
    pub nu: f64,
    pub a: f64,
    pub b: f64,
    /// Distance from a singular corner at which the exact control is sampled
    /// in place of the corner value.
    pub epsilon_corner: f64,
    /// Factor on the adjoint state; zero gives a vanishing exact solution.
    pub amplitude: f64,
    pub lambda1: f64,
    pub lambda: f64,
}

impl ManufacturedProblem {
    /// `nu = 1`; bounds `a = -1/lambda1`, `b = 1` when constrained.
    pub fn new(
        omega1: f64,
        lambda_choice: LambdaChoice,
        constrained: bool,
    ) -> Result<Self, ManufacturedError> {
        let domain = build_sector_domain(omega1)?;
        let bubble_case = bubble_case_for(omega1)?;
        let lambda1 = PI / omega1;
        let lambda = match lambda_choice {
            LambdaChoice::Leading => lambda1,
            LambdaChoice::Special => {
                if omega1 <= PI {
                    return Err(ManufacturedError::InvalidProblem(format!(
                        "the special exponent needs a reentrant corner, omega1 = {omega1}"
                    )));
                }
                2.0 * lambda1
            }
        };
        let (a, b) = if constrained {
            (-1.0 / lambda1, 1.0)
        } else {
            (f64::NEG_INFINITY, f64::INFINITY)
        };
        Ok(Self {
            omega1,
            lambda_choice,
            bubble_case,
            constrained,
            nu: 1.0,
            a,
            b,
            epsilon_corner: 1e-6 * domain.diameter(),
            amplitude: 1.0,
            lambda1,
            lambda,
        })
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self, ManufacturedError> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(ManufacturedError::InvalidProblem(format!(
                "corner epsilon {epsilon} must be positive"
            )));
        }
        self.epsilon_corner = epsilon;
        Ok(self)
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn with_nu(mut self, nu: f64) -> Result<Self, ManufacturedError> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(ManufacturedError::InvalidProblem(format!(
                "nu = {nu} must be positive"
            )));
        }
        self.nu = nu;
        Ok(self)
    }

    /// Replaces the bounds; infinite bounds on both sides make the problem unconstrained.
    pub fn with_bounds(mut self, a: f64, b: f64) -> Result<Self, ManufacturedError> {
        if !(a < b) || a.is_nan() || b.is_nan() {
            return Err(ManufacturedError::InvalidProblem(format!(
                "bounds [{a}, {b}] must satisfy a < b"
            )));
        }
        self.a = a;
        self.b = b;
        self.constrained = a.is_finite() || b.is_finite();
        Ok(self)
    }

    pub fn domain(&self) -> Result<PolygonSpec, ManufacturedError> {
        Ok(build_sector_domain(self.omega1)?)
    }

    pub fn exact_fields(&self) -> Result<ExactFields, ManufacturedError> {
        Ok(ExactFields::new(self.clone(), self.domain()?))
    }
}

/// Convenience for [`ManufacturedProblem::exact_fields`].
pub fn exact_fields(p: &ManufacturedProblem) -> Result<ExactFields, ManufacturedError> {
    p.exact_fields()
}
