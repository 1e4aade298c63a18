use std::f64::consts::{FRAC_PI_2, PI, TAU};

use super::{ManufacturedError, ManufacturedProblem};
use crate::geometry::{dot, Point};
use crate::mesh::PolygonSpec;

const CASE_TOL: f64 = 1e-12;

/// Polar frame at a corner: `theta` is measured counterclockwise from the
/// ray with direction angle `direction` and lies in `[0, omega]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CornerFrame {
    pub origin: Point,
    pub direction: f64,
    pub omega: f64,
}

impl CornerFrame {
    /// Frame at the origin with the `theta = 0` ray along the positive x axis.
    pub fn at_origin(omega: f64) -> Self {
        Self {
            origin: [0.0, 0.0],
            direction: 0.0,
            omega,
        }
    }

    /// `(r, theta)` of `x`; points slightly outside the sector snap to the nearer ray.
    pub fn polar(&self, x: Point) -> (f64, f64) {
        let dx = x[0] - self.origin[0];
        let dy = x[1] - self.origin[1];
        let r = dx.hypot(dy);
        if r == 0.0 {
            return (0.0, 0.0);
        }
        let mut theta = dy.atan2(dx) - self.direction;
        theta = theta.rem_euclid(TAU);
        if theta > self.omega {
            theta = if theta > self.omega + 0.5 * (TAU - self.omega) {
                0.0
            } else {
                self.omega
            };
        }
        (r, theta)
    }
}

/// `s = r^lambda sin(lambda theta)` and its Cartesian gradient.
pub fn eval_singular(
    lambda: f64,
    frame: &CornerFrame,
    x: Point,
) -> Result<(f64, Point), ManufacturedError> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(ManufacturedError::InvalidProblem(format!(
            "singular exponent {lambda} must be positive"
        )));
    }
    let (r, theta) = frame.polar(x);
    if r == 0.0 && lambda < 1.0 {
        return Err(ManufacturedError::CornerSingularity { lambda });
    }
    let value = r.powf(lambda) * (lambda * theta).sin();
    // local components lambda r^(lambda-1) (sin((lambda-1) theta), cos((lambda-1) theta))
    let scale = if r == 0.0 {
        if lambda == 1.0 {
            1.0
        } else {
            0.0
        }
    } else {
        lambda * r.powf(lambda - 1.0)
    };
    let beta = (lambda - 1.0) * theta - frame.direction;
    let (sb, cb) = beta.sin_cos();
    Ok((value, [scale * sb, scale * cb]))
}

/// The bubble case belonging to the opening angle `omega1`.
pub fn bubble_case_for(omega1: f64) -> Result<u8, ManufacturedError> {
    if !(omega1 > 0.0 && omega1 < TAU) {
        return Err(ManufacturedError::InvalidProblem(format!(
            "opening angle {omega1} outside (0, 2pi)"
        )));
    }
    Ok(if omega1 <= FRAC_PI_2 + CASE_TOL {
        1
    } else if omega1 <= 0.75 * PI + CASE_TOL {
        2
    } else if omega1 <= 1.25 * PI + CASE_TOL {
        3
    } else {
        4
    })
}

/// Value, gradient and Laplacian of the polynomial cut-off of the given case.
pub fn bubble(case: u8, omega1: f64, x: Point) -> Result<(f64, Point, f64), ManufacturedError> {
    let expected = bubble_case_for(omega1)?;
    if case != expected {
        return Err(ManufacturedError::CaseMismatch { case, omega1 });
    }
    let [x1, x2] = x;
    Ok(match case {
        1 => {
            let (s, c) = omega1.sin_cos();
            (s * (x1 - 1.0) + (1.0 - c) * x2, [s, 1.0 - c], 0.0)
        }
        2 => ((1.0 - x1) * (1.0 - x2), [-(1.0 - x2), -(1.0 - x1)], 0.0),
        3 => (
            (1.0 - x1 * x1) * (1.0 - x2),
            [-2.0 * x1 * (1.0 - x2), -(1.0 - x1 * x1)],
            -2.0 * (1.0 - x2),
        ),
        _ => (
            (1.0 - x1 * x1) * (1.0 - x2 * x2),
            [-2.0 * x1 * (1.0 - x2 * x2), -2.0 * x2 * (1.0 - x1 * x1)],
            -2.0 * (1.0 - x2 * x2) - 2.0 * (1.0 - x1 * x1),
        ),
    })
}

/// Closed-form adjoint state `phi = A s b`, its derivatives, and the exact
/// control obtained from its normal derivative.
#[derive(Clone, Debug)]
pub struct ExactFields {
    pub problem: ManufacturedProblem,
    pub domain: PolygonSpec,
    pub frame: CornerFrame,
}

impl ExactFields {
    pub fn new(problem: ManufacturedProblem, domain: PolygonSpec) -> Self {
        let frame = CornerFrame::at_origin(problem.omega1);
        Self {
            problem,
            domain,
            frame,
        }
    }

    fn parts(&self, x: Point) -> Result<(f64, Point, f64, Point, f64), ManufacturedError> {
        let p = &self.problem;
        let (s, gs) = eval_singular(p.lambda, &self.frame, x)?;
        let (b, gb, lb) = bubble(p.bubble_case, p.omega1, x)?;
        Ok((s, gs, b, gb, lb))
    }

    pub fn phi(&self, x: Point) -> f64 {
        let (r, theta) = self.frame.polar(x);
        let s = r.powf(self.problem.lambda) * (self.problem.lambda * theta).sin();
        let b = bubble(self.problem.bubble_case, self.problem.omega1, x)
            .map(|v| v.0)
            .unwrap_or(f64::NAN);
        self.problem.amplitude * s * b
    }

    pub fn grad_phi(&self, x: Point) -> Result<Point, ManufacturedError> {
        let (s, gs, b, gb, _) = self.parts(x)?;
        let amp = self.problem.amplitude;
        Ok([amp * (b * gs[0] + s * gb[0]), amp * (b * gs[1] + s * gb[1])])
    }

    /// `Delta phi = A (2 grad s . grad b + s Delta b)`; infinite at a singular corner.
    pub fn laplacian(&self, x: Point) -> f64 {
        match self.parts(x) {
            Ok((s, gs, _, gb, lb)) => self.problem.amplitude * (2.0 * dot(gs, gb) + s * lb),
            Err(_) => f64::INFINITY,
        }
    }

    /// Outward normal derivative of `phi` on polygon side `side`. At a
    /// singular corner the one-sided limit (an infinity) is returned.
    pub fn normal_derivative(&self, x: Point, side: usize) -> f64 {
        let n = self.domain.outward_normal(side);
        match self.grad_phi(x) {
            Ok(g) => dot(n, g),
            Err(_) => {
                // n . grad s -> -lambda r^(lambda-1) on both rays at the corner
                let b0 = bubble(self.problem.bubble_case, self.problem.omega1, x)
                    .map(|v| v.0)
                    .unwrap_or(0.0);
                let lead = -self.problem.amplitude * b0;
                if lead == 0.0 {
                    0.0
                } else {
                    f64::INFINITY.copysign(lead)
                }
            }
        }
    }

    /// `u = P_[a,b](dn phi / nu)`.
    pub fn control(&self, x: Point, side: usize) -> f64 {
        let p = &self.problem;
        let v = self.normal_derivative(x, side) / p.nu;
        if p.constrained {
            v.clamp(p.a, p.b)
        } else {
            v
        }
    }

    /// `d = nu u - dn phi`, nonzero only where the control sits at a bound.
    pub fn residual(&self, x: Point, side: usize) -> f64 {
        let p = &self.problem;
        let dn = self.normal_derivative(x, side);
        let v = dn / p.nu;
        if !p.constrained || (p.a < v && v < p.b) {
            return 0.0;
        }
        p.nu * v.clamp(p.a, p.b) - dn
    }
}
