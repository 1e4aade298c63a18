use std::sync::Arc;

use super::ControlError;
use crate::fem::{
    dot, Discretization, QuadratureField, TraceFunction, TriangleRule, VolumeData, VolumeFunction,
};

/// The discrete control problem on one mesh.
///
/// The target is stored by its values at the quadrature points of the
/// discretization's triangle rule, so the tracking term of the objective and
/// the adjoint load are computed from identical samples.
#[derive(Debug)]
pub struct ControlProblem {
    pub disc: Arc<Discretization>,
    pub nu: f64,
    pub a: f64,
    pub b: f64,
    pub target: QuadratureField,
    target_load: Vec<f64>,
    normal_sign: f64,
    pub warnings: Vec<String>,
}

/// Gradient of the reduced objective with the states that produced it.
#[derive(Clone, Debug)]
pub struct ReducedResidual {
    /// `g_i = int_Gamma (nu u_h - dn phi_h) e_i`
    pub g: Vec<f64>,
    /// `g_i / int_Gamma e_i`
    pub lumped: Vec<f64>,
    pub state: VolumeFunction,
    pub adjoint: VolumeFunction,
    /// `M_Gamma dn phi_h`
    pub normal_moments: Vec<f64>,
}

impl ControlProblem {
    /// Builds the problem, requiring `nu > 0`, `a < b` and `a <= 0 <= b`.
    pub fn new(
        disc: Arc<Discretization>,
        nu: f64,
        a: f64,
        b: f64,
        target: QuadratureField,
    ) -> Result<Self, ControlError> {
        if !(a <= 0.0 && 0.0 <= b) {
            return Err(ControlError::InvalidProblem(format!(
                "0 must lie in [a, b] = [{a}, {b}]"
            )));
        }
        Self::new_allowing_excluded_zero(disc, nu, a, b, target)
    }

    /// Like [`ControlProblem::new`] but accepts bounds excluding zero, recording a warning.
    pub fn new_allowing_excluded_zero(
        disc: Arc<Discretization>,
        nu: f64,
        a: f64,
        b: f64,
        target: QuadratureField,
    ) -> Result<Self, ControlError> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(ControlError::InvalidProblem(format!(
                "nu = {nu} must be positive"
            )));
        }
        if !(a < b) || a.is_nan() || b.is_nan() || a == f64::INFINITY || b == f64::NEG_INFINITY {
            return Err(ControlError::InvalidProblem(format!(
                "bounds [{a}, {b}] must satisfy a < b"
            )));
        }
        let expected = disc.mesh.num_triangles() * target.rule.len();
        if target.values.len() != expected {
            return Err(ControlError::InvalidProblem(format!(
                "target has {} samples, mesh needs {expected}",
                target.values.len()
            )));
        }
        let mut warnings = Vec::new();
        if !(a <= 0.0 && 0.0 <= b) {
            warnings.push(format!("bounds [{a}, {b}] exclude zero"));
        }
        let target_load = disc.load_vector(&target);
        Ok(Self {
            disc,
            nu,
            a,
            b,
            target,
            target_load,
            normal_sign: 1.0,
            warnings,
        })
    }

    /// Samples `y_target` with the discretization's triangle rule and builds the problem.
    pub fn from_data(
        disc: Arc<Discretization>,
        nu: f64,
        a: f64,
        b: f64,
        y_target: &dyn VolumeData,
    ) -> Result<Self, ControlError> {
        let rule = disc.triangle_rule();
        let target = disc.sample(y_target, &rule)?;
        Self::new(disc, nu, a, b, target)
    }

    /// Problem with a vanishing target.
    pub fn zero_target(
        disc: Arc<Discretization>,
        nu: f64,
        a: f64,
        b: f64,
    ) -> Result<Self, ControlError> {
        let target = QuadratureField::zeros(&disc.mesh, disc.triangle_rule());
        Self::new(disc, nu, a, b, target)
    }

    pub fn is_unconstrained(&self) -> bool {
        self.a == f64::NEG_INFINITY && self.b == f64::INFINITY
    }

    pub fn has_finite_bounds(&self) -> bool {
        self.a.is_finite() && self.b.is_finite()
    }

    pub fn num_controls(&self) -> usize {
        self.disc.num_boundary()
    }

    pub fn triangle_rule(&self) -> &TriangleRule {
        &self.target.rule
    }

    /// Same problem with the sign of the discrete normal derivative reversed.
    /// Used to check that the derivative tests detect a broken gradient.
    #[doc(hidden)]
    pub fn with_flipped_normal_sign(mut self) -> Self {
        self.normal_sign = -self.normal_sign;
        self
    }

    pub fn state(&self, u: &TraceFunction) -> Result<VolumeFunction, ControlError> {
        Ok(self.disc.harmonic_extension(u)?)
    }

    /// `J_h(u) = 1/2 |S_h u - y_target|^2 + nu/2 |u|^2_Gamma`
    pub fn objective(&self, u: &TraceFunction) -> Result<f64, ControlError> {
        let y = self.state(u)?;
        Ok(self.objective_with_state(u, &y))
    }

    pub fn objective_with_state(&self, u: &TraceFunction, y: &VolumeFunction) -> f64 {
        0.5 * self.disc.squared_l2_distance(y, &self.target)
            + 0.5 * self.nu * self.disc.boundary_inner(u, u)
    }

    fn check_len(&self, u: &TraceFunction) -> Result<(), ControlError> {
        if u.len() != self.num_controls() {
            return Err(ControlError::InvalidProblem(format!(
                "control has {} coefficients, expected {}",
                u.len(),
                self.num_controls()
            )));
        }
        Ok(())
    }

    /// State, adjoint and weak normal derivative for given volume data `w`.
    fn adjoint_chain(
        &self,
        u: &TraceFunction,
        with_target: bool,
    ) -> Result<(VolumeFunction, VolumeFunction, Vec<f64>), ControlError> {
        self.check_len(u)?;
        let y = self.state(u)?;
        let mut w = self.disc.mass.matvec(&y.values);
        if with_target {
            w.iter_mut()
                .zip(&self.target_load)
                .for_each(|(w, f)| *w -= f);
        }
        let phi = self.disc.solve_homogeneous(&w)?;
        let mut r = self.disc.normal_derivative_moments(&phi, &w)?;
        if self.normal_sign != 1.0 {
            r.iter_mut().for_each(|v| *v *= self.normal_sign);
        }
        Ok((y, phi, r))
    }

    /// Gradient of `J_h` with respect to the control coefficients.
    pub fn reduced_residual(&self, u: &TraceFunction) -> Result<ReducedResidual, ControlError> {
        let (state, adjoint, normal_moments) = self.adjoint_chain(u, true)?;
        let mu = self.disc.boundary_mass.matvec(&u.values);
        let g: Vec<f64> = mu
            .iter()
            .zip(&normal_moments)
            .map(|(m, r)| self.nu * m - r)
            .collect();
        let lumped = g
            .iter()
            .zip(&self.disc.boundary_weights)
            .map(|(g, w)| g / w)
            .collect();
        Ok(ReducedResidual {
            g,
            lumped,
            state,
            adjoint,
            normal_moments,
        })
    }

    /// Hessian of `J_h` applied to `v`; the target does not enter.
    pub fn apply_reduced_hessian(&self, v: &TraceFunction) -> Result<TraceFunction, ControlError> {
        let (_, _, r) = self.adjoint_chain(v, false)?;
        let mv = self.disc.boundary_mass.matvec(&v.values);
        Ok(TraceFunction::new(
            mv.iter().zip(&r).map(|(m, r)| self.nu * m - r).collect(),
        ))
    }

    /// The discrete normal derivative of the adjoint held in `res`.
    pub fn normal_derivative(&self, res: &ReducedResidual) -> TraceFunction {
        TraceFunction::new(self.disc.solve_boundary_mass(&res.normal_moments))
    }

    /// Lumped `M_Gamma^{-1}` norm of a weak boundary vector.
    pub fn dual_norm(&self, g: &[f64]) -> f64 {
        g.iter()
            .zip(&self.disc.boundary_weights)
            .map(|(g, w)| g * g / w)
            .sum::<f64>()
            .sqrt()
    }

    /// Natural residual `nu (u - P(u - g / (nu m)))` in the lumped dual norm;
    /// for infinite bounds this is the dual norm of `g`.
    pub fn stationarity(&self, u: &TraceFunction, g: &[f64]) -> f64 {
        let m = &self.disc.boundary_weights;
        let s: f64 = (0..g.len())
            .map(|i| {
                let step = u.values[i] - g[i] / (self.nu * m[i]);
                let p = step.clamp(self.a, self.b);
                let r = self.nu * (u.values[i] - p) * m[i];
                r * r / m[i]
            })
            .sum();
        s.sqrt()
    }

    pub fn inner(&self, u: &TraceFunction, v: &TraceFunction) -> f64 {
        dot(&u.values, &v.values)
    }
}
