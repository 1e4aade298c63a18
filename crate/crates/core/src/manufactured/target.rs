use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{ExactFields, ManufacturedError};
use crate::fem::{Discretization, TraceFunction, VolumeData, VolumeFunction};
use crate::geometry::Point;
use crate::mesh::Mesh;

/// How the analytic part of the target enters the quadrature.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetMode {
    /// `Delta phi` evaluated at every quadrature point.
    #[default]
    Quadrature,
    /// `Delta phi` interpolated at the mesh vertices.
    Nodal,
}

/// `y_target = y_h + Delta phi`, where `y_h` is the discrete harmonic
/// extension of the exact control on the same mesh.
#[derive(Clone, Debug)]
pub struct TargetData {
    pub mesh: Arc<Mesh>,
    /// L2 projection of the exact control onto the trace space.
    pub trace: TraceFunction,
    pub state: VolumeFunction,
    pub fields: ExactFields,
    pub mode: TargetMode,
    nodal_laplacian: Option<VolumeFunction>,
}

impl TargetData {
    /// Evaluates the target at a point of the mesh.
    pub fn eval_at(&self, x: Point) -> Option<f64> {
        let (t, bary) = self.mesh.locate(x)?;
        Some(self.value(t, bary, x))
    }
}

impl VolumeData for TargetData {
    fn value(&self, triangle: usize, bary: [f64; 3], x: Point) -> f64 {
        let y = self.state.eval_in(&self.mesh, triangle, bary);
        let lap = match &self.nodal_laplacian {
            Some(f) => f.eval_in(&self.mesh, triangle, bary),
            None => self.fields.laplacian(x),
        };
        y + lap
    }
}

/// Builds the target that makes the exact control optimal up to the
/// discretization error of the state.
pub fn build_y_omega(
    fields: &ExactFields,
    disc: &Discretization,
    mode: TargetMode,
) -> Result<TargetData, ManufacturedError> {
    let control = |x: Point, side: usize| fields.control(x, side);
    let (trace, state) = disc.harmonic_extension_of(&control)?;
    let nodal_laplacian = match mode {
        TargetMode::Quadrature => None,
        TargetMode::Nodal => {
            let eps = fields.problem.epsilon_corner;
            let half = 0.5 * fields.frame.omega;
            let values = disc
                .mesh
                .vertices
                .iter()
                .map(|&v| {
                    let lap = fields.laplacian(v);
                    if lap.is_finite() {
                        lap
                    } else {
                        // singular corner: sample on the bisector at distance eps
                        let dir = fields.frame.direction + half;
                        let o = fields.frame.origin;
                        fields.laplacian([o[0] + eps * dir.cos(), o[1] + eps * dir.sin()])
                    }
                })
                .collect();
            Some(VolumeFunction::new(values))
        }
    };
    Ok(TargetData {
        mesh: disc.mesh.clone(),
        trace,
        state,
        fields: fields.clone(),
        mode,
        nodal_laplacian,
    })
}
