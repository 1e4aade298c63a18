use serde::{Deserialize, Serialize};

use super::StudyError;
use crate::control::{ControlProblem, ControlSolution};
use crate::geometry::dist;

/// Which bound the clamped nodes near a corner sit on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundTaken {
    Lower,
    Upper,
    Mixed,
    None,
}

/// Boundary nodes near a corner and how many of them sit at a bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatteningReport {
    pub level: Option<usize>,
    pub corner: usize,
    pub rho: f64,
    /// Boundary nodes with distance at most `rho` from the corner, the corner included.
    pub nodes: usize,
    pub at_bound: usize,
    pub fraction: f64,
    pub bound: BoundTaken,
    /// Distance from the corner of the farthest node of the clamped run that
    /// starts at the corner and continues along the boundary in both directions.
    pub clamped_radius: f64,
}

/// Counts the boundary nodes within `rho` of corner `corner` at which the
/// discrete control is at a bound.
pub fn corner_flattening_report(
    s: &ControlSolution,
    p: &ControlProblem,
    corner: usize,
    rho: f64,
) -> Result<FlatteningReport, StudyError> {
    if p.is_unconstrained() {
        return Err(StudyError::InvalidConfig(
            "corner flattening needs a constrained solution".into(),
        ));
    }
    let mesh = &p.disc.mesh;
    if corner >= mesh.corner_vertices.len() {
        return Err(StudyError::InvalidConfig(format!("no corner {corner}")));
    }
    let cv = mesh.corner_vertices[corner];
    let x0 = mesh.vertices[cv];
    let dofs = &p.disc.dofs;
    let nb = dofs.num_boundary();
    let state = |k: usize| -> i8 {
        let u = s.u.values[k];
        if u <= p.a {
            -1
        } else if u >= p.b {
            1
        } else {
            0
        }
    };
    let (mut nodes, mut lower, mut upper) = (0, 0, 0);
    for (k, &v) in dofs.boundary.iter().enumerate() {
        if dist(mesh.vertices[v], x0) <= rho {
            nodes += 1;
            match state(k) {
                -1 => lower += 1,
                1 => upper += 1,
                _ => {}
            }
        }
    }
    let at_bound = lower + upper;
    let bound = match (lower > 0, upper > 0) {
        (true, false) => BoundTaken::Lower,
        (false, true) => BoundTaken::Upper,
        (true, true) => BoundTaken::Mixed,
        (false, false) => BoundTaken::None,
    };
    let start = dofs.local[cv];
    let run_state = state(start);
    let mut clamped_radius = 0.0f64;
    if run_state != 0 {
        for step in [1, nb - 1] {
            let mut k = start;
            for _ in 1..nb {
                k = (k + step) % nb;
                if state(k) != run_state {
                    break;
                }
                clamped_radius = clamped_radius.max(dist(mesh.vertices[dofs.boundary[k]], x0));
            }
        }
    }
    Ok(FlatteningReport {
        level: None,
        corner,
        rho,
        nodes,
        at_bound,
        fraction: if nodes > 0 {
            at_bound as f64 / nodes as f64
        } else {
            0.0
        },
        bound,
        clamped_radius,
    })
}
