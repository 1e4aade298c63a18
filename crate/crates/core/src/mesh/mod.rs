//! Sector domains, nested triangulations and the O(h^2)-irregularity diagnostic.

mod domain;
mod family;
pub mod io;
mod irregular;
mod perturb;
mod triangulation;

use thiserror::Error;

pub use domain::{build_sector_domain, PolygonSpec};
pub use family::{build_family, MeshFamily, MeshFamilyKind, PerturbationOptions};
pub use irregular::{check_h2_irregular, IrregularityReport};
pub use perturb::{derive_seed, perturb_interior, PerturbationStats, MAX_KAPPA};
pub use triangulation::{
    initial_triangulation, refine_regular, BoundaryEdge, Mesh, MAX_COARSE_TRIANGLES,
};

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("sector angle {omega} outside [pi/3, 2pi)")]
    OutOfRange { omega: f64 },
    #[error("triangulation failure: {0}")]
    TriangulationFailure(String),
    #[error("precondition violated: {0}")]
    InvalidPrecondition(String),
    #[error("mesh parse error: {0}")]
    Parse(String),
}

/// Local polar coordinates of `x` at corner `j` of the mesh domain.
pub fn local_polar(mesh: &Mesh, corner: usize, x: crate::geometry::Point) -> (f64, f64) {
    mesh.domain.local_polar(corner, x)
}
