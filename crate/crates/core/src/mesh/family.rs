use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::perturb::{derive_seed, perturb_interior, PerturbationStats};
use super::{initial_triangulation, refine_regular, Mesh, MeshError, PolygonSpec};

/// The two quasi-uniform mesh families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshFamilyKind {
    /// Plain red refinement of the coarse mesh.
    Superconvergent,
    /// Red refinement followed by an interior perturbation on every level.
    Generic,
}

impl fmt::Display for MeshFamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Superconvergent => "superconvergent",
            Self::Generic => "generic",
        })
    }
}

impl FromStr for MeshFamilyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "superconvergent" | "super" | "structured" => Ok(Self::Superconvergent),
            "generic" | "perturbed" | "quasi-uniform" | "quasiuniform" => Ok(Self::Generic),
            other => Err(format!("unknown mesh family '{other}'")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationOptions {
    pub kappa: f64,
    pub seed: u64,
}

impl Default for PerturbationOptions {
    fn default() -> Self {
        Self {
            kappa: 0.2,
            seed: 0,
        }
    }
}

/// A family of meshes, coarsest first.
#[derive(Clone, Debug)]
pub struct MeshFamily {
    pub kind: MeshFamilyKind,
    pub meshes: Vec<Mesh>,
    /// Per-level perturbation counters (empty for the superconvergent family).
    pub perturbation: Vec<PerturbationStats>,
}

/// Builds `levels` meshes of the given family.
///
/// Both families share the unperturbed red-refinement hierarchy. The generic
/// family perturbs each level independently with a seed derived from
/// `(seed, level)`, so its levels are not nested.
pub fn build_family(
    spec: &PolygonSpec,
    kind: MeshFamilyKind,
    levels: usize,
    options: &PerturbationOptions,
) -> Result<MeshFamily, MeshError> {
    if levels < 2 {
        return Err(MeshError::InvalidPrecondition(format!(
            "a mesh family needs at least 2 levels, got {levels}"
        )));
    }
    let mut hierarchy = Vec::with_capacity(levels);
    hierarchy.push(initial_triangulation(spec)?);
    for j in 1..levels {
        let next = refine_regular(&hierarchy[j - 1])?;
        hierarchy.push(next);
    }
    match kind {
        MeshFamilyKind::Superconvergent => Ok(MeshFamily {
            kind,
            meshes: hierarchy,
            perturbation: Vec::new(),
        }),
        MeshFamilyKind::Generic => {
            let perturbed = std::thread::scope(|scope| {
                let handles: Vec<_> = hierarchy
                    .iter()
                    .map(|m| {
                        let seed = derive_seed(options.seed, m.level as u64);
                        scope.spawn(move || perturb_interior(m, options.kappa, seed))
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("perturbation thread panicked"))
                    .collect::<Result<Vec<_>, _>>()
            })?;
            let (meshes, perturbation) = perturbed.into_iter().unzip();
            Ok(MeshFamily {
                kind,
                meshes,
                perturbation,
            })
        }
    }
}
