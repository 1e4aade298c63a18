use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Mesh, MeshError};
use crate::geometry::{dist, shape_ratio, signed_area, Point};

/// Largest admissible relative displacement.
pub const MAX_KAPPA: f64 = 0.3;

const MAX_HALVINGS: usize = 20;

/// Outcome counters of [`perturb_interior`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PerturbationStats {
    pub moved: usize,
    /// Vertices left in place because no valid displacement was found.
    pub unmoved: usize,
    pub halvings: usize,
}

/// SplitMix64 step, used to derive independent per-level seeds.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Moves every interior vertex by a pseudo-random vector of length at most
/// `kappa` times its shortest incident edge.
///
/// A displacement is accepted when all incident triangles keep positive area
/// and a shape ratio at most twice the worst ratio of the input mesh;
/// otherwise it is halved, up to 20 times, after which the vertex stays put.
/// Vertices are visited in index order, so the result depends only on the
/// mesh, `kappa` and `seed`.
pub fn perturb_interior(
    mesh: &Mesh,
    kappa: f64,
    seed: u64,
) -> Result<(Mesh, PerturbationStats), MeshError> {
    if !(0.0..=MAX_KAPPA).contains(&kappa) {
        return Err(MeshError::InvalidPrecondition(format!(
            "perturbation kappa {kappa} outside [0, {MAX_KAPPA}]"
        )));
    }
    let mut out = mesh.clone();
    let mut stats = PerturbationStats::default();
    if kappa == 0.0 {
        return Ok((out, stats));
    }
    let shape_bound = 2.0 * mesh.shape_constant();
    let on_boundary = mesh.boundary_flags();
    let adjacency = mesh.vertex_triangles();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for v in 0..out.vertices.len() {
        // draw unconditionally so that the stream does not depend on acceptance
        let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let radius_fraction: f64 = rng.gen::<f64>().sqrt();
        if on_boundary[v] {
            continue;
        }
        let min_edge = adjacency[v]
            .iter()
            .flat_map(|&t| out.triangles[t])
            .filter(|&w| w != v)
            .map(|w| dist(out.vertices[v], out.vertices[w]))
            .fold(f64::INFINITY, f64::min);
        let mut step = kappa * min_edge * radius_fraction;
        let origin = out.vertices[v];
        let mut accepted = false;
        for attempt in 0..=MAX_HALVINGS {
            let candidate: Point = [
                origin[0] + step * angle.cos(),
                origin[1] + step * angle.sin(),
            ];
            let valid = adjacency[v].iter().all(|&t| {
                let pts =
                    out.triangles[t].map(|w| if w == v { candidate } else { out.vertices[w] });
                signed_area(pts[0], pts[1], pts[2]) > 0.0
                    && shape_ratio(pts[0], pts[1], pts[2]) <= shape_bound
            });
            if valid {
                out.vertices[v] = candidate;
                stats.halvings += attempt;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if accepted {
            stats.moved += 1;
        } else {
            stats.unmoved += 1;
        }
    }
    out.h = (0..out.triangles.len())
        .map(|t| {
            let [a, b, c] = out.triangle_points(t);
            dist(a, b).max(dist(b, c)).max(dist(c, a))
        })
        .fold(0.0, f64::max);
    Ok((out, stats))
}
