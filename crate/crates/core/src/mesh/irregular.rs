use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::Mesh;
use crate::geometry::dist;

/// Opposite-edge tolerance is `EDGE_PAIR_CONSTANT * h^2 / diam`.
pub const EDGE_PAIR_CONSTANT: f64 = 4.0;
/// Tangent jumps at non-corner boundary vertices must stay below `TANGENT_CONSTANT * h / diam`.
pub const TANGENT_CONSTANT: f64 = 4.0;
/// Exempt elements may cover at most `EXEMPT_AREA_CONSTANT * (h / diam)^2` of the domain.
pub const EXEMPT_AREA_CONSTANT: f64 = 1.0;

/// Result of checking the near-parallelogram structure of a mesh.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IrregularityReport {
    /// Largest opposite-edge length difference over all interior edge quadrilaterals.
    pub max_interior_discrepancy: f64,
    /// `max_interior_discrepancy / h^2`.
    pub discrepancy_ratio: f64,
    /// Area of elements adjacent to exempted edges over the domain area.
    pub e2_area_fraction: f64,
    pub exempt_edges: usize,
    pub interior_edges: usize,
    /// Non-corner boundary vertices failing the tangent or corresponding-edge test.
    pub boundary_vertex_violations: usize,
    pub verdict: bool,
}

/// Checks whether the mesh is O(h^2)-irregular.
///
/// Every interior edge is the diagonal of the quadrilateral formed by its two
/// triangles; the edge is kept when both pairs of opposite sides agree in
/// length up to `4 h^2 / diam`, otherwise it is exempted and its two
/// triangles count towards the exempt area. Boundary vertices other than the
/// polygon corners must see nearly equal tangents and congruent neighbouring
/// elements. The polygon corners form the fixed exceptional vertex set.
pub fn check_h2_irregular(mesh: &Mesh) -> IrregularityReport {
    let diam = mesh.domain.diameter();
    let h = mesh.h;
    let edge_tol = EDGE_PAIR_CONSTANT * h * h / diam;
    let len = |a: usize, b: usize| dist(mesh.vertices[a], mesh.vertices[b]);

    let mut owners: HashMap<(usize, usize), (usize, usize)> =
        HashMap::with_capacity(mesh.triangles.len() * 2);
    let mut shared = Vec::new();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let key = (a.min(b), a.max(b));
            match owners.get(&key) {
                Some(&(t0, k0)) => shared.push((t0, k0, t, k)),
                None => {
                    owners.insert(key, (t, k));
                }
            }
        }
    }

    let total_area = mesh.area();
    let mut max_disc: f64 = 0.0;
    let mut exempt = 0;
    let mut exempt_area = 0.0;
    for &(t0, k0, t1, k1) in &shared {
        // t0 = (p, q, a) counterclockwise, t1 = (q, p, b)
        let tri0 = mesh.triangles[t0];
        let tri1 = mesh.triangles[t1];
        let p = tri0[k0];
        let q = tri0[(k0 + 1) % 3];
        let a = tri0[(k0 + 2) % 3];
        let b = tri1[(k1 + 2) % 3];
        // quadrilateral p -> b -> q -> a
        let d1 = (len(p, b) - len(q, a)).abs();
        let d2 = (len(b, q) - len(a, p)).abs();
        let d = d1.max(d2);
        max_disc = max_disc.max(d);
        if d > edge_tol {
            exempt += 1;
            exempt_area += mesh.triangle_area(t0) + mesh.triangle_area(t1);
        }
    }

    let violations = boundary_violations(mesh, edge_tol, TANGENT_CONSTANT * h / diam);
    let discrepancy_ratio = max_disc / (h * h);
    let e2_area_fraction = exempt_area / total_area;
    let verdict = discrepancy_ratio <= EDGE_PAIR_CONSTANT / diam
        && e2_area_fraction <= EXEMPT_AREA_CONSTANT * (h / diam).powi(2)
        && violations <= mesh.domain.len();
    IrregularityReport {
        max_interior_discrepancy: max_disc,
        discrepancy_ratio,
        e2_area_fraction,
        exempt_edges: exempt,
        interior_edges: shared.len(),
        boundary_vertex_violations: violations,
        verdict,
    }
}

fn boundary_violations(mesh: &Mesh, edge_tol: f64, tangent_tol: f64) -> usize {
    let n = mesh.boundary_edges.len();
    let is_corner = {
        let mut f = vec![false; mesh.vertices.len()];
        for &v in &mesh.corner_vertices {
            f[v] = true;
        }
        f
    };
    // edge lengths of the owning triangle in clockwise order, starting with the boundary edge
    let clockwise_lengths = |k: usize| -> [f64; 3] {
        let e = mesh.boundary_edges[k];
        let [s, t] = e.vertices;
        let tri = mesh.triangles[e.triangle];
        let c = tri.into_iter().find(|&v| v != s && v != t).unwrap_or(s);
        let l = |a: usize, b: usize| dist(mesh.vertices[a], mesh.vertices[b]);
        [l(s, t), l(s, c), l(c, t)]
    };
    let tangent = |k: usize| {
        let [s, t] = mesh.boundary_edges[k].vertices;
        let (a, b) = (mesh.vertices[s], mesh.vertices[t]);
        let l = dist(a, b);
        [(b[0] - a[0]) / l, (b[1] - a[1]) / l]
    };
    let mut violations = 0;
    for k in 0..n {
        let incoming = (k + n - 1) % n;
        let x = mesh.boundary_edges[k].vertices[0];
        if is_corner[x] {
            continue;
        }
        let (ta, tb) = (tangent(incoming), tangent(k));
        let jump = (ta[0] - tb[0]).hypot(ta[1] - tb[1]);
        let la = clockwise_lengths(incoming);
        let lb = clockwise_lengths(k);
        let mismatch = la.iter().zip(lb).any(|(a, b)| (a - b).abs() > edge_tol);
        if jump > tangent_tol || mismatch {
            violations += 1;
        }
    }
    violations
}
