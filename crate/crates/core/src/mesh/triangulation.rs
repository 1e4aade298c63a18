use std::collections::HashMap;

use super::{MeshError, PolygonSpec};
use crate::geometry::{dist, midpoint, shape_ratio, signed_area, Point};

/// A boundary edge, oriented counterclockwise along the boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    /// Index of the triangle owning the edge.
    pub triangle: usize,
    /// Polygon side the edge lies on.
    pub segment: usize,
}

/// Conforming triangulation of a polygon.
///
/// Triangles are counterclockwise. `boundary_edges` is the boundary cycle in
/// counterclockwise order, starting at the vertex of the primary corner.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    /// `corner_vertices[j]` is the vertex sitting on polygon corner `j`.
    pub corner_vertices: Vec<usize>,
    pub level: usize,
    pub h: f64,
    pub domain: PolygonSpec,
}

impl Mesh {
    /// Assembles a mesh from raw vertices and counterclockwise triangles,
    /// deriving the boundary cycle, segment tags and corner vertices.
    pub fn from_parts(
        domain: PolygonSpec,
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        level: usize,
    ) -> Result<Self, MeshError> {
        let fail = |msg: String| Err(MeshError::TriangulationFailure(msg));
        let nv = vertices.len();
        let mut h: f64 = 0.0;
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return fail(format!("triangle {t} references a missing vertex"));
            }
            let [a, b, c] = tri.map(|v| vertices[v]);
            if signed_area(a, b, c) <= 0.0 {
                return fail(format!("triangle {t} has non-positive area"));
            }
            h = h.max(dist(a, b)).max(dist(b, c)).max(dist(c, a));
        }

        let mut edge_count: HashMap<(usize, usize), (usize, u8)> =
            HashMap::with_capacity(triangles.len() * 2);
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let e = edge_count.entry((a.min(b), a.max(b))).or_insert((t, 0));
                e.1 += 1;
                if e.1 > 2 {
                    return fail(format!("edge ({a}, {b}) shared by more than two triangles"));
                }
            }
        }

        // boundary edges keep the orientation they have in their triangle
        let mut next: Vec<Option<(usize, usize)>> = vec![None; nv];
        let mut n_boundary = 0;
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                if edge_count[&(a.min(b), a.max(b))].1 == 1 {
                    if next[a].is_some() {
                        return fail(format!("vertex {a} starts two boundary edges"));
                    }
                    next[a] = Some((b, t));
                    n_boundary += 1;
                }
            }
        }

        let tol = 1e-12 * domain.diameter().max(1.0);
        let mut corner_vertices = Vec::with_capacity(domain.len());
        for (j, &c) in domain.corners.iter().enumerate() {
            match (0..nv).find(|&v| dist(vertices[v], c) <= tol) {
                Some(v) => corner_vertices.push(v),
                None => return fail(format!("polygon corner {j} is not a mesh vertex")),
            }
        }

        let start = corner_vertices[domain.primary_corner];
        let mut boundary_edges = Vec::with_capacity(n_boundary);
        let mut v = start;
        loop {
            let Some((w, t)) = next[v] else {
                return fail(format!("boundary cycle broken at vertex {v}"));
            };
            let mid = midpoint(vertices[v], vertices[w]);
            let segment = domain.nearest_side(mid);
            if domain.distance_to_side(segment, mid) > tol
                || domain.distance_to_side(segment, vertices[v]) > tol
                || domain.distance_to_side(segment, vertices[w]) > tol
            {
                return fail(format!("boundary edge ({v}, {w}) is not on the polygon"));
            }
            boundary_edges.push(BoundaryEdge {
                vertices: [v, w],
                triangle: t,
                segment,
            });
            v = w;
            if v == start {
                break;
            }
            if boundary_edges.len() > n_boundary {
                return fail("boundary cycle does not close".into());
            }
        }
        if boundary_edges.len() != n_boundary {
            return fail(format!(
                "boundary edges form more than one cycle ({} of {n_boundary} visited)",
                boundary_edges.len()
            ));
        }

        Ok(Self {
            vertices,
            triangles,
            boundary_edges,
            corner_vertices,
            level,
            h,
            domain,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        // Euler: V - E + F = 1 for a simply connected triangulated polygon
        self.vertices.len() + self.triangles.len() - 1
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        signed_area(a, b, c)
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| self.triangle_area(t))
            .sum()
    }

    pub fn boundary_length(&self) -> f64 {
        self.boundary_edges
            .iter()
            .map(|e| dist(self.vertices[e.vertices[0]], self.vertices[e.vertices[1]]))
            .sum()
    }

    /// Largest circumradius/inradius ratio over all triangles.
    pub fn shape_constant(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.triangle_points(t);
                shape_ratio(a, b, c)
            })
            .fold(0.0, f64::max)
    }

    /// Flags for vertices on the boundary.
    pub fn boundary_flags(&self) -> Vec<bool> {
        let mut flags = vec![false; self.vertices.len()];
        for e in &self.boundary_edges {
            flags[e.vertices[0]] = true;
            flags[e.vertices[1]] = true;
        }
        flags
    }

    /// Triangles incident to each vertex.
    pub fn vertex_triangles(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                adj[v].push(t);
            }
        }
        adj
    }

    /// Locates the triangle containing `x` by linear search, returning its
    /// index and the barycentric coordinates.
    pub fn locate(&self, x: Point) -> Option<(usize, [f64; 3])> {
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for t in 0..self.triangles.len() {
            let [a, b, c] = self.triangle_points(t);
            let l = crate::geometry::barycentric(a, b, c, x);
            let worst = l[0].min(l[1]).min(l[2]);
            if worst >= 0.0 {
                return Some((t, l));
            }
            if best.as_ref().is_none_or(|b| worst > b.2) {
                best = Some((t, l, worst));
            }
        }
        // accept points a rounding error outside the closure
        best.filter(|b| b.2 > -1e-12).map(|b| (b.0, b.1))
    }
}

fn red_split(tri: [usize; 3], mids: [usize; 3]) -> [[usize; 3]; 4] {
    let [a, b, c] = tri;
    let [ab, bc, ca] = mids;
    [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]
}

/// Splits every triangle into four via its edge midpoints.
///
/// Parent vertices keep their indices; the new midpoint vertices follow in
/// order of first appearance.
pub fn refine_regular(mesh: &Mesh) -> Result<Mesh, MeshError> {
    let mut vertices = mesh.vertices.clone();
    vertices.reserve(mesh.num_edges());
    let mut mid_index: HashMap<(usize, usize), usize> = HashMap::with_capacity(mesh.num_edges());
    let mut triangles = Vec::with_capacity(4 * mesh.triangles.len());
    for tri in &mesh.triangles {
        let mut mids = [0usize; 3];
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            mids[k] = *mid_index.entry((a.min(b), a.max(b))).or_insert_with(|| {
                vertices.push(midpoint(mesh.vertices[a], mesh.vertices[b]));
                vertices.len() - 1
            });
        }
        triangles.extend(red_split(*tri, mids));
    }
    Mesh::from_parts(mesh.domain.clone(), vertices, triangles, mesh.level + 1)
}

fn refine_times(mut mesh: Mesh, times: usize) -> Result<Mesh, MeshError> {
    for _ in 0..times {
        mesh = refine_regular(&mesh)?;
    }
    mesh.level = 0;
    Ok(mesh)
}

/// Maximum number of triangles in a coarse mesh.
pub const MAX_COARSE_TRIANGLES: usize = 64;

/// Spacing of the structured grid tried for grid-aligned polygons.
const GRID_SPACING: f64 = 1.0 / 3.0;

/// Structured mesh over a grid of squares cut along the `(1, -1)` diagonal,
/// restricted to the polygon. Only succeeds when the kept triangles tile the
/// polygon exactly.
fn structured_grid(spec: &PolygonSpec) -> Option<Mesh> {
    let s = GRID_SPACING;
    let on_grid = |v: f64| ((v / s).round() * s - v).abs() < 1e-12;
    if !spec.corners.iter().all(|c| on_grid(c[0]) && on_grid(c[1])) {
        return None;
    }
    let xmin = spec
        .corners
        .iter()
        .map(|c| c[0])
        .fold(f64::INFINITY, f64::min);
    let ymin = spec
        .corners
        .iter()
        .map(|c| c[1])
        .fold(f64::INFINITY, f64::min);
    let xmax = spec
        .corners
        .iter()
        .map(|c| c[0])
        .fold(f64::NEG_INFINITY, f64::max);
    let ymax = spec
        .corners
        .iter()
        .map(|c| c[1])
        .fold(f64::NEG_INFINITY, f64::max);
    let i0 = (xmin / s).round() as i64;
    let j0 = (ymin / s).round() as i64;
    let nx = ((xmax - xmin) / s).round() as i64;
    let ny = ((ymax - ymin) / s).round() as i64;
    let mut index: HashMap<(i64, i64), usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut kept_area = 0.0;
    let mut id = |i: i64, j: i64, vertices: &mut Vec<Point>| -> usize {
        *index.entry((i, j)).or_insert_with(|| {
            let p = |k: i64| if k == 0 { 0.0 } else { k as f64 / 3.0 };
            vertices.push([p(i), p(j)]);
            vertices.len() - 1
        })
    };
    for j in j0..j0 + ny {
        for i in i0..i0 + nx {
            let cells = [
                [(i, j), (i + 1, j), (i, j + 1)],
                [(i + 1, j), (i + 1, j + 1), (i, j + 1)],
            ];
            for cell in cells {
                let cx = cell.iter().map(|c| c.0 as f64).sum::<f64>() * s / 3.0;
                let cy = cell.iter().map(|c| c.1 as f64).sum::<f64>() * s / 3.0;
                if spec.contains([cx, cy], -1.0) {
                    let tri = cell.map(|(a, b)| id(a, b, &mut vertices));
                    triangles.push(tri);
                    kept_area += 0.5 * s * s;
                }
            }
        }
    }
    if triangles.len() > MAX_COARSE_TRIANGLES || (kept_area - spec.area()).abs() > 1e-10 {
        return None;
    }
    Mesh::from_parts(spec.clone(), vertices, triangles, 0).ok()
}

/// Fan triangulation from the primary corner, uniformly subdivided as far as
/// the coarse-mesh budget allows.
fn fan(spec: &PolygonSpec) -> Result<Mesh, MeshError> {
    let n = spec.len();
    let p = spec.primary_corner;
    let vertices = spec.corners.clone();
    let triangles: Vec<[usize; 3]> = (1..n - 1)
        .map(|k| [p, (p + k) % n, (p + k + 1) % n])
        .collect();
    let mesh = Mesh::from_parts(spec.clone(), vertices, triangles, 0)?;
    let mut times = 0;
    while mesh.num_triangles() * 4usize.pow(times + 1) <= MAX_COARSE_TRIANGLES {
        times += 1;
    }
    refine_times(mesh, times as usize)
}

/// Deterministic coarse mesh of the polygon.
///
/// Triangles are red-subdivided to 64 elements; grid-aligned polygons get a
/// structured diagonal grid of spacing 1/3; everything else a subdivided fan
/// from the primary corner.
pub fn initial_triangulation(spec: &PolygonSpec) -> Result<Mesh, MeshError> {
    if spec.len() < 3 || spec.area() <= 0.0 {
        return Err(MeshError::TriangulationFailure("degenerate polygon".into()));
    }
    for j in 0..spec.len() {
        if spec.side_length(j) < 1e-12 {
            return Err(MeshError::TriangulationFailure(format!(
                "polygon side {j} has zero length"
            )));
        }
    }
    if spec.len() > 3 {
        if let Some(mesh) = structured_grid(spec) {
            return Ok(mesh);
        }
    }
    fan(spec)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::mesh::build_sector_domain;

    fn unit_square_two_triangles() -> Mesh {
        let spec =
            PolygonSpec::from_corners(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], 0)
                .unwrap();
        Mesh::from_parts(
            spec,
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![[0, 1, 3], [1, 2, 3]],
            0,
        )
        .unwrap()
    }

    #[test]
    fn triangle_domain_coarse_mesh() {
        let m = initial_triangulation(&build_sector_domain(PI / 2.0).unwrap()).unwrap();
        assert_eq!(m.num_triangles(), 64);
        assert_eq!(m.corner_vertices.len(), 3);
        assert!((m.area() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn l_shape_is_structured_with_origin_vertex() {
        let m = initial_triangulation(&build_sector_domain(1.5 * PI).unwrap()).unwrap();
        assert_eq!(m.num_triangles(), 54);
        assert_eq!(m.vertices[m.corner_vertices[0]], [0.0, 0.0]);
        assert_eq!(m.boundary_edges[0].vertices[0], m.corner_vertices[0]);
    }

    #[test]
    fn generic_angles_use_fan() {
        for w in [2.0, 2.5, 3.9, 5.0, 6.1] {
            let spec = build_sector_domain(w).unwrap();
            let m = initial_triangulation(&spec).unwrap();
            assert!(m.num_triangles() <= MAX_COARSE_TRIANGLES);
            assert!((m.area() - spec.area()).abs() < 1e-12);
        }
    }

    #[test]
    fn red_refinement_counts() {
        let m = unit_square_two_triangles();
        let r = refine_regular(&m).unwrap();
        assert_eq!(r.num_triangles(), 4 * m.num_triangles());
        assert_eq!(r.num_vertices(), m.num_vertices() + m.num_edges());
        assert_eq!(r.h, m.h / 2.0);
        assert_eq!(&r.vertices[..4], &m.vertices[..]);
        let rr = refine_regular(&r).unwrap();
        assert_eq!(rr.num_triangles(), 32);
    }

    #[test]
    fn one_triangle_twice_gives_sixteen_similar() {
        let spec =
            PolygonSpec::from_corners(vec![[0.0, 0.0], [1.0, 0.0], [0.25, 0.75]], 0).unwrap();
        let m = Mesh::from_parts(
            spec,
            vec![[0.0, 0.0], [1.0, 0.0], [0.25, 0.75]],
            vec![[0, 1, 2]],
            0,
        )
        .unwrap();
        let rr = refine_regular(&refine_regular(&m).unwrap()).unwrap();
        assert_eq!(rr.num_triangles(), 16);
        let ratio = m.shape_constant();
        for t in 0..16 {
            let [a, b, c] = rr.triangle_points(t);
            assert!((shape_ratio(a, b, c) - ratio).abs() < 1e-10);
        }
    }

    #[test]
    fn boundary_length_is_perimeter() {
        let spec = build_sector_domain(1.5 * PI).unwrap();
        let mut m = initial_triangulation(&spec).unwrap();
        for _ in 0..3 {
            assert!((m.boundary_length() - spec.perimeter()).abs() < 1e-12);
            m = refine_regular(&m).unwrap();
        }
    }

    #[test]
    fn locate_finds_containing_triangle() {
        let m = unit_square_two_triangles();
        let (t, l) = m.locate([0.75, 0.7]).unwrap();
        assert_eq!(t, 1);
        assert!(l.iter().all(|&x| x >= 0.0));
        assert!(m.locate([2.0, 2.0]).is_none());
    }
}
