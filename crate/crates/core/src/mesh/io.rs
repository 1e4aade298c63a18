//! Plain-text mesh format.
//!
//! ```text
//! vertices N triangles T bedges B
//! x y                      (N lines)
//! a b c                    (T lines, 0-based, counterclockwise)
//! v0 v1 triangle segment   (B lines, boundary cycle order)
//! level L
//! corners M primary P
//! x y angle vertex         (M lines)
//! ```
//! Floats are printed with shortest round-trip precision.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use super::{BoundaryEdge, Mesh, MeshError, PolygonSpec};

pub fn mesh_to_string(mesh: &Mesh) -> String {
    let mut s = String::with_capacity(48 * (mesh.vertices.len() + mesh.triangles.len()));
    let _ = writeln!(
        s,
        "vertices {} triangles {} bedges {}",
        mesh.vertices.len(),
        mesh.triangles.len(),
        mesh.boundary_edges.len()
    );
    for v in &mesh.vertices {
        let _ = writeln!(s, "{} {}", v[0], v[1]);
    }
    for t in &mesh.triangles {
        let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
    }
    for e in &mesh.boundary_edges {
        let _ = writeln!(
            s,
            "{} {} {} {}",
            e.vertices[0], e.vertices[1], e.triangle, e.segment
        );
    }
    let _ = writeln!(s, "level {}", mesh.level);
    let _ = writeln!(
        s,
        "corners {} primary {}",
        mesh.domain.len(),
        mesh.domain.primary_corner
    );
    for (j, c) in mesh.domain.corners.iter().enumerate() {
        let _ = writeln!(
            s,
            "{} {} {} {}",
            c[0], c[1], mesh.domain.angles[j], mesh.corner_vertices[j]
        );
    }
    s
}

pub fn write_mesh<W: Write>(mesh: &Mesh, mut w: W) -> std::io::Result<()> {
    w.write_all(mesh_to_string(mesh).as_bytes())
}

struct Lines<I> {
    inner: I,
    line_no: usize,
}

impl<I: Iterator<Item = std::io::Result<String>>> Lines<I> {
    fn next_fields(&mut self) -> Result<Vec<String>, MeshError> {
        loop {
            self.line_no += 1;
            let line = self
                .inner
                .next()
                .ok_or_else(|| {
                    MeshError::Parse(format!("unexpected end of input at line {}", self.line_no))
                })?
                .map_err(|e| MeshError::Parse(e.to_string()))?;
            let fields: Vec<String> = line.split_whitespace().map(str::to_owned).collect();
            if !fields.is_empty() {
                return Ok(fields);
            }
        }
    }

    fn numbers<T: std::str::FromStr>(&mut self, n: usize) -> Result<Vec<T>, MeshError> {
        let fields = self.next_fields()?;
        if fields.len() != n {
            return Err(MeshError::Parse(format!(
                "line {}: expected {n} fields, found {}",
                self.line_no,
                fields.len()
            )));
        }
        fields
            .iter()
            .map(|f| {
                f.parse::<T>().map_err(|_| {
                    MeshError::Parse(format!("line {}: bad number '{f}'", self.line_no))
                })
            })
            .collect()
    }

    fn keyed(&mut self, keys: &[&str]) -> Result<Vec<usize>, MeshError> {
        let fields = self.next_fields()?;
        if fields.len() != 2 * keys.len() {
            return Err(MeshError::Parse(format!(
                "line {}: malformed header",
                self.line_no
            )));
        }
        keys.iter()
            .enumerate()
            .map(|(i, k)| {
                if fields[2 * i] != *k {
                    return Err(MeshError::Parse(format!(
                        "line {}: expected '{k}', found '{}'",
                        self.line_no,
                        fields[2 * i]
                    )));
                }
                fields[2 * i + 1]
                    .parse()
                    .map_err(|_| MeshError::Parse(format!("line {}: bad count", self.line_no)))
            })
            .collect()
    }
}

pub fn read_mesh<R: BufRead>(r: R) -> Result<Mesh, MeshError> {
    let mut lines = Lines {
        inner: r.lines(),
        line_no: 0,
    };
    let counts = lines.keyed(&["vertices", "triangles", "bedges"])?;
    let (nv, nt, nb) = (counts[0], counts[1], counts[2]);
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let v: Vec<f64> = lines.numbers(2)?;
        vertices.push([v[0], v[1]]);
    }
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let t: Vec<usize> = lines.numbers(3)?;
        if t.iter().any(|&i| i >= nv) {
            return Err(MeshError::Parse(format!(
                "line {}: vertex index out of range",
                lines.line_no
            )));
        }
        triangles.push([t[0], t[1], t[2]]);
    }
    let mut boundary_edges = Vec::with_capacity(nb);
    for _ in 0..nb {
        let e: Vec<usize> = lines.numbers(4)?;
        boundary_edges.push(BoundaryEdge {
            vertices: [e[0], e[1]],
            triangle: e[2],
            segment: e[3],
        });
    }
    let level = lines.keyed(&["level"])?[0];
    let head = lines.keyed(&["corners", "primary"])?;
    let (nc, primary_corner) = (head[0], head[1]);
    let mut corners = Vec::with_capacity(nc);
    let mut angles = Vec::with_capacity(nc);
    let mut corner_vertices = Vec::with_capacity(nc);
    for _ in 0..nc {
        let f = lines.next_fields()?;
        if f.len() != 4 {
            return Err(MeshError::Parse(format!(
                "line {}: malformed corner",
                lines.line_no
            )));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| MeshError::Parse(format!("bad number '{s}'")))
        };
        corners.push([num(&f[0])?, num(&f[1])?]);
        angles.push(num(&f[2])?);
        corner_vertices.push(
            f[3].parse::<usize>()
                .map_err(|_| MeshError::Parse(format!("bad vertex '{}'", f[3])))?,
        );
    }
    let domain = PolygonSpec {
        corners,
        angles,
        primary_corner,
    };
    let h = triangles
        .iter()
        .map(|t| {
            let [a, b, c] = t.map(|v: usize| vertices[v]);
            crate::geometry::dist(a, b)
                .max(crate::geometry::dist(b, c))
                .max(crate::geometry::dist(c, a))
        })
        .fold(0.0, f64::max);
    Ok(Mesh {
        vertices,
        triangles,
        boundary_edges,
        corner_vertices,
        level,
        h,
        domain,
    })
}

pub fn mesh_from_str(s: &str) -> Result<Mesh, MeshError> {
    read_mesh(s.as_bytes())
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::mesh::{build_family, build_sector_domain, MeshFamilyKind, PerturbationOptions};

    #[test]
    fn perturbed_mesh_round_trips_exactly() {
        let spec = build_sector_domain(1.5 * PI).unwrap();
        let fam = build_family(
            &spec,
            MeshFamilyKind::Generic,
            2,
            &PerturbationOptions::default(),
        )
        .unwrap();
        for m in &fam.meshes {
            let text = mesh_to_string(m);
            assert!(text.starts_with(&format!(
                "vertices {} triangles {} bedges {}\n",
                m.num_vertices(),
                m.num_triangles(),
                m.boundary_edges.len()
            )));
            let back = mesh_from_str(&text).unwrap();
            assert_eq!(&back, m);
        }
    }

    #[test]
    fn truncated_input_is_an_error() {
        assert!(matches!(
            mesh_from_str("vertices 3 triangles 1 bedges 3\n0 0\n"),
            Err(MeshError::Parse(_))
        ));
        assert!(mesh_from_str("nodes 3").is_err());
    }
}
