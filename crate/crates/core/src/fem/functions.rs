use serde::{Deserialize, Serialize};

use super::TriangleRule;
use crate::geometry::Point;
use crate::mesh::Mesh;

/// P1 function given by one coefficient per mesh vertex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeFunction {
    pub values: Vec<f64>,
}

/// Trace space function given by one coefficient per boundary dof, in cycle order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceFunction {
    pub values: Vec<f64>,
}

impl VolumeFunction {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value of the P1 function on triangle `t` at barycentric coordinates `bary`.
    pub fn eval_in(&self, mesh: &Mesh, t: usize, bary: [f64; 3]) -> f64 {
        let tri = mesh.triangles[t];
        bary[0] * self.values[tri[0]]
            + bary[1] * self.values[tri[1]]
            + bary[2] * self.values[tri[2]]
    }

    /// Value at an arbitrary point of the domain, or `None` outside the mesh.
    pub fn eval_at(&self, mesh: &Mesh, x: Point) -> Option<f64> {
        mesh.locate(x).map(|(t, bary)| self.eval_in(mesh, t, bary))
    }
}

impl TraceFunction {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Data that can be evaluated at any point of a triangle. The triangle index and
/// barycentric coordinates let discrete fields be evaluated without a point search.
pub trait VolumeData: Sync {
    fn value(&self, triangle: usize, bary: [f64; 3], x: Point) -> f64;
}

/// Adapter for a closed-form function of position.
pub struct Analytic<F>(pub F);

impl<F: Fn(Point) -> f64 + Sync> VolumeData for Analytic<F> {
    fn value(&self, _triangle: usize, _bary: [f64; 3], x: Point) -> f64 {
        (self.0)(x)
    }
}

/// A [`VolumeFunction`] paired with its mesh.
pub struct P1Field<'a> {
    pub mesh: &'a Mesh,
    pub function: &'a VolumeFunction,
}

impl VolumeData for P1Field<'_> {
    fn value(&self, triangle: usize, bary: [f64; 3], _x: Point) -> f64 {
        self.function.eval_in(self.mesh, triangle, bary)
    }
}

/// Values of some data sampled at every quadrature point of every triangle.
///
/// All integrals against the data (load vectors, the tracking term of the
/// objective) go through the same samples, so they are mutually consistent.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureField {
    pub rule: TriangleRule,
    /// `values[t * rule.len() + q]`
    pub values: Vec<f64>,
}

impl QuadratureField {
    pub fn zeros(mesh: &Mesh, rule: TriangleRule) -> Self {
        let n = mesh.num_triangles() * rule.len();
        Self {
            rule,
            values: vec![0.0; n],
        }
    }

    pub fn at(&self, t: usize, q: usize) -> f64 {
        self.values[t * self.rule.len() + q]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Physical coordinates of a barycentric point.
pub fn map_point(p: [Point; 3], bary: [f64; 3]) -> Point {
    [
        bary[0] * p[0][0] + bary[1] * p[1][0] + bary[2] * p[2][0],
        bary[0] * p[0][1] + bary[1] * p[1][1] + bary[2] * p[2][1],
    ]
}
