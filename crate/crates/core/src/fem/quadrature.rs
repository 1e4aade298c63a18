//! Symmetric quadrature rules on the reference triangle and on [0, 1].

use serde::{Deserialize, Serialize};

use super::FemError;

/// A rule on the reference triangle, points in barycentric coordinates and
/// weights normalised to sum to one (multiply by the element area).
#[derive(Clone, Debug, PartialEq)]
pub struct TriangleRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub order: usize,
}

/// A rule on [0, 1] with weights summing to one (multiply by the edge length).
#[derive(Clone, Debug, PartialEq)]
pub struct LineRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub order: usize,
}

/// Quadrature orders used by default and by the oracle comparisons.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureOrders {
    pub triangle: usize,
    pub edge: usize,
}

impl Default for QuadratureOrders {
    fn default() -> Self {
        Self {
            triangle: 5,
            edge: 5,
        }
    }
}

impl QuadratureOrders {
    pub const ORACLE: Self = Self {
        triangle: 9,
        edge: 9,
    };
}

impl TriangleRule {
    fn push_centroid(&mut self, w: f64) {
        self.points.push([1.0 / 3.0; 3]);
        self.weights.push(w);
    }

    fn push_orbit3(&mut self, a: f64, w: f64) {
        let c = 1.0 - 2.0 * a;
        for p in [[a, a, c], [a, c, a], [c, a, a]] {
            self.points.push(p);
            self.weights.push(w);
        }
    }

    fn push_orbit6(&mut self, a: f64, b: f64, w: f64) {
        let c = 1.0 - a - b;
        for p in [
            [a, b, c],
            [a, c, b],
            [b, a, c],
            [b, c, a],
            [c, a, b],
            [c, b, a],
        ] {
            self.points.push(p);
            self.weights.push(w);
        }
    }

    fn empty(order: usize) -> Self {
        Self {
            points: Vec::new(),
            weights: Vec::new(),
            order,
        }
    }

    /// Barycentric midpoint rule, exact for affine integrands.
    pub fn centroid() -> Self {
        let mut r = Self::empty(1);
        r.push_centroid(1.0);
        r
    }

    /// Radon's 7-point rule, exact up to degree 5.
    pub fn order5() -> Self {
        let s = 15f64.sqrt();
        let mut r = Self::empty(5);
        r.push_centroid(9.0 / 40.0);
        r.push_orbit3((6.0 - s) / 21.0, (155.0 - s) / 1200.0);
        r.push_orbit3((6.0 + s) / 21.0, (155.0 + s) / 1200.0);
        r
    }

    /// Dunavant's 19-point rule, exact up to degree 9.
    pub fn order9() -> Self {
        let mut r = Self::empty(9);
        r.push_centroid(0.097_135_796_282_798_84);
        r.push_orbit3(0.489_682_519_198_737_6, 0.031_334_700_227_139_07);
        r.push_orbit3(0.437_089_591_492_936_64, 0.077_827_541_004_774_28);
        r.push_orbit3(0.188_203_535_619_032_72, 0.079_647_738_927_210_25);
        r.push_orbit3(0.044_729_513_394_452_71, 0.025_577_675_658_698_03);
        r.push_orbit6(
            0.036_838_412_054_736_286,
            0.221_962_989_160_765_7,
            0.043_283_539_377_289_376,
        );
        r
    }

    /// The cheapest available rule exact to at least `order`.
    pub fn with_order(order: usize) -> Result<Self, FemError> {
        match order {
            0 | 1 => Ok(Self::centroid()),
            2..=5 => Ok(Self::order5()),
            6..=9 => Ok(Self::order9()),
            _ => Err(FemError::QuadratureFailure(format!(
                "no triangle rule of order {order}"
            ))),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl LineRule {
    fn gauss(nodes: &[(f64, f64)], order: usize) -> Self {
        // nodes on [-1, 1] with weights summing to 2
        let (points, weights) = nodes
            .iter()
            .map(|&(x, w)| (0.5 * (1.0 + x), 0.5 * w))
            .unzip();
        Self {
            points,
            weights,
            order,
        }
    }

    pub fn gauss3() -> Self {
        let x = (0.6f64).sqrt();
        Self::gauss(&[(-x, 5.0 / 9.0), (0.0, 8.0 / 9.0), (x, 5.0 / 9.0)], 5)
    }

    pub fn gauss5() -> Self {
        let r = 2.0 * (10.0f64 / 7.0).sqrt();
        let x1 = (5.0 - r).sqrt() / 3.0;
        let x2 = (5.0 + r).sqrt() / 3.0;
        let s70 = 70f64.sqrt();
        let w1 = (322.0 + 13.0 * s70) / 900.0;
        let w2 = (322.0 - 13.0 * s70) / 900.0;
        Self::gauss(
            &[
                (-x2, w2),
                (-x1, w1),
                (0.0, 128.0 / 225.0),
                (x1, w1),
                (x2, w2),
            ],
            9,
        )
    }

    pub fn with_order(order: usize) -> Result<Self, FemError> {
        match order {
            0..=5 => Ok(Self::gauss3()),
            6..=9 => Ok(Self::gauss5()),
            _ => Err(FemError::QuadratureFailure(format!(
                "no edge rule of order {order}"
            ))),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
