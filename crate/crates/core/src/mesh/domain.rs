//! Polygonal sector domains and corner-local polar coordinates.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI, TAU};

use serde::{Deserialize, Serialize};

use super::MeshError;
use crate::geometry::{cross, dist, dot, sub, Point};

const ANGLE_TOL: f64 = 1e-12;

/// A simple counterclockwise polygon with its interior angles.
///
/// Side `j` runs from `corners[j]` to `corners[j + 1]` (cyclically), so the
/// corner `j` is the start of side `j` and the end of side `j - 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolygonSpec {
    pub corners: Vec<Point>,
    pub angles: Vec<f64>,
    pub primary_corner: usize,
}

impl PolygonSpec {
    /// Builds a polygon from counterclockwise corners, computing the interior angles.
    pub fn from_corners(corners: Vec<Point>, primary_corner: usize) -> Result<Self, MeshError> {
        let n = corners.len();
        if n < 3 {
            return Err(MeshError::TriangulationFailure(format!(
                "polygon needs at least 3 corners, got {n}"
            )));
        }
        if primary_corner >= n {
            return Err(MeshError::TriangulationFailure(format!(
                "primary corner {primary_corner} out of range"
            )));
        }
        let mut angles = Vec::with_capacity(n);
        for j in 0..n {
            let here = corners[j];
            let next = corners[(j + 1) % n];
            let prev = corners[(j + n - 1) % n];
            if dist(here, next) < 1e-14 || dist(here, prev) < 1e-14 {
                return Err(MeshError::TriangulationFailure(format!(
                    "corner {j} coincides with a neighbouring corner"
                )));
            }
            let a = sub(next, here);
            let b = sub(prev, here);
            let mut ang = cross(a, b).atan2(dot(a, b));
            if ang <= 0.0 {
                ang += TAU;
            }
            angles.push(ang);
        }
        let spec = Self {
            corners,
            angles,
            primary_corner,
        };
        if spec.signed_area() <= 0.0 {
            return Err(MeshError::TriangulationFailure(
                "polygon is not counterclockwise or has zero area".into(),
            ));
        }
        Ok(spec)
    }

    pub fn len(&self) -> usize {
        self.corners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corners.is_empty()
    }

    pub fn side(&self, j: usize) -> (Point, Point) {
        let n = self.corners.len();
        (self.corners[j % n], self.corners[(j + 1) % n])
    }

    pub fn side_length(&self, j: usize) -> f64 {
        let (a, b) = self.side(j);
        dist(a, b)
    }

    /// Unit outward normal of side `j`.
    pub fn outward_normal(&self, j: usize) -> Point {
        let (a, b) = self.side(j);
        let t = sub(b, a);
        let len = t[0].hypot(t[1]);
        [t[1] / len, -t[0] / len]
    }

    pub fn signed_area(&self) -> f64 {
        let n = self.corners.len();
        (0..n)
            .map(|j| cross(self.corners[j], self.corners[(j + 1) % n]))
            .sum::<f64>()
            * 0.5
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn perimeter(&self) -> f64 {
        (0..self.corners.len()).map(|j| self.side_length(j)).sum()
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, &a) in self.corners.iter().enumerate() {
            for &b in &self.corners[i + 1..] {
                d = d.max(dist(a, b));
            }
        }
        d
    }

    /// Distance from `x` to side `j`.
    pub fn distance_to_side(&self, j: usize, x: Point) -> f64 {
        let (a, b) = self.side(j);
        let t = sub(b, a);
        let len2 = dot(t, t);
        let s = (dot(sub(x, a), t) / len2).clamp(0.0, 1.0);
        dist(x, [a[0] + s * t[0], a[1] + s * t[1]])
    }

    /// The side closest to `x`.
    pub fn nearest_side(&self, x: Point) -> usize {
        (0..self.corners.len())
            .map(|j| (j, self.distance_to_side(j, x)))
            .fold(
                (0, f64::INFINITY),
                |best, cur| if cur.1 < best.1 { cur } else { best },
            )
            .0
    }

    /// Local polar coordinates `(r_j, theta_j)` at corner `j`, with `theta_j`
    /// measured counterclockwise from side `j` and clamped into `[0, omega_j]`.
    pub fn local_polar(&self, j: usize, x: Point) -> (f64, f64) {
        let (origin, next) = self.side(j);
        let d = sub(x, origin);
        let r = d[0].hypot(d[1]);
        if r == 0.0 {
            return (0.0, 0.0);
        }
        let t = sub(next, origin);
        let mut theta = cross(t, d).atan2(dot(t, d));
        if theta < 0.0 {
            theta += TAU;
        }
        let omega = self.angles[j];
        if theta > omega {
            // points just outside the sector due to rounding snap to the nearer ray
            theta = if theta > omega + 0.5 * (TAU - omega) {
                0.0
            } else {
                omega
            };
        }
        (r, theta)
    }

    /// Direction angle (counterclockwise from the x axis) of side `j`.
    pub fn side_direction(&self, j: usize) -> f64 {
        let (a, b) = self.side(j);
        (b[1] - a[1]).atan2(b[0] - a[0])
    }

    /// Whether `x` lies inside (or on the boundary of) the polygon.
    pub fn contains(&self, x: Point, tol: f64) -> bool {
        let n = self.corners.len();
        if (0..n).any(|j| self.distance_to_side(j, x) <= tol) {
            return true;
        }
        let mut inside = false;
        for j in 0..n {
            let (a, b) = self.side(j);
            if (a[1] > x[1]) != (b[1] > x[1]) {
                let xc = a[0] + (x[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                if x[0] < xc {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

fn snap(v: f64) -> f64 {
    for target in [-1.0, 0.0, 1.0] {
        if (v - target).abs() < 1e-14 {
            return target;
        }
    }
    v
}

/// The sector domain with opening angle `omega1` at the origin.
///
/// For `omega1 <= pi/2` this is the triangle `(0,0), (1,0), (cos w, sin w)`;
/// otherwise it is the part of the square `(-1,1)^2` with polar angle in
/// `(0, omega1)`.
pub fn build_sector_domain(omega1: f64) -> Result<PolygonSpec, MeshError> {
    if !omega1.is_finite() || !(FRAC_PI_3 - ANGLE_TOL..TAU - ANGLE_TOL).contains(&omega1) {
        return Err(MeshError::OutOfRange { omega: omega1 });
    }
    let corners = if omega1 <= FRAC_PI_2 + ANGLE_TOL {
        let w = omega1.min(FRAC_PI_2);
        vec![[0.0, 0.0], [1.0, 0.0], [snap(w.cos()), snap(w.sin())]]
    } else {
        let mut c = vec![[0.0, 0.0], [1.0, 0.0]];
        let square = [
            (0.25 * PI, [1.0, 1.0]),
            (0.75 * PI, [-1.0, 1.0]),
            (1.25 * PI, [-1.0, -1.0]),
            (1.75 * PI, [1.0, -1.0]),
        ];
        let mut end_on_square_corner = None;
        for (ang, p) in square {
            if (ang - omega1).abs() <= ANGLE_TOL {
                end_on_square_corner = Some(p);
                break;
            }
            if ang < omega1 {
                c.push(p);
            }
        }
        let end = match end_on_square_corner {
            Some(p) => p,
            None => {
                let (s, co) = omega1.sin_cos();
                let m = s.abs().max(co.abs());
                [snap(co / m), snap(s / m)]
            }
        };
        c.push(end);
        c
    };
    let mut spec = PolygonSpec::from_corners(corners, 0)?;
    // the opening angle at the origin is exact by construction
    spec.angles[0] = omega1;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn right_angle_sector_is_triangle() {
        let s = build_sector_domain(FRAC_PI_2).unwrap();
        assert_eq!(s.corners, vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let expect = [FRAC_PI_2, 0.25 * PI, 0.25 * PI];
        for (a, e) in s.angles.iter().zip(expect) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn l_shape_hexagon() {
        let s = build_sector_domain(1.5 * PI).unwrap();
        assert_eq!(
            s.corners,
            vec![
                [0.0, 0.0],
                [1.0, 0.0],
                [1.0, 1.0],
                [-1.0, 1.0],
                [-1.0, -1.0],
                [0.0, -1.0]
            ]
        );
        assert!((s.angles[0] - 1.5 * PI).abs() < 1e-12);
        for a in &s.angles[1..] {
            assert!((a - FRAC_PI_2).abs() < 1e-12);
        }
        assert!((s.area() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn full_circle_rejected() {
        assert!(matches!(
            build_sector_domain(TAU),
            Err(MeshError::OutOfRange { .. })
        ));
        assert!(build_sector_domain(0.5).is_err());
    }

    #[test]
    fn flat_origin_for_half_square() {
        let s = build_sector_domain(PI).unwrap();
        assert_eq!(s.corners.len(), 5);
        assert!((s.angles[0] - PI).abs() < 1e-12);
        assert!((s.area() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn angle_sum_matches_polygon() {
        for k in 0..40 {
            let w = FRAC_PI_3 + k as f64 * (TAU - FRAC_PI_3 - 0.01) / 40.0;
            let s = build_sector_domain(w).unwrap();
            let n = s.len() as f64;
            let sum: f64 = s.angles.iter().sum();
            assert!((sum - (n - 2.0) * PI).abs() < 1e-12, "w = {w}");
        }
    }

    #[test]
    fn local_polar_examples() {
        let s = build_sector_domain(FRAC_PI_2).unwrap();
        let (r, t) = s.local_polar(0, [0.0, 1.0]);
        assert!((r - 1.0).abs() < 1e-15 && (t - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(s.local_polar(0, [0.0, 0.0]), (0.0, 0.0));
        let l = build_sector_domain(1.5 * PI).unwrap();
        let (r, t) = l.local_polar(0, [0.0, -1.0]);
        assert!((r - 1.0).abs() < 1e-15 && (t - 1.5 * PI).abs() < 1e-15);
        // a point on the first ray never wraps to 2*pi
        let (_, t) = l.local_polar(0, [0.5, -1e-18]);
        assert_eq!(t, 0.0);
    }

    #[test]
    fn degenerate_polygon_fails() {
        let r = PolygonSpec::from_corners(vec![[0.0, 0.0], [0.0, 0.0], [1.0, 1.0]], 0);
        assert!(matches!(r, Err(MeshError::TriangulationFailure(_))));
    }
}
