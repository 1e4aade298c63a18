//! Small 2D vector helpers.

pub type Point = [f64; 2];

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[inline]
pub fn midpoint(a: Point, b: Point) -> Point {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

#[inline]
pub fn lerp(a: Point, b: Point, t: f64) -> Point {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

/// Signed area of the triangle `(a, b, c)`; positive when counterclockwise.
#[inline]
pub fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * cross(sub(b, a), sub(c, a))
}

/// Circumradius over inradius, 2 for an equilateral triangle.
pub fn shape_ratio(a: Point, b: Point, c: Point) -> f64 {
    let la = dist(b, c);
    let lb = dist(c, a);
    let lc = dist(a, b);
    let area = signed_area(a, b, c).abs();
    if area == 0.0 {
        return f64::INFINITY;
    }
    let s = 0.5 * (la + lb + lc);
    let inradius = area / s;
    let circumradius = la * lb * lc / (4.0 * area);
    circumradius / inradius
}

/// Barycentric coordinates of `x` in the triangle `(a, b, c)`.
pub fn barycentric(a: Point, b: Point, c: Point, x: Point) -> [f64; 3] {
    let det = cross(sub(b, a), sub(c, a));
    let l1 = cross(sub(x, a), sub(c, a)) / det;
    let l2 = cross(sub(b, a), sub(x, a)) / det;
    [1.0 - l1 - l2, l1, l2]
}
