use super::{ExactFields, ManufacturedError};
use crate::fem::{BoundaryEvaluator, Discretization, LineRule, TraceFunction};
use crate::geometry::{dist, lerp, Point};

/// Sample points per boundary edge used to detect an active bound.
pub const EDGE_SAMPLES: usize = 33;

const FALLBACK_THRESHOLD: f64 = 1e-14;

/// Nodal interpolant of the exact control.
///
/// Where the exact control is unbounded (at a singular corner that the bounds
/// do not cut off), the node takes the value at distance `epsilon_corner`
/// along the outgoing boundary edge.
pub fn interpolate_control(fields: &ExactFields, disc: &Discretization) -> TraceFunction {
    let eps = fields.problem.epsilon_corner;
    let values = (0..disc.num_boundary())
        .map(|k| {
            let (_, [p, q], side) = disc.boundary_edge(k);
            let v = fields.control(p, side);
            if v.is_finite() {
                v
            } else {
                let l = dist(p, q);
                fields.control(lerp(p, q, eps / l), side)
            }
        })
        .collect();
    TraceFunction::new(values)
}

fn previous_edge(disc: &Discretization, k: usize) -> usize {
    (k + disc.num_boundary() - 1) % disc.num_boundary()
}

/// Lagrange interpolant that snaps a node to a bound whenever the exact
/// control touches that bound on one of the two adjacent edges.
pub fn modified_lagrange_interpolant(
    u: &BoundaryEvaluator,
    disc: &Discretization,
    a: f64,
    b: f64,
) -> Result<TraceFunction, ManufacturedError> {
    let nb = disc.num_boundary();
    let mut values = Vec::with_capacity(nb);
    for k in 0..nb {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for e in [previous_edge(disc, k), k] {
            let (_, [p, q], side) = disc.boundary_edge(e);
            for i in 0..EDGE_SAMPLES {
                let v = u(lerp(p, q, i as f64 / (EDGE_SAMPLES - 1) as f64), side);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        let at_a = lo == a;
        let at_b = hi == b;
        let v = match (at_a, at_b) {
            (true, true) => return Err(ManufacturedError::AmbiguousBounds { node: k }),
            (true, false) => a,
            (false, true) => b,
            (false, false) => {
                let (_, [p, _], side) = disc.boundary_edge(k);
                u(p, side)
            }
        };
        if !v.is_finite() {
            return Err(ManufacturedError::InvalidProblem(format!(
                "exact control is not finite at boundary node {k}"
            )));
        }
        values.push(v);
    }
    Ok(TraceFunction::new(values))
}

/// Weighted quasi-interpolant: node `j` gets the `d e_j`-weighted mean of the
/// exact control over its patch, or the plain patch mean where that weight
/// integrates to zero. Integrals use 5-point Gauss on every edge.
pub fn casas_raymond_interpolant(
    u: &BoundaryEvaluator,
    d: &BoundaryEvaluator,
    disc: &Discretization,
    a: f64,
    b: f64,
) -> Result<TraceFunction, ManufacturedError> {
    let rule = LineRule::gauss5();
    let nb = disc.num_boundary();
    let mut values = Vec::with_capacity(nb);
    for k in 0..nb {
        let (mut weight, mut moment, mut scale, mut mean, mut length) = (0.0, 0.0, 0.0, 0.0, 0.0);
        // on the previous edge node k is the end point, on edge k the start point
        for (e, at_end) in [(previous_edge(disc, k), true), (k, false)] {
            let (_, [p, q], side) = disc.boundary_edge(e);
            let l = dist(p, q);
            length += l;
            for (&s, &w) in rule.points.iter().zip(&rule.weights) {
                let x: Point = lerp(p, q, s);
                let hat = if at_end { s } else { 1.0 - s };
                let uv = u(x, side);
                let dv = d(x, side);
                if !uv.is_finite() || !dv.is_finite() {
                    return Err(ManufacturedError::InvalidProblem(format!(
                        "non-finite exact data at ({}, {})",
                        x[0], x[1]
                    )));
                }
                weight += w * l * dv * hat;
                moment += w * l * dv * uv * hat;
                scale += w * l * dv.abs() * hat;
                mean += w * l * uv;
            }
        }
        let v = if weight.abs() > FALLBACK_THRESHOLD * scale {
            moment / weight
        } else {
            mean / length
        };
        values.push(v.clamp(a, b));
    }
    Ok(TraceFunction::new(values))
}
