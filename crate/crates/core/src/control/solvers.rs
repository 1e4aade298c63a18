use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{ControlError, ControlProblem, ReducedResidual};
use crate::fem::{cg_solve, CgOptions, FnOperator, TraceFunction, VolumeFunction};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Relative tolerance of the reduced CG iterations.
    pub tol: f64,
    /// Iteration cap for the reduced CG iterations.
    pub max_cg: usize,
    /// Iteration cap for the active set loop.
    pub max_pdas: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            max_cg: 1000,
            max_pdas: 50,
        }
    }
}

/// One row of the active set iteration log.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PdasTraceRow {
    pub iteration: usize,
    pub active_lower: usize,
    pub active_upper: usize,
    pub residual: f64,
    pub objective: f64,
}

#[derive(Clone, Debug)]
pub struct ControlSolution {
    pub u: TraceFunction,
    pub y: VolumeFunction,
    pub phi: VolumeFunction,
    /// Weak gradient at `u`.
    pub gradient: Vec<f64>,
    pub active_lower: Vec<usize>,
    pub active_upper: Vec<usize>,
    pub pdas_iterations: usize,
    /// Reduced CG iterations summed over all solves.
    pub cg_iterations: usize,
    /// Natural residual in the lumped dual norm.
    pub residual_norm: f64,
    /// `residual_norm` divided by the dual norm of the gradient at zero.
    pub relative_residual: f64,
    pub objective_value: f64,
    pub trace: Vec<PdasTraceRow>,
}

pub fn trace_csv(rows: &[PdasTraceRow]) -> String {
    let mut s = String::from("iteration,active_lower,active_upper,residual,objective\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{:e},{}",
            r.iteration, r.active_lower, r.active_upper, r.residual, r.objective
        );
    }
    s
}

/// Reduced Hessian restricted to the coordinates in `free`, the other
/// coordinates held at zero.
fn restricted_cg(
    p: &ControlProblem,
    free: &[usize],
    rhs: &[f64],
    opts: &SolverOptions,
) -> Result<(Vec<f64>, usize), ControlError> {
    let n = p.num_controls();
    let op = FnOperator {
        dim: free.len(),
        f: |x: &[f64], y: &mut [f64]| {
            let mut v = vec![0.0; n];
            for (k, &i) in free.iter().enumerate() {
                v[i] = x[k];
            }
            let hv = p
                .apply_reduced_hessian(&TraceFunction::new(v))
                .map_err(ControlError::into_fem)?;
            for (k, &i) in free.iter().enumerate() {
                y[k] = hv.values[i];
            }
            Ok(())
        },
    };
    let diag = p.disc.boundary_mass.diagonal();
    let inv: Vec<f64> = free.iter().map(|&i| 1.0 / (p.nu * diag[i])).collect();
    let out = cg_solve(
        &op,
        rhs,
        Some(&inv),
        None,
        &CgOptions {
            tol: opts.tol,
            max_iter: opts.max_cg,
        },
    )?;
    Ok((out.x, out.iterations))
}

fn finish(
    p: &ControlProblem,
    u: TraceFunction,
    res: ReducedResidual,
    g0_norm: f64,
    active: (Vec<usize>, Vec<usize>),
    counts: (usize, usize),
    trace: Vec<PdasTraceRow>,
) -> ControlSolution {
    let residual_norm = p.stationarity(&u, &res.g);
    let objective_value = p.objective_with_state(&u, &res.state);
    ControlSolution {
        residual_norm,
        relative_residual: if g0_norm > 0.0 {
            residual_norm / g0_norm
        } else {
            0.0
        },
        objective_value,
        u,
        y: res.state,
        phi: res.adjoint,
        gradient: res.g,
        active_lower: active.0,
        active_upper: active.1,
        pdas_iterations: counts.0,
        cg_iterations: counts.1,
        trace,
    }
}

/// Minimises `J_h` over the whole trace space by CG on the reduced Hessian.
pub fn solve_unconstrained(
    p: &ControlProblem,
    opts: &SolverOptions,
) -> Result<ControlSolution, ControlError> {
    if !p.is_unconstrained() {
        return Err(ControlError::InvalidProblem(
            "solve_unconstrained requires infinite bounds".into(),
        ));
    }
    let n = p.num_controls();
    let zero = TraceFunction::zeros(n);
    let res0 = p.reduced_residual(&zero)?;
    let g0_norm = p.dual_norm(&res0.g);
    let rhs: Vec<f64> = res0.g.iter().map(|g| -g).collect();
    let all: Vec<usize> = (0..n).collect();
    let (x, iters) = restricted_cg(p, &all, &rhs, opts)?;
    let u = TraceFunction::new(x);
    let res = p.reduced_residual(&u)?;
    Ok(finish(
        p,
        u,
        res,
        g0_norm,
        (Vec::new(), Vec::new()),
        (0, iters),
        Vec::new(),
    ))
}

fn active_sets(p: &ControlProblem, u: &TraceFunction, lumped: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for (i, (&ui, &d)) in u.values.iter().zip(lumped).enumerate() {
        let mu = -d;
        if p.nu * (ui - p.a) + mu < 0.0 {
            lower.push(i);
        } else if p.nu * (ui - p.b) + mu > 0.0 {
            upper.push(i);
        }
    }
    (lower, upper)
}

/// Primal-dual active set method for the box-constrained problem.
///
/// Each step fixes the control on the predicted active sets and solves the
/// remaining stationarity equations exactly; the loop ends when the active
/// sets repeat. If the predicted sets revisit an earlier iterate, only the
/// single most violated index is moved, which breaks two-cycles.
pub fn solve_constrained_pdas(
    p: &ControlProblem,
    opts: &SolverOptions,
) -> Result<ControlSolution, ControlError> {
    if !p.has_finite_bounds() {
        return Err(ControlError::InvalidProblem(
            "the active set solver requires finite bounds".into(),
        ));
    }
    let n = p.num_controls();
    let mut u = TraceFunction::new(vec![0.0f64.clamp(p.a, p.b); n]);
    let mut res = p.reduced_residual(&u)?;
    let g0_norm = p.dual_norm(&p.reduced_residual(&TraceFunction::zeros(n))?.g);
    let mut previous: Option<(Vec<usize>, Vec<usize>)> = None;
    let mut trace = Vec::new();
    let mut cg_total = 0;
    let mut history: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    for iteration in 0..=opts.max_pdas {
        let mut sets = active_sets(p, &u, &res.lumped);
        if let Some(prev) = previous.as_ref().filter(|prev| **prev != sets) {
            if history.contains(&sets) {
                sets = single_change(p, &u, &res.lumped, prev, &sets);
            }
        }
        if previous.as_ref() == Some(&sets) {
            u.values.iter_mut().for_each(|v| *v = v.clamp(p.a, p.b));
            let res = p.reduced_residual(&u)?;
            return Ok(finish(
                p,
                u,
                res,
                g0_norm,
                sets,
                (iteration, cg_total),
                trace,
            ));
        }
        if iteration == opts.max_pdas {
            break;
        }
        for &i in &sets.0 {
            u.values[i] = p.a;
        }
        for &i in &sets.1 {
            u.values[i] = p.b;
        }
        let mut fixed = vec![false; n];
        sets.0.iter().chain(&sets.1).for_each(|&i| fixed[i] = true);
        let free: Vec<usize> = (0..n).filter(|&i| !fixed[i]).collect();
        let fixed_res = p.reduced_residual(&u)?;
        let rhs: Vec<f64> = free.iter().map(|&i| -fixed_res.g[i]).collect();
        if !free.is_empty() {
            let (delta, iters) = restricted_cg(p, &free, &rhs, opts)?;
            cg_total += iters;
            for (k, &i) in free.iter().enumerate() {
                u.values[i] += delta[k];
            }
        }
        res = p.reduced_residual(&u)?;
        trace.push(PdasTraceRow {
            iteration: iteration + 1,
            active_lower: sets.0.len(),
            active_upper: sets.1.len(),
            residual: p.stationarity(&u, &res.g),
            objective: p.objective_with_state(&u, &res.state),
        });
        history.push(sets.clone());
        previous = Some(sets);
    }
    Err(ControlError::MaxIterationsExceeded {
        iterations: opts.max_pdas,
    })
}

fn membership(sets: &(Vec<usize>, Vec<usize>), n: usize) -> Vec<i8> {
    let mut m = vec![0i8; n];
    sets.0.iter().for_each(|&i| m[i] = -1);
    sets.1.iter().for_each(|&i| m[i] = 1);
    m
}

/// Cycle breaker: of the indices whose predicted membership differs from
/// `prev`, moves only the one with the largest pointwise natural residual.
/// An index jumping between opposite bounds is released to the inactive set.
fn single_change(
    p: &ControlProblem,
    u: &TraceFunction,
    lumped: &[f64],
    prev: &(Vec<usize>, Vec<usize>),
    predicted: &(Vec<usize>, Vec<usize>),
) -> (Vec<usize>, Vec<usize>) {
    let n = u.len();
    let old = membership(prev, n);
    let new = membership(predicted, n);
    let violation = |i: usize| {
        let step = u.values[i] - lumped[i] / p.nu;
        (u.values[i] - step.clamp(p.a, p.b)).abs()
    };
    let pick = (0..n)
        .filter(|&i| old[i] != new[i])
        .max_by(|&i, &j| violation(i).total_cmp(&violation(j)));
    let mut m = old;
    if let Some(i) = pick {
        m[i] = if m[i] == -new[i] { 0 } else { new[i] };
    }
    let lower = (0..n).filter(|&i| m[i] == -1).collect();
    let upper = (0..n).filter(|&i| m[i] == 1).collect();
    (lower, upper)
}

fn vi_min(p: &ControlProblem, g: &[f64], u: &TraceFunction) -> f64 {
    g.iter()
        .zip(&u.values)
        .map(|(&g, &u)| {
            let lower = if p.a.is_finite() { g * (p.a - u) } else { -g };
            let upper = if p.b.is_finite() { g * (p.b - u) } else { g };
            lower.min(upper)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Most negative value of the box-edge tests `g_i (a - u_i) >= 0` and
/// `g_i (b - u_i) >= 0`; an infinite bound is tested along its unit direction.
pub fn verify_discrete_vi(p: &ControlProblem, s: &ControlSolution) -> f64 {
    vi_min(p, &s.gradient, &s.u)
}

/// Recomputes the gradient at `u` and runs the same test as [`verify_discrete_vi`].
pub fn vi_violation_at(p: &ControlProblem, u: &TraceFunction) -> Result<f64, ControlError> {
    let res = p.reduced_residual(u)?;
    Ok(vi_min(p, &res.g, u))
}
