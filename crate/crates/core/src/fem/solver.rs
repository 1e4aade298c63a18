//! Jacobi-preconditioned conjugate gradients.

use serde::{Deserialize, Serialize};

use super::{CsrMatrix, FemError};

/// A symmetric operator that can be applied without being stored.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<(), FemError>;
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.nrows
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<(), FemError> {
        self.matvec_into(x, y);
        Ok(())
    }
}

/// Wraps a closure as a [`LinearOperator`].
pub struct FnOperator<F> {
    pub dim: usize,
    pub f: F,
}

impl<F> LinearOperator for FnOperator<F>
where
    F: Fn(&[f64], &mut [f64]) -> Result<(), FemError>,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<(), FemError> {
        (self.f)(x, y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CgOptions {
    /// Relative tolerance on the preconditioned residual norm.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            max_iter: 20_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final preconditioned residual norm relative to that of the right-hand side.
    pub relative_residual: f64,
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` for symmetric positive definite `A`.
///
/// `inv_diag` holds the Jacobi preconditioner (reciprocal diagonal); `None`
/// means no preconditioning. The iteration stops once
/// `sqrt(r' P r) <= tol * sqrt(b' P b)`. A zero right-hand side returns zero
/// after 0 iterations; `x0` seeds the iteration when given.
pub fn cg_solve<A: LinearOperator + ?Sized>(
    a: &A,
    b: &[f64],
    inv_diag: Option<&[f64]>,
    x0: Option<&[f64]>,
    options: &CgOptions,
) -> Result<CgOutcome, FemError> {
    let n = a.dim();
    if b.len() != n || inv_diag.is_some_and(|d| d.len() != n) || x0.is_some_and(|x| x.len() != n) {
        return Err(FemError::DimensionMismatch(format!(
            "cg: operator dimension {n}, rhs {}",
            b.len()
        )));
    }
    let precondition = |r: &[f64], z: &mut [f64]| match inv_diag {
        Some(d) => z
            .iter_mut()
            .zip(r)
            .zip(d)
            .for_each(|((z, r), d)| *z = r * d),
        None => z.copy_from_slice(r),
    };
    let mut z = vec![0.0; n];
    precondition(b, &mut z);
    let b_norm = dot(b, &z).max(0.0).sqrt();
    if b_norm == 0.0 {
        return Ok(CgOutcome {
            x: vec![0.0; n],
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let mut r = b.to_vec();
    let mut ap = vec![0.0; n];
    if x0.is_some() {
        a.apply(&x, &mut ap)?;
        r.iter_mut().zip(&ap).for_each(|(r, q)| *r -= q);
    }
    precondition(&r, &mut z);
    let mut rz = dot(&r, &z);
    let mut p = z.clone();
    let target = options.tol * b_norm;
    let mut iterations = 0;
    loop {
        let res = rz.max(0.0).sqrt();
        if res <= target {
            return Ok(CgOutcome {
                x,
                iterations,
                relative_residual: res / b_norm,
            });
        }
        if iterations >= options.max_iter {
            return Err(FemError::SolverDivergence {
                iterations,
                relative_residual: res / b_norm,
            });
        }
        a.apply(&p, &mut ap)?;
        let pap = dot(&p, &ap);
        if !(pap > 0.0) || !pap.is_finite() {
            return Err(FemError::SolverDivergence {
                iterations,
                relative_residual: res / b_norm,
            });
        }
        let alpha = rz / pap;
        x.iter_mut().zip(&p).for_each(|(x, p)| *x += alpha * p);
        r.iter_mut().zip(&ap).for_each(|(r, q)| *r -= alpha * q);
        precondition(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.iter_mut().zip(&z).for_each(|(p, z)| *p = z + beta * *p);
        iterations += 1;
    }
}
