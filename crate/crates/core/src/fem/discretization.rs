use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use super::assembly::{assemble_boundary_mass, assemble_mass, assemble_stiffness};
use super::functions::map_point;
use super::solver::dot;
use super::{
    cg_solve, CgOptions, CsrMatrix, DofMap, FemError, LineRule, QuadratureField, QuadratureOrders,
    TraceFunction, TriangleRule, VolumeData, VolumeFunction,
};
use crate::geometry::{dist, lerp, Point};
use crate::mesh::Mesh;

/// Boundary data evaluated at a point of the given polygon side.
pub type BoundaryEvaluator<'a> = dyn Fn(Point, usize) -> f64 + Sync + 'a;

/// Largest boundary coefficient accepted as a zero trace.
pub const ZERO_TRACE_TOL: f64 = 1e-12;

/// The assembled P1 operators of one mesh together with the solves built on them.
#[derive(Debug)]
pub struct Discretization {
    pub mesh: Arc<Mesh>,
    pub dofs: DofMap,
    pub stiffness: CsrMatrix,
    pub mass: CsrMatrix,
    pub boundary_mass: CsrMatrix,
    /// Stiffness restricted to interior rows and interior columns.
    pub a_ii: CsrMatrix,
    /// Stiffness restricted to interior rows and boundary columns.
    pub a_ib: CsrMatrix,
    /// `int_Gamma e_i` for every boundary dof.
    pub boundary_weights: Vec<f64>,
    pub cg: CgOptions,
    pub quadrature: QuadratureOrders,
    a_ii_inv_diag: Vec<f64>,
    inner_iterations: AtomicUsize,
    inner_solves: AtomicUsize,
}

impl Discretization {
    pub fn new(mesh: Arc<Mesh>) -> Result<Self, FemError> {
        Self::with_options(mesh, CgOptions::default(), QuadratureOrders::default())
    }

    pub fn with_options(
        mesh: Arc<Mesh>,
        cg: CgOptions,
        quadrature: QuadratureOrders,
    ) -> Result<Self, FemError> {
        let dofs = DofMap::new(&mesh);
        if dofs.num_boundary() < 3 {
            return Err(FemError::DimensionMismatch(
                "mesh boundary has fewer than 3 vertices".into(),
            ));
        }
        let stiffness = assemble_stiffness(&mesh)?;
        let mass = assemble_mass(&mesh)?;
        let boundary_mass = assemble_boundary_mass(&mesh, &dofs);
        let icol = dofs.interior_column_map();
        let bcol = dofs.boundary_column_map();
        let mut a_ii = stiffness.submatrix(&dofs.interior, &icol, dofs.num_interior());
        a_ii.symmetric = true;
        let a_ib = stiffness.submatrix(&dofs.interior, &bcol, dofs.num_boundary());
        let a_ii_inv_diag = a_ii.diagonal().iter().map(|d| 1.0 / d).collect();
        let boundary_weights = boundary_mass.matvec(&vec![1.0; dofs.num_boundary()]);
        TriangleRule::with_order(quadrature.triangle)?;
        LineRule::with_order(quadrature.edge)?;
        Ok(Self {
            mesh,
            dofs,
            stiffness,
            mass,
            boundary_mass,
            a_ii,
            a_ib,
            boundary_weights,
            cg,
            quadrature,
            a_ii_inv_diag,
            inner_iterations: AtomicUsize::new(0),
            inner_solves: AtomicUsize::new(0),
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.dofs.num_vertices()
    }

    pub fn num_boundary(&self) -> usize {
        self.dofs.num_boundary()
    }

    pub fn triangle_rule(&self) -> TriangleRule {
        TriangleRule::with_order(self.quadrature.triangle).expect("validated in constructor")
    }

    pub fn edge_rule(&self) -> LineRule {
        LineRule::with_order(self.quadrature.edge).expect("validated in constructor")
    }

    /// Total CG iterations and solve count spent on interior Poisson problems.
    pub fn inner_cg_stats(&self) -> (usize, usize) {
        (
            self.inner_iterations.load(Ordering::Relaxed),
            self.inner_solves.load(Ordering::Relaxed),
        )
    }

    pub fn boundary_points(&self) -> Vec<Point> {
        self.dofs
            .boundary
            .iter()
            .map(|&v| self.mesh.vertices[v])
            .collect()
    }

    /// Boundary dofs `(k, k+1)` of boundary edge `k`, its end points and side.
    pub fn boundary_edge(&self, k: usize) -> ([usize; 2], [Point; 2], usize) {
        let e = self.mesh.boundary_edges[k];
        let nb = self.num_boundary();
        (
            [k, (k + 1) % nb],
            [
                self.mesh.vertices[e.vertices[0]],
                self.mesh.vertices[e.vertices[1]],
            ],
            e.segment,
        )
    }

    /// Samples volume data at the quadrature points of every triangle.
    pub fn sample(
        &self,
        data: &dyn VolumeData,
        rule: &TriangleRule,
    ) -> Result<QuadratureField, FemError> {
        let nq = rule.len();
        let mut values = Vec::with_capacity(self.mesh.num_triangles() * nq);
        for t in 0..self.mesh.num_triangles() {
            let p = self.mesh.triangle_points(t);
            for bary in &rule.points {
                let x = map_point(p, *bary);
                let v = data.value(t, *bary, x);
                if !v.is_finite() {
                    return Err(FemError::QuadratureFailure(format!(
                        "non-finite volume data at ({}, {}) in triangle {t}",
                        x[0], x[1]
                    )));
                }
                values.push(v);
            }
        }
        Ok(QuadratureField {
            rule: rule.clone(),
            values,
        })
    }

    /// `b_i = int f e_i` by quadrature over the sampled field.
    pub fn load_vector(&self, f: &QuadratureField) -> Vec<f64> {
        let mut b = vec![0.0; self.num_vertices()];
        for (t, tri) in self.mesh.triangles.iter().enumerate() {
            let area = self.mesh.triangle_area(t);
            for (q, (bary, w)) in f.rule.points.iter().zip(&f.rule.weights).enumerate() {
                let fw = w * area * f.at(t, q);
                for i in 0..3 {
                    b[tri[i]] += fw * bary[i];
                }
            }
        }
        b
    }

    /// `int (y_h - f)^2` by quadrature over the sampled field.
    pub fn squared_l2_distance(&self, y: &VolumeFunction, f: &QuadratureField) -> f64 {
        let mut s = 0.0;
        for t in 0..self.mesh.num_triangles() {
            let area = self.mesh.triangle_area(t);
            for (q, (bary, w)) in f.rule.points.iter().zip(&f.rule.weights).enumerate() {
                let d = y.eval_in(&self.mesh, t, *bary) - f.at(t, q);
                s += w * area * d * d;
            }
        }
        s
    }

    /// Solves `M_Gamma q = r` directly (cyclic tridiagonal system).
    pub fn solve_boundary_mass(&self, r: &[f64]) -> Vec<f64> {
        let n = self.num_boundary();
        assert_eq!(r.len(), n);
        // coupling of dof i with i - 1 and i + 1
        let lower: Vec<f64> = (0..n)
            .map(|i| self.boundary_mass.get(i, (i + n - 1) % n))
            .collect();
        let upper: Vec<f64> = (0..n)
            .map(|i| self.boundary_mass.get(i, (i + 1) % n))
            .collect();
        let diag: Vec<f64> = self.boundary_mass.diagonal();
        cyclic_tridiagonal(&lower, &diag, &upper, r)
    }

    /// L2(boundary) projection onto the trace space.
    pub fn l2_project_boundary(&self, g: &BoundaryEvaluator) -> Result<TraceFunction, FemError> {
        let rule = self.edge_rule();
        let rhs = self.boundary_moments(g, &rule)?;
        Ok(TraceFunction::new(self.solve_boundary_mass(&rhs)))
    }

    /// `int_Gamma g e_i` for every boundary dof.
    pub fn boundary_moments(
        &self,
        g: &BoundaryEvaluator,
        rule: &LineRule,
    ) -> Result<Vec<f64>, FemError> {
        let mut b = vec![0.0; self.num_boundary()];
        for k in 0..self.num_boundary() {
            let ([i, j], [p, q], seg) = self.boundary_edge(k);
            let l = dist(p, q);
            for (&s, &w) in rule.points.iter().zip(&rule.weights) {
                let x = lerp(p, q, s);
                let v = g(x, seg);
                if !v.is_finite() {
                    return Err(FemError::QuadratureFailure(format!(
                        "non-finite boundary data at ({}, {}) on side {seg}",
                        x[0], x[1]
                    )));
                }
                b[i] += w * l * v * (1.0 - s);
                b[j] += w * l * v * s;
            }
        }
        Ok(b)
    }

    fn interior_solve(&self, rhs: &[f64]) -> Result<Vec<f64>, FemError> {
        if rhs.is_empty() {
            return Ok(Vec::new());
        }
        let out = cg_solve(&self.a_ii, rhs, Some(&self.a_ii_inv_diag), None, &self.cg)?;
        self.inner_iterations
            .fetch_add(out.iterations, Ordering::Relaxed);
        self.inner_solves.fetch_add(1, Ordering::Relaxed);
        Ok(out.x)
    }

    /// Returns `y_h` with `y_h = g_h` on the boundary and
    /// `(grad y_h, grad z_h) = <load, z_h>` for all `z_h` vanishing on the boundary.
    pub fn solve_dirichlet(
        &self,
        load: &[f64],
        g: &TraceFunction,
    ) -> Result<VolumeFunction, FemError> {
        if load.len() != self.num_vertices() || g.len() != self.num_boundary() {
            return Err(FemError::DimensionMismatch(format!(
                "solve_dirichlet: load {} / trace {} for {} vertices, {} boundary dofs",
                load.len(),
                g.len(),
                self.num_vertices(),
                self.num_boundary()
            )));
        }
        let mut rhs = self.dofs.restrict_interior(load);
        let coupling = self.a_ib.matvec(&g.values);
        rhs.iter_mut().zip(&coupling).for_each(|(r, c)| *r -= c);
        let yi = self.interior_solve(&rhs)?;
        Ok(VolumeFunction::new(self.dofs.combine(&yi, &g.values)))
    }

    /// Discrete harmonic extension of a trace space function.
    pub fn harmonic_extension(&self, u: &TraceFunction) -> Result<VolumeFunction, FemError> {
        self.solve_dirichlet(&vec![0.0; self.num_vertices()], u)
    }

    /// Discrete harmonic extension of boundary data, via the L2 projection.
    pub fn harmonic_extension_of(
        &self,
        g: &BoundaryEvaluator,
    ) -> Result<(TraceFunction, VolumeFunction), FemError> {
        let trace = self.l2_project_boundary(g)?;
        let y = self.harmonic_extension(&trace)?;
        Ok((trace, y))
    }

    /// Solves for `phi_h` vanishing on the boundary with `(grad phi_h, grad z_h) = <w, z_h>`.
    pub fn solve_homogeneous(&self, w: &[f64]) -> Result<VolumeFunction, FemError> {
        self.solve_dirichlet(w, &TraceFunction::zeros(self.num_boundary()))
    }

    /// Boundary rows of `A phi - w`, the weak normal derivative `M_Gamma d`.
    pub fn normal_derivative_moments(
        &self,
        phi: &VolumeFunction,
        w: &[f64],
    ) -> Result<Vec<f64>, FemError> {
        if let Some(k) = self
            .dofs
            .boundary
            .iter()
            .position(|&v| phi.values[v].abs() > ZERO_TRACE_TOL)
        {
            return Err(FemError::NonzeroTrace {
                vertex: self.dofs.boundary[k],
                value: phi.values[self.dofs.boundary[k]],
            });
        }
        let mut r = vec![0.0; self.num_boundary()];
        for (k, &v) in self.dofs.boundary.iter().enumerate() {
            let aphi: f64 = self.stiffness.row(v).map(|(j, a)| a * phi.values[j]).sum();
            r[k] = aphi - w[v];
        }
        Ok(r)
    }

    /// The discrete normal derivative `d` with
    /// `(d, z_h)_Gamma = (grad phi_h, grad z_h) - (rhs, z_h)` for all `z_h`.
    pub fn discrete_normal_derivative(
        &self,
        phi: &VolumeFunction,
        rhs: &VolumeFunction,
    ) -> Result<TraceFunction, FemError> {
        let w = self.mass.matvec(&rhs.values);
        let r = self.normal_derivative_moments(phi, &w)?;
        Ok(TraceFunction::new(self.solve_boundary_mass(&r)))
    }

    pub fn boundary_inner(&self, u: &TraceFunction, v: &TraceFunction) -> f64 {
        dot(&self.boundary_mass.matvec(&u.values), &v.values)
    }

    pub fn l2_norm_boundary(&self, u: &TraceFunction) -> f64 {
        self.boundary_inner(u, u).max(0.0).sqrt()
    }

    pub fn l2_norm_volume(&self, y: &VolumeFunction) -> f64 {
        dot(&self.mass.matvec(&y.values), &y.values).max(0.0).sqrt()
    }
}

/// Solves a cyclic tridiagonal system; `lower[0]` couples row 0 with the last
/// unknown and `upper[n-1]` couples the last row with unknown 0.
pub fn cyclic_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], r: &[f64]) -> Vec<f64> {
    let n = diag.len();
    assert!(n >= 3);
    let gamma = -diag[0];
    let alpha = upper[n - 1];
    let beta = lower[0];
    let mut d = diag.to_vec();
    d[0] -= gamma;
    d[n - 1] -= alpha * beta / gamma;
    let y = thomas(lower, &d, upper, r);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let z = thomas(lower, &d, upper, &u);
    let fact = (y[0] + beta * y[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
    y.iter().zip(&z).map(|(y, z)| y - fact * z).collect()
}

fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], r: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut bet = diag[0];
    x[0] = r[0] / bet;
    for i in 1..n {
        c[i] = upper[i - 1] / bet;
        bet = diag[i] - lower[i] * c[i];
        x[i] = (r[i] - lower[i] * x[i - 1]) / bet;
    }
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] -= c[i + 1] * next;
    }
    x
}
