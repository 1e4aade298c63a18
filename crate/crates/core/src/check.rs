//! Fast property suites on a coarse manufactured case.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::control::{
    solve_constrained_pdas, solve_unconstrained, verify_discrete_vi, ControlProblem, SolverOptions,
};
use crate::fem::{
    dot, CgOptions, Discretization, LineRule, QuadratureOrders, TraceFunction, VolumeFunction,
};
use crate::geometry::{dist, lerp, Point};
use crate::manufactured::{
    build_y_omega, casas_raymond_interpolant, modified_lagrange_interpolant, ExactFields,
    LambdaChoice, ManufacturedProblem, TargetMode,
};
use crate::mesh::{
    build_family, build_sector_domain, check_h2_irregular, Mesh, MeshFamilyKind,
    PerturbationOptions,
};
use crate::study::{corner_flattening_report, StudyError};

/// Settings of the property suites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOptions {
    pub omega1: f64,
    /// Mesh level (zero based) of the coarse case.
    pub level: usize,
    pub seed: u64,
    /// Mesh level at which the corner flattening is measured.
    pub flattening_level: usize,
    /// Reverse the sign of the discrete normal derivative (mutation sanity check).
    #[serde(default)]
    pub flip_normal_sign: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            omega1: 1.5 * PI,
            level: 2,
            seed: 0,
            flattening_level: 4,
            flip_normal_sign: false,
        }
    }
}

/// Outcome of one property.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyResult {
    pub name: String,
    pub passed: bool,
    /// Measured quantity (worst case over the samples).
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl PropertyResult {
    fn new(name: &str, passed: bool, value: f64, tolerance: f64, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            value,
            tolerance,
            detail,
        }
    }

    fn at_most(name: &str, value: f64, tolerance: f64, detail: String) -> Self {
        Self::new(name, value <= tolerance, value, tolerance, detail)
    }
}

fn tight_cg() -> CgOptions {
    CgOptions {
        tol: 1e-13,
        ..CgOptions::default()
    }
}

fn family_mesh(
    omega1: f64,
    kind: MeshFamilyKind,
    level: usize,
    seed: u64,
) -> Result<Mesh, StudyError> {
    let spec = build_sector_domain(omega1)?;
    let fam = build_family(
        &spec,
        kind,
        level.max(1) + 1,
        &PerturbationOptions { kappa: 0.2, seed },
    )?;
    Ok(fam.meshes.into_iter().nth(level).expect("level exists"))
}

fn coarse_disc(
    opts: &CheckOptions,
    quadrature: QuadratureOrders,
) -> Result<Arc<Discretization>, StudyError> {
    let mesh = family_mesh(opts.omega1, MeshFamilyKind::Generic, opts.level, opts.seed)?;
    Ok(Arc::new(Discretization::with_options(
        Arc::new(mesh),
        tight_cg(),
        quadrature,
    )?))
}

fn manufactured_problem(
    disc: &Arc<Discretization>,
    fields: &ExactFields,
    a: f64,
    b: f64,
) -> Result<ControlProblem, StudyError> {
    let y = build_y_omega(fields, disc, TargetMode::Quadrature)?;
    let target = disc.sample(&y, &disc.triangle_rule())?;
    Ok(ControlProblem::new(
        disc.clone(),
        fields.problem.nu,
        a,
        b,
        target,
    )?)
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn axpy(u: &[f64], t: f64, v: &[f64]) -> TraceFunction {
    TraceFunction::new(u.iter().zip(v).map(|(a, b)| a + t * b).collect())
}

fn hessian_properties(
    p: &ControlProblem,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<PropertyResult>, StudyError> {
    let n = p.num_controls();
    let mut worst_sym = 0.0f64;
    let mut worst_margin = f64::INFINITY;
    for _ in 0..10 {
        let v = TraceFunction::new(random_vec(rng, n));
        let w = TraceFunction::new(random_vec(rng, n));
        let hv = p.apply_reduced_hessian(&v)?;
        let hw = p.apply_reduced_hessian(&w)?;
        let (a, b) = (dot(&hv.values, &w.values), dot(&v.values, &hw.values));
        worst_sym = worst_sym.max((a - b).abs() / a.abs().max(b.abs()));
        let vmv = p.disc.boundary_inner(&v, &v);
        let margin = (dot(&hv.values, &v.values) - p.nu * vmv) / (p.nu * vmv);
        worst_margin = worst_margin.min(margin);
    }
    Ok(vec![
        PropertyResult::at_most(
            "hessian_symmetry",
            worst_sym,
            1e-10,
            "10 random pairs".into(),
        ),
        PropertyResult::new(
            "hessian_definiteness",
            worst_margin >= -1e-12,
            worst_margin,
            0.0,
            "(<Hv,v> - nu v'Mv) / (nu v'Mv), minimum over 10 vectors".into(),
        ),
    ])
}

/// Largest relative deviation between the gradient and central differences of the objective.
pub fn gradient_fd_error(p: &ControlProblem, rng: &mut ChaCha8Rng) -> Result<f64, StudyError> {
    let n = p.num_controls();
    let u = random_vec(rng, n);
    let g = p.reduced_residual(&TraceFunction::new(u.clone()))?.g;
    let h = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let v = random_vec(rng, n);
        let fd = (p.objective(&axpy(&u, h, &v))? - p.objective(&axpy(&u, -h, &v))?) / (2.0 * h);
        let exact = dot(&g, &v);
        worst = worst.max((fd - exact).abs() / exact.abs());
    }
    Ok(worst)
}

fn extension_properties(
    d: &Discretization,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<PropertyResult>, StudyError> {
    let nb = d.num_boundary();
    let u = TraceFunction::new(random_vec(rng, nb));
    let y = d.harmonic_extension(&u)?;
    let trace_defect = d
        .dofs
        .boundary
        .iter()
        .zip(&u.values)
        .map(|(&v, &c)| (y.values[v] - c).abs())
        .fold(0.0, f64::max);
    let mut affine_defect = 0.0f64;
    let cases: [(f64, f64, f64); 3] = [(0.7, 0.0, 0.0), (0.1, 1.0, -2.0), (-0.3, 0.5, 0.25)];
    for (c, ax, ay) in cases {
        let f = |x: Point| c + ax * x[0] + ay * x[1];
        let trace = TraceFunction::new(d.boundary_points().into_iter().map(f).collect());
        let y = d.harmonic_extension(&trace)?;
        for (v, x) in d.mesh.vertices.iter().enumerate() {
            affine_defect = affine_defect.max((y.values[v] - f(*x)).abs());
        }
    }
    Ok(vec![
        PropertyResult::new(
            "extension_trace_exact",
            trace_defect == 0.0,
            trace_defect,
            0.0,
            "S_h u restricted to the boundary equals u".into(),
        ),
        PropertyResult::at_most(
            "extension_affine",
            affine_defect,
            1e-12,
            "constant and affine traces extend exactly".into(),
        ),
    ])
}

fn normal_derivative_property(
    d: &Discretization,
    rng: &mut ChaCha8Rng,
) -> Result<PropertyResult, StudyError> {
    let rhs = VolumeFunction::new(random_vec(rng, d.num_vertices()));
    let mrhs = d.mass.matvec(&rhs.values);
    let phi = d.solve_homogeneous(&mrhs)?;
    let dn = d.discrete_normal_derivative(&phi, &rhs)?;
    let aphi = d.stiffness.matvec(&phi.values);
    let mdn = d.boundary_mass.matvec(&dn.values);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let z = random_vec(rng, d.num_vertices());
        let zb = d.dofs.restrict_boundary(&z);
        let lhs = dot(&mdn, &zb);
        let rhs_val = dot(&aphi, &z) - dot(&mrhs, &z);
        let scale = dot(&aphi, &z).abs() + dot(&mrhs, &z).abs();
        worst = worst.max((lhs - rhs_val).abs() / scale);
    }
    Ok(PropertyResult::at_most(
        "normal_derivative_identity",
        worst,
        1e-10,
        "20 random test functions".into(),
    ))
}

fn boundary_integral(d: &Discretization, f: impl Fn(Point, usize, f64, usize) -> f64) -> f64 {
    let rule = LineRule::gauss5();
    let mut s = 0.0;
    for k in 0..d.num_boundary() {
        let (_, [p, q], side) = d.boundary_edge(k);
        let l = dist(p, q);
        for (&t, &w) in rule.points.iter().zip(&rule.weights) {
            s += w * l * f(lerp(p, q, t), side, t, k);
        }
    }
    s
}

fn interpolant_properties(
    d: &Discretization,
    fields: &ExactFields,
) -> Result<Vec<PropertyResult>, StudyError> {
    let (a, b) = (fields.problem.a, fields.problem.b);
    let u = |x: Point, s: usize| fields.control(x, s);
    let r = |x: Point, s: usize| fields.residual(x, s);
    let dn = boundary_integral(d, |x, s, _, _| r(x, s).powi(2)).sqrt();
    let un = boundary_integral(d, |x, s, _, _| u(x, s).powi(2)).sqrt();
    let tol = 1e-8 * dn * un;
    let nb = d.num_boundary();
    let mut out = Vec::new();
    for (name, star) in [
        (
            "interpolant_orthogonality_quasi",
            casas_raymond_interpolant(&u, &r, d, a, b)?,
        ),
        (
            "interpolant_orthogonality_lagrange",
            modified_lagrange_interpolant(&u, d, a, b)?,
        ),
    ] {
        let defect = boundary_integral(d, |x, s, t, k| {
            let uh = star.values[k] * (1.0 - t) + star.values[(k + 1) % nb] * t;
            r(x, s) * (uh - u(x, s))
        })
        .abs();
        let admissible = star.values.iter().all(|v| *v >= a && *v <= b);
        out.push(PropertyResult::new(
            name,
            defect <= tol && admissible,
            defect,
            tol,
            format!("admissible: {admissible}"),
        ));
    }
    Ok(out)
}

fn pdas_properties(
    constrained: &ControlProblem,
    wide: &ControlProblem,
    unconstrained: &ControlProblem,
) -> Result<Vec<PropertyResult>, StudyError> {
    let opts = SolverOptions::default();
    let s = solve_constrained_pdas(constrained, &opts)?;
    let vi = verify_discrete_vi(constrained, &s);
    let sw = solve_constrained_pdas(wide, &opts)?;
    let su = solve_unconstrained(unconstrained, &opts)?;
    let diff =
        sw.u.values
            .iter()
            .zip(&su.u.values)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
    Ok(vec![
        PropertyResult::at_most(
            "pdas_iterations",
            s.pdas_iterations as f64,
            30.0,
            format!("{} active set steps", s.pdas_iterations),
        ),
        PropertyResult::new(
            "pdas_vi",
            vi >= -1e-8,
            vi,
            -1e-8,
            "min of g_i (c - u_i) over bounds".into(),
        ),
        PropertyResult::at_most(
            "pdas_matches_unconstrained",
            diff,
            1e-9,
            "bounds [-1e6, 1e6] against the unconstrained solver".into(),
        ),
    ])
}

/// Mesh diagnostics: the structured family is exactly O(h^2)-irregular and
/// the perturbed family fails from level 2 on with a growing ratio.
pub fn mesh_properties(
    omega1: f64,
    levels: usize,
    seed: u64,
) -> Result<Vec<PropertyResult>, StudyError> {
    let spec = build_sector_domain(omega1)?;
    let sup = build_family(
        &spec,
        MeshFamilyKind::Superconvergent,
        levels,
        &PerturbationOptions::default(),
    )?;
    let mut worst = 0.0f64;
    let mut all_pass = true;
    for m in &sup.meshes {
        let r = check_h2_irregular(m);
        worst = worst.max(r.max_interior_discrepancy);
        all_pass &= r.verdict;
    }
    let gen = build_family(
        &spec,
        MeshFamilyKind::Generic,
        levels,
        &PerturbationOptions { kappa: 0.2, seed },
    )?;
    let reports: Vec<_> = gen.meshes.iter().map(check_h2_irregular).collect();
    let fails = reports.iter().skip(2).all(|r| !r.verdict);
    let ratios: Vec<f64> = reports.iter().map(|r| r.discrepancy_ratio).collect();
    let growing = ratios.windows(2).skip(2).all(|w| w[1] > w[0]);
    Ok(vec![
        PropertyResult::new(
            "mesh_superconvergent_exact",
            all_pass && worst <= 1e-12,
            worst,
            1e-12,
            format!("verdicts all true: {all_pass}"),
        ),
        PropertyResult::new(
            "mesh_generic_fails",
            fails && growing,
            *ratios.last().unwrap_or(&0.0),
            0.0,
            format!("discrepancy ratios {ratios:.3?}"),
        ),
    ])
}

/// Fraction of boundary nodes within `rho` of the reentrant corner at a bound,
/// for the constrained leading case at the given mesh level.
pub fn flattening_fraction(
    omega1: f64,
    level: usize,
    seed: u64,
    rho: f64,
) -> Result<f64, StudyError> {
    let p = ManufacturedProblem::new(omega1, LambdaChoice::Leading, true)?;
    let fields = p.exact_fields()?;
    let mesh = family_mesh(omega1, MeshFamilyKind::Generic, level, seed)?;
    let disc = Arc::new(Discretization::new(Arc::new(mesh))?);
    let cp = manufactured_problem(&disc, &fields, p.a, p.b)?;
    let s = solve_constrained_pdas(&cp, &SolverOptions::default())?;
    Ok(corner_flattening_report(&s, &cp, disc.mesh.domain.primary_corner, rho)?.fraction)
}

/// Runs all property suites.
pub fn run_checks(opts: &CheckOptions) -> Result<Vec<PropertyResult>, StudyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let disc = coarse_disc(opts, QuadratureOrders::default())?;
    let unc = ManufacturedProblem::new(opts.omega1, LambdaChoice::Leading, false)?;
    let unc_fields = unc.exact_fields()?;
    let mut unconstrained = manufactured_problem(&disc, &unc_fields, unc.a, unc.b)?;
    if opts.flip_normal_sign {
        unconstrained = unconstrained.with_flipped_normal_sign();
    }
    let mut results = hessian_properties(&unconstrained, &mut rng)?;
    let fd = gradient_fd_error(&unconstrained, &mut rng)?;
    results.push(PropertyResult::at_most(
        "gradient_fd",
        fd,
        1e-6,
        "10 random directions, step 1e-5".into(),
    ));
    results.extend(extension_properties(&disc, &mut rng)?);
    results.push(normal_derivative_property(&disc, &mut rng)?);

    let con = ManufacturedProblem::new(opts.omega1, LambdaChoice::Leading, true)?;
    let con_fields = con.exact_fields()?;
    results.extend(interpolant_properties(&disc, &con_fields)?);
    let constrained = manufactured_problem(&disc, &con_fields, con.a, con.b)?;
    let wide = manufactured_problem(&disc, &unc_fields, -1e6, 1e6)?;
    let plain = manufactured_problem(&disc, &unc_fields, unc.a, unc.b)?;
    results.extend(pdas_properties(&constrained, &wide, &plain)?);
    results.extend(mesh_properties(opts.omega1, 5, opts.seed.max(1))?);
    let fraction = flattening_fraction(opts.omega1, opts.flattening_level, opts.seed, 0.1)?;
    results.push(PropertyResult::new(
        "corner_flattening",
        fraction >= 0.9,
        fraction,
        0.9,
        format!("mesh level {}, radius 0.1", opts.flattening_level),
    ));
    Ok(results)
}

/// Differences between the default and the order 9 quadrature on the coarse case.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureOracleReport {
    /// Relative difference of the target load vectors (Euclidean norm).
    pub load_difference: f64,
    /// Relative difference of the L2 projections of the exact control.
    pub projection_difference: f64,
    /// Relative difference of the optimal objective values.
    pub objective_difference: f64,
    /// Relative difference of the optimal controls in L2 of the boundary.
    pub control_difference: f64,
}

pub fn quadrature_oracle(opts: &CheckOptions) -> Result<QuadratureOracleReport, StudyError> {
    let low = coarse_disc(opts, QuadratureOrders::default())?;
    let high = coarse_disc(opts, QuadratureOrders::ORACLE)?;
    let p = ManufacturedProblem::new(opts.omega1, LambdaChoice::Leading, false)?;
    let fields = p.exact_fields()?;
    let pl = manufactured_problem(&low, &fields, p.a, p.b)?;
    let ph = manufactured_problem(&high, &fields, p.a, p.b)?;
    let rel = |a: &[f64], b: &[f64]| {
        let num: f64 = a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt();
        let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
        num / den
    };
    let ll = low.load_vector(&pl.target);
    let lh = high.load_vector(&ph.target);
    let g = |x: Point, s: usize| fields.control(x, s);
    let tl = low.l2_project_boundary(&g)?;
    let th = high.l2_project_boundary(&g)?;
    let opts_s = SolverOptions::default();
    let sl = solve_unconstrained(&pl, &opts_s)?;
    let sh = solve_unconstrained(&ph, &opts_s)?;
    let diff = TraceFunction::new(
        sl.u.values
            .iter()
            .zip(&sh.u.values)
            .map(|(a, b)| a - b)
            .collect(),
    );
    Ok(QuadratureOracleReport {
        load_difference: rel(&ll, &lh),
        projection_difference: rel(&tl.values, &th.values),
        objective_difference: (sl.objective_value - sh.objective_value).abs()
            / sh.objective_value.abs(),
        control_difference: high.l2_norm_boundary(&diff) / high.l2_norm_boundary(&sh.u),
    })
}
