use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use dirichlet_control::control::{solve_unconstrained, ControlProblem, SolverOptions};
use dirichlet_control::fem::{
    CgOptions, Discretization, LineRule, QuadratureOrders, TraceFunction,
};
use dirichlet_control::geometry::{dist, lerp, Point};
use dirichlet_control::manufactured::*;
use dirichlet_control::mesh::{build_family, MeshFamilyKind, PerturbationOptions, PolygonSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const L_SHAPE: f64 = 1.5 * PI;

fn disc_for(omega: f64, level: usize) -> Arc<Discretization> {
    let spec = dirichlet_control::mesh::build_sector_domain(omega).unwrap();
    let fam = build_family(
        &spec,
        MeshFamilyKind::Superconvergent,
        level.max(1) + 1,
        &PerturbationOptions::default(),
    )
    .unwrap();
    let mesh = fam.meshes.into_iter().nth(level).unwrap();
    let cg = CgOptions {
        tol: 1e-13,
        ..CgOptions::default()
    };
    Arc::new(Discretization::with_options(Arc::new(mesh), cg, QuadratureOrders::default()).unwrap())
}

fn random_interior(rng: &mut ChaCha8Rng, spec: &PolygonSpec, min_r: f64) -> Point {
    loop {
        let x = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let inside =
            spec.contains(x, 0.0) && (0..spec.len()).all(|j| spec.distance_to_side(j, x) > 0.02);
        if inside && x[0].hypot(x[1]) >= min_r {
            return x;
        }
    }
}

fn random_boundary(rng: &mut ChaCha8Rng, spec: &PolygonSpec) -> (Point, usize) {
    let j = rng.gen_range(0..spec.len());
    let (a, b) = spec.side(j);
    (lerp(a, b, rng.gen_range(0.0..1.0)), j)
}

/// `int_Gamma f` by 5-point Gauss on every boundary edge of the mesh.
fn boundary_integral(disc: &Discretization, f: impl Fn(Point, usize, f64, usize) -> f64) -> f64 {
    let rule = LineRule::gauss5();
    let mut s = 0.0;
    for k in 0..disc.num_boundary() {
        let (_, [p, q], side) = disc.boundary_edge(k);
        let l = dist(p, q);
        for (&t, &w) in rule.points.iter().zip(&rule.weights) {
            s += w * l * f(lerp(p, q, t), side, t, k);
        }
    }
    s
}

fn trace_at(u: &TraceFunction, k: usize, t: f64) -> f64 {
    let n = u.len();
    u.values[k] * (1.0 - t) + u.values[(k + 1) % n] * t
}

#[test]
fn singular_function_values() {
    let frame = CornerFrame::at_origin(L_SHAPE);
    let lambda = 2.0 / 3.0;
    let x = [(0.75 * PI).cos(), (0.75 * PI).sin()];
    let (v, _) = eval_singular(lambda, &frame, x).unwrap();
    assert!((v - 1.0).abs() < 1e-14);
    for r in [0.01, 0.3, 1.0] {
        for l in [lambda, 4.0 / 3.0, 2.0] {
            assert_eq!(eval_singular(l, &frame, [r, 0.0]).unwrap().0, 0.0);
        }
    }
    assert!(matches!(
        eval_singular(lambda, &frame, [0.0, 0.0]),
        Err(ManufacturedError::CornerSingularity { .. })
    ));
    assert!(eval_singular(1.5, &frame, [0.0, 0.0]).is_ok());
    assert!(eval_singular(-1.0, &frame, [0.5, 0.5]).is_err());
}

#[test]
fn singular_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let spec = dirichlet_control::mesh::build_sector_domain(L_SHAPE).unwrap();
    for (frame, lambda) in [
        (CornerFrame::at_origin(L_SHAPE), 2.0 / 3.0),
        (CornerFrame::at_origin(L_SHAPE), 4.0 / 3.0),
        (
            CornerFrame {
                origin: [0.1, -0.2],
                direction: 0.3,
                omega: L_SHAPE,
            },
            0.8,
        ),
    ] {
        for _ in 0..5 {
            let x = random_interior(&mut rng, &spec, 0.1);
            let r = dist(x, frame.origin);
            let h = 1e-6 * r;
            let (_, g) = eval_singular(lambda, &frame, x).unwrap();
            let f = |p: Point| eval_singular(lambda, &frame, p).unwrap().0;
            let fd = [
                (f([x[0] + h, x[1]]) - f([x[0] - h, x[1]])) / (2.0 * h),
                (f([x[0], x[1] + h]) - f([x[0], x[1] - h])) / (2.0 * h),
            ];
            let scale = g[0].hypot(g[1]);
            assert!(
                (fd[0] - g[0]).hypot(fd[1] - g[1]) <= 1e-7 * scale,
                "x = {x:?}: {g:?} vs {fd:?}"
            );
        }
    }
}

#[test]
fn singular_function_is_harmonic() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let spec = dirichlet_control::mesh::build_sector_domain(L_SHAPE).unwrap();
    let frame = CornerFrame::at_origin(L_SHAPE);
    for lambda in [2.0 / 3.0, 4.0 / 3.0] {
        let f = |p: Point| eval_singular(lambda, &frame, p).unwrap().0;
        for _ in 0..20 {
            let x = random_interior(&mut rng, &spec, 0.1);
            let h = 1e-4;
            let lap = (f([x[0] + h, x[1]])
                + f([x[0] - h, x[1]])
                + f([x[0], x[1] + h])
                + f([x[0], x[1] - h])
                - 4.0 * f(x))
                / (h * h);
            let scale = f(x).abs().max(1.0);
            assert!(lap.abs() <= 1e-5 * scale, "{lap}");
        }
    }
}

#[test]
fn bubble_cases() {
    let (v, _, _) = bubble(2, 0.6 * PI, [1.0, 0.3]).unwrap();
    assert_eq!(v, 0.0);
    let (_, _, lap) = bubble(4, L_SHAPE, [0.0, 0.0]).unwrap();
    assert_eq!(lap, -4.0);
    let (v, _, _) = bubble(1, 0.4 * PI, [1.0, 0.0]).unwrap();
    assert_eq!(v, 0.0);
    assert!(matches!(
        bubble(3, L_SHAPE, [0.0, 0.0]),
        Err(ManufacturedError::CaseMismatch { case: 3, .. })
    ));
    assert_eq!(bubble_case_for(FRAC_PI_2).unwrap(), 1);
    assert_eq!(bubble_case_for(0.75 * PI).unwrap(), 2);
    assert_eq!(bubble_case_for(PI).unwrap(), 3);
    assert_eq!(bubble_case_for(1.25 * PI).unwrap(), 3);
    assert_eq!(bubble_case_for(L_SHAPE).unwrap(), 4);
}

#[test]
fn bubble_derivatives_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for omega in [0.4 * PI, 0.7 * PI, PI, L_SHAPE] {
        let case = bubble_case_for(omega).unwrap();
        for _ in 0..5 {
            let x = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let (_, g, lap) = bubble(case, omega, x).unwrap();
            let f = |p: Point| bubble(case, omega, p).unwrap().0;
            let h = 1e-4;
            let gx = (f([x[0] + h, x[1]]) - f([x[0] - h, x[1]])) / (2.0 * h);
            let gy = (f([x[0], x[1] + h]) - f([x[0], x[1] - h])) / (2.0 * h);
            let l = (f([x[0] + h, x[1]])
                + f([x[0] - h, x[1]])
                + f([x[0], x[1] + h])
                + f([x[0], x[1] - h])
                - 4.0 * f(x))
                / (h * h);
            assert!((gx - g[0]).abs() < 1e-7 && (gy - g[1]).abs() < 1e-7);
            assert!((l - lap).abs() < 1e-5);
        }
    }
}

#[test]
fn problem_parameters() {
    let p = ManufacturedProblem::new(L_SHAPE, LambdaChoice::Leading, true).unwrap();
    assert!((p.lambda1 - 2.0 / 3.0).abs() < 1e-15);
    assert_eq!(p.lambda, p.lambda1);
    assert_eq!(p.nu, 1.0);
    assert!((p.a + 1.5).abs() < 1e-15);
    assert_eq!(p.b, 1.0);
    assert_eq!(p.bubble_case, 4);
    let s = ManufacturedProblem::new(L_SHAPE, LambdaChoice::Special, false).unwrap();
    assert!((s.lambda - 4.0 / 3.0).abs() < 1e-15);
    assert!(s.a == f64::NEG_INFINITY && s.b == f64::INFINITY);
    assert!(ManufacturedProblem::new(FRAC_PI_2, LambdaChoice::Special, false).is_err());
    assert!(ManufacturedProblem::new(PI, LambdaChoice::Special, false).is_err());
    assert!(p.clone().with_epsilon(0.0).is_err());
    assert!(p.clone().with_nu(-1.0).is_err());
    let wide = p.with_bounds(-1e6, 1e6).unwrap();
    assert!(wide.constrained);
}

#[test]
fn adjoint_vanishes_on_the_boundary() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let omegas = [
        PI / 3.0,
        0.45 * PI,
        FRAC_PI_2,
        0.6 * PI,
        0.75 * PI,
        0.9 * PI,
        PI,
        1.25 * PI,
        1.4 * PI,
        L_SHAPE,
        1.75 * PI,
        1.9 * PI,
    ];
    for omega in omegas {
        let choices: &[LambdaChoice] = if omega > PI {
            &[LambdaChoice::Leading, LambdaChoice::Special]
        } else {
            &[LambdaChoice::Leading]
        };
        for &choice in choices {
            let f = ManufacturedProblem::new(omega, choice, false)
                .unwrap()
                .exact_fields()
                .unwrap();
            for _ in 0..200 {
                let (x, _) = random_boundary(&mut rng, &f.domain);
                assert!(
                    f.phi(x).abs() <= 1e-12,
                    "omega {omega}: phi({x:?}) = {}",
                    f.phi(x)
                );
            }
        }
    }
}

#[test]
fn laplacian_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for (omega, choice) in [
        (L_SHAPE, LambdaChoice::Leading),
        (L_SHAPE, LambdaChoice::Special),
        (FRAC_PI_2, LambdaChoice::Leading),
        (PI, LambdaChoice::Leading),
        (0.7 * PI, LambdaChoice::Leading),
    ] {
        let f = ManufacturedProblem::new(omega, choice, false)
            .unwrap()
            .exact_fields()
            .unwrap();
        for _ in 0..10 {
            let x = random_interior(&mut rng, &f.domain, 0.1);
            let h = 1e-4;
            let p = |q: Point| f.phi(q);
            let fd = (p([x[0] + h, x[1]])
                + p([x[0] - h, x[1]])
                + p([x[0], x[1] + h])
                + p([x[0], x[1] - h])
                - 4.0 * p(x))
                / (h * h);
            let exact = f.laplacian(x);
            assert!(
                (fd - exact).abs() <= 1e-5 * exact.abs().max(1.0),
                "omega {omega}, x {x:?}: {fd} vs {exact}"
            );
        }
    }
}

#[test]
fn constrained_control_is_clamped_near_the_reentrant_corner() {
    let f = ManufacturedProblem::new(L_SHAPE, LambdaChoice::Leading, true)
        .unwrap()
        .exact_fields()
        .unwrap();
    let a = f.problem.a;
    for r in [1e-9, 1e-6, 1e-4, 9e-4] {
        assert_eq!(f.control([r, 0.0], 0), a);
        let last = f.domain.len() - 1;
        assert_eq!(f.control([0.0, -r], last), a);
    }
    assert_eq!(f.control([0.0, 0.0], 0), a);
    assert!(f.normal_derivative([0.0, 0.0], 0) == f64::NEG_INFINITY);
}

#[test]
fn projection_and_optimality_relations() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for choice in [LambdaChoice::Leading, LambdaChoice::Special] {
        let f = ManufacturedProblem::new(L_SHAPE, choice, true)
            .unwrap()
            .exact_fields()
            .unwrap();
        let p = &f.problem;
        for _ in 0..200 {
            let (x, side) = random_boundary(&mut rng, &f.domain);
            let u = f.control(x, side);
            assert!(u >= p.a && u <= p.b);
            assert_eq!(u.clamp(p.a, p.b), u);
            let d = p.nu * u - f.normal_derivative(x, side);
            if p.a < u && u < p.b {
                assert!(d.abs() <= 1e-12, "{d}");
                assert_eq!(f.residual(x, side), 0.0);
            } else if u == p.a {
                assert!(f.residual(x, side) >= 0.0);
            } else {
                assert!(f.residual(x, side) <= 0.0);
            }
        }
    }
}

#[test]
fn zero_amplitude_gives_a_zero_target() {
    let p = ManufacturedProblem::new(L_SHAPE, LambdaChoice::Leading, false)
        .unwrap()
        .with_amplitude(0.0);
    let f = p.exact_fields().unwrap();
    let disc = disc_for(L_SHAPE, 1);
    let t = build_y_omega(&f, &disc, TargetMode::Quadrature).unwrap();
    assert!(t.state.values.iter().all(|v| *v == 0.0));
    let cp = ControlProblem::from_data(disc.clone(), p.nu, p.a, p.b, &t).unwrap();
    assert_eq!(cp.target.max_abs(), 0.0);
    let s = solve_unconstrained(&cp, &SolverOptions::default()).unwrap();
    assert!(s.u.values.iter().all(|v| *v == 0.0));
}

#[test]
fn target_is_finite_and_reproducible() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let f = ManufacturedProblem::new(L_SHAPE, LambdaChoice::Leading, false)
        .unwrap()
        .exact_fields()
        .unwrap();
    let disc = disc_for(L_SHAPE, 2);
    let t = build_y_omega(&f, &disc, TargetMode::Quadrature).unwrap();
    let sampled = disc.sample(&t, &disc.triangle_rule()).unwrap();
    assert!(sampled.values.iter().all(|v| v.is_finite()));
    let nodal = build_y_omega(&f, &disc, TargetMode::Nodal).unwrap();
    assert!(disc.sample(&nodal, &disc.triangle_rule()).is_ok());

    let fresh = Arc::new(
        Discretization::with_options(disc.mesh.clone(), disc.cg, disc.quadrature).unwrap(),
    );
    let again = build_y_omega(&f, &fresh, TargetMode::Quadrature).unwrap();
    for _ in 0..100 {
        let x = random_interior(&mut rng, &f.domain, 1e-3);
        let (a, b) = (t.eval_at(x).unwrap(), again.eval_at(x).unwrap());
        assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
    }
}

#[test]
fn nodal_interpolant_of_the_control() {
    let con = ManufacturedProblem::new(L_SHAPE, LambdaChoice::Leading, true)
        .unwrap()
        .exact_fields()
        .unwrap();
    let disc = disc_for(L_SHAPE, 2);
    let ih = interpolate_control(&con, &disc);
    assert_eq!(ih.values[0], con.problem.a);
    for (k, x) in disc.boundary_points().iter().enumerate() {
        let (_, _, side) = disc.boundary_edge(k);
        assert_eq!(ih.values[k], con.control(*x, side));
    }

    let unc = ManufacturedProblem::new(L_SHAPE, LambdaChoice::Leading, false)
        .unwrap()
        .exact_fields()
        .unwrap();
    let eps = unc.problem.epsilon_corner;
    let coarse = interpolate_control(&unc, &disc);
    let corner = coarse.values[0];
    assert!(corner.is_finite());
    assert_eq!(corner, unc.control([eps, 0.0], 0));
    assert!(corner.abs() > 10.0);
    let fine = interpolate_control(&unc, &disc_for(L_SHAPE, 3));
    assert_eq!(fine.values[0], corner);

    let convex = ManufacturedProblem::new(FRAC_PI_2, LambdaChoice::Leading, false)
        .unwrap()
        .exact_fields()
        .unwrap();
    let d = disc_for(FRAC_PI_2, 1);
    let ih = interpolate_control(&convex, &d);
    for (k, x) in d.boundary_points().iter().enumerate() {
        let (_, _, side) = d.boundary_edge(k);
        assert_eq!(ih.values[k], convex.control(*x, side));
    }
}

fn orthogonality_defect(
    f: &ExactFields,
    disc: &Discretization,
    u_star: &TraceFunction,
) -> (f64, f64) {
    let defect = boundary_integral(disc, |x, side, t, k| {
        f.residual(x, side) * (trace_at(u_star, k, t) - f.control(x, side))
    });
    let dn = boundary_integral(disc, |x, side, _, _| f.residual(x, side).powi(2)).sqrt();
    let un = boundary_integral(disc, |x, side, _, _| f.control(x, side).powi(2)).sqrt();
    (defect.abs(), 1e-8 * dn * un)
}

#[test]
fn interpolants_are_admissible_and_orthogonal() {
    for choice in [LambdaChoice::Leading, LambdaChoice::Special] {
        let f = ManufacturedProblem::new(L_SHAPE, choice, true)
            .unwrap()
            .exact_fields()
            .unwrap();
        let (a, b) = (f.problem.a, f.problem.b);
        let u = |x: Point, s: usize| f.control(x, s);
        let d = |x: Point, s: usize| f.residual(x, s);
        for level in [2, 3] {
            let disc = disc_for(L_SHAPE, level);
            let lag = modified_lagrange_interpolant(&u, &disc, a, b).unwrap();
            let cr = casas_raymond_interpolant(&u, &d, &disc, a, b).unwrap();
            for v in lag.values.iter().chain(&cr.values) {
                assert!(*v >= a && *v <= b);
            }
            let (defect, tol) = orthogonality_defect(&f, &disc, &cr);
            assert!(defect <= tol, "quasi-interpolant: {defect} > {tol}");
            if choice == LambdaChoice::Leading {
                assert_eq!(lag.values[0], a);
                assert_eq!(lag.values[1], a);
            }
            let (defect, tol) = orthogonality_defect(&f, &disc, &lag);
            assert!(defect <= tol, "modified Lagrange: {defect} > {tol}");
        }
    }
}

#[test]
fn interpolants_on_simple_data() {
    let disc = disc_for(L_SHAPE, 1);
    let c = |_: Point, _: usize| 0.25;
    let zero = |_: Point, _: usize| 0.0;
    let lag = modified_lagrange_interpolant(&c, &disc, -1.0, 1.0).unwrap();
    let cr = casas_raymond_interpolant(&c, &zero, &disc, -1.0, 1.0).unwrap();
    for v in lag.values.iter().chain(&cr.values) {
        assert!((v - 0.25).abs() < 1e-14);
    }
    let affine = |x: Point, _: usize| 0.1 * x[0] - 0.2 * x[1];
    let lag = modified_lagrange_interpolant(&affine, &disc, -1.0, 1.0).unwrap();
    for (k, x) in disc.boundary_points().iter().enumerate() {
        assert_eq!(lag.values[k], affine(*x, 0));
    }
    // zero residual: patch averages of an affine function are the nodal values
    let cr = casas_raymond_interpolant(&affine, &zero, &disc, -1.0, 1.0).unwrap();
    for (k, x) in disc.boundary_points().iter().enumerate() {
        let (_, [p, _], _) = disc.boundary_edge(k);
        let prev = disc
            .boundary_edge((k + disc.num_boundary() - 1) % disc.num_boundary())
            .1[0];
        let (l0, l1) = (dist(prev, p), dist(p, disc.boundary_edge(k).1[1]));
        let q = disc.boundary_edge(k).1[1];
        let mean = (0.5 * l0 * (affine(prev, 0) + affine(*x, 0))
            + 0.5 * l1 * (affine(*x, 0) + affine(q, 0)))
            / (l0 + l1);
        assert!((cr.values[k] - mean).abs() < 1e-14);
    }
    let step = |x: Point, _: usize| {
        if x[0] > 0.5 {
            1.0
        } else if x[0] < -0.5 {
            -1.0
        } else {
            0.0
        }
    };
    assert!(matches!(
        modified_lagrange_interpolant(&step, &disc_for(L_SHAPE, 0), -1.0, 1.0),
        Ok(_) | Err(ManufacturedError::AmbiguousBounds { .. })
    ));
    let jump = |x: Point, _: usize| {
        if x[1] > 0.999 && x[0] > 0.0 {
            1.0
        } else if x[1] > 0.999 {
            -1.0
        } else {
            0.0
        }
    };
    assert!(matches!(
        modified_lagrange_interpolant(&jump, &disc, -1.0, 1.0),
        Err(ManufacturedError::AmbiguousBounds { .. })
    ));
}
