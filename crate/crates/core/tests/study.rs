use std::f64::consts::{FRAC_PI_2, PI};

use dirichlet_control::manufactured::{interpolate_control, LambdaChoice};
use dirichlet_control::mesh::{build_family, build_sector_domain, MeshFamilyKind};
use dirichlet_control::study::*;

const L_SHAPE: f64 = 1.5 * PI;

fn query(omega1: f64, constrained: bool, special: bool, family: MeshFamilyKind) -> RateQuery {
    let mut cfg = StudyConfig::new(
        omega1,
        if special {
            LambdaChoice::Special
        } else {
            LambdaChoice::Leading
        },
        constrained,
        family,
    );
    cfg.assumption = true;
    rate_query(&cfg).unwrap()
}

#[test]
fn rate_table_examples() {
    let r = theoretical_rate(&query(L_SHAPE, false, false, MeshFamilyKind::Generic)).unwrap();
    assert!((r.s - 1.0 / 6.0).abs() < 1e-12 && r.r == 0);
    assert_eq!(r.to_string(), "s=0.16667 r=0 (Thm 4.1)");

    let r = theoretical_rate(&query(
        FRAC_PI_2,
        false,
        false,
        MeshFamilyKind::Superconvergent,
    ))
    .unwrap();
    assert!((r.s - 1.5).abs() < 1e-12 && r.r == 0);
    assert!(r.to_string().starts_with("s=1.5 r=0"));
    let r = theoretical_rate(&query(FRAC_PI_2, false, false, MeshFamilyKind::Generic)).unwrap();
    assert!((r.s - 1.0).abs() < 1e-12 && r.r == 1);

    let r = theoretical_rate(&query(L_SHAPE, true, false, MeshFamilyKind::Generic)).unwrap();
    assert!((r.s - 1.0).abs() < 1e-12 && r.r == 1);
    assert_eq!(r.big_lambda, Some(2.0));
    let r = theoretical_rate(&query(
        L_SHAPE,
        true,
        false,
        MeshFamilyKind::Superconvergent,
    ))
    .unwrap();
    assert!((r.s - 4.0 / 3.0).abs() < 1e-12 && r.r == 0);

    let r = theoretical_rate(&query(L_SHAPE, true, true, MeshFamilyKind::Generic)).unwrap();
    assert!((r.s - 5.0 / 6.0).abs() < 1e-12 && r.r == 0);
    for fam in [MeshFamilyKind::Generic, MeshFamilyKind::Superconvergent] {
        let r = theoretical_rate(&query(L_SHAPE, false, true, fam)).unwrap();
        assert!((r.s - 5.0 / 6.0).abs() < 1e-12);
        assert_eq!(r.source, RateSource::UnconstrainedSpecial);
    }

    let mut q = query(L_SHAPE, true, false, MeshFamilyKind::Generic);
    q.assumption = false;
    let r = theoretical_rate(&q).unwrap();
    assert!(r.log_quarter && r.s == 0.5);
    assert_eq!(r.to_string(), "s=0.5 log^(1/4) (Thm 5.3)");
}

#[test]
fn rate_table_rejects_bad_angles() {
    let mut q = query(L_SHAPE, false, false, MeshFamilyKind::Generic);
    q.angles[0] = 7.0;
    assert!(matches!(
        theoretical_rate(&q),
        Err(StudyError::InvalidAngle(_))
    ));
    q.angles[0] = 0.0;
    assert!(theoretical_rate(&q).is_err());
    q.angles.pop();
    assert!(theoretical_rate(&q).is_err());
}

#[test]
fn rate_table_is_total_on_the_grid() {
    let grid = rate_grid();
    assert_eq!(grid.len(), 50);
    for &w in &grid {
        for constrained in [false, true] {
            for special in [false, true] {
                for assumption in [false, true] {
                    for family in [MeshFamilyKind::Generic, MeshFamilyKind::Superconvergent] {
                        let mut q = query(w, constrained, false, family);
                        q.special[0] = special;
                        q.assumption = assumption;
                        let r = theoretical_rate(&q).unwrap();
                        assert!(r.s > 0.0 && r.r <= 1, "omega {w}: {r:?}");
                    }
                }
            }
        }
    }
}

#[test]
fn angle_strings() {
    assert!((parse_angle("3pi/2").unwrap() - L_SHAPE).abs() < 1e-15);
    assert!((parse_angle("3*pi/2").unwrap() - L_SHAPE).abs() < 1e-15);
    assert!((parse_angle("1.5pi").unwrap() - L_SHAPE).abs() < 1e-15);
    assert_eq!(parse_angle("pi").unwrap(), PI);
    assert_eq!(parse_angle(" 4.712 ").unwrap(), 4.712);
    assert!((parse_angle("π/2").unwrap() - FRAC_PI_2).abs() < 1e-15);
    for bad in ["", "pie", "3pi/", "x", "pi/0"] {
        assert!(parse_angle(bad).is_err(), "{bad}");
    }
}

#[test]
fn eoc_arithmetic() {
    let e = eoc_sequence(&[0.02, 0.01, 0.005]);
    assert_eq!(e, vec![1.0, 1.0]);
    assert_eq!(eoc_sequence(&[0.1, 0.1]), vec![0.0]);
    for (c, s) in [
        (1.0, 0.5),
        (3.7, 1.0 / 6.0),
        (0.01, 4.0 / 3.0),
        (250.0, 2.0),
    ] {
        let errors: Vec<f64> = (0..8).map(|j| c * 2f64.powf(-(j as f64) * s)).collect();
        for v in eoc_sequence(&errors) {
            assert!((v - s).abs() <= 1e-12, "{v} vs {s}");
        }
        let h: Vec<f64> = (0..8).map(|j| 0.5f64.powi(j)).collect();
        assert!((lsq_slope(&h, &errors) - s).abs() <= 1e-12);
    }
}

fn synthetic_levels(errors: &[f64]) -> Vec<LevelRecord> {
    errors
        .iter()
        .enumerate()
        .map(|(k, &e)| LevelRecord {
            level: k + 1,
            h: 0.5f64.powi(k as i32),
            dofs: 10 << (2 * k),
            bdofs: 8 << k,
            error: e,
            error_quadrature: e,
            iters: 3,
            pdas_iterations: 0,
            cg_iterations: 3,
            inner_iterations: 0,
            residual_norm: 0.0,
            vi_violation: None,
            seconds: 0.0,
        })
        .collect()
}

#[test]
fn report_verdict_from_injected_errors() {
    let cfg = StudyConfig::new(
        FRAC_PI_2,
        LambdaChoice::Leading,
        false,
        MeshFamilyKind::Superconvergent,
    );
    let r = report_from_levels(&cfg, synthetic_levels(&[0.04, 0.0141, 0.005]), Vec::new()).unwrap();
    assert!((r.headline_eoc - (0.0141f64 / 0.005).log2()).abs() < 1e-15);
    assert_eq!(r.band, default_band(&r.rate));
    assert!(r.verdict);
    let r = report_from_levels(&cfg, synthetic_levels(&[0.1, 0.1, 0.1]), Vec::new()).unwrap();
    assert_eq!(r.headline_eoc, 0.0);
    assert!(!r.verdict);
    let mut banded = cfg.clone();
    banded.band = Some([-0.1, 0.1]);
    assert!(
        report_from_levels(&banded, synthetic_levels(&[0.1, 0.1, 0.1]), Vec::new())
            .unwrap()
            .verdict
    );
}

#[test]
fn config_json_roundtrip_and_validation() {
    let text = r#"{"omega1": "3pi/2", "constrained": true, "family": "superconvergent", "levels": 4, "seed": 7}"#;
    let cfg = StudyConfig::from_json(text).unwrap();
    assert!((cfg.omega1 - L_SHAPE).abs() < 1e-15);
    assert_eq!(cfg.levels, 4);
    assert_eq!(cfg.family, MeshFamilyKind::Superconvergent);
    let echo = serde_json::to_string(&cfg).unwrap();
    assert_eq!(StudyConfig::from_json(&echo).unwrap(), cfg);

    for bad in [
        r#"{"omega1": 4.0, "levels": 2}"#,
        r#"{"omega1": 4.0, "nu": 0}"#,
        r#"{"omega1": 7.0}"#,
        r#"{"omega1": 1.0, "lambda_choice": "special"}"#,
        r#"{"omega1": 4.0, "a": 1.0}"#,
        r#"{"omega1": 4.0, "constrained": true, "a": 1.0, "b": 0.0}"#,
        r#"{"omega1": 4.0, "unknown": 1}"#,
        r#"{"levels": 4}"#,
    ] {
        assert!(StudyConfig::from_json(bad).is_err(), "{bad}");
    }
}

fn small(omega1: f64, constrained: bool, levels: usize) -> StudyConfig {
    let mut cfg = StudyConfig::new(
        omega1,
        LambdaChoice::Leading,
        constrained,
        MeshFamilyKind::Superconvergent,
    );
    cfg.levels = levels;
    cfg
}

#[test]
fn zero_target_gives_the_interpolant_norm() {
    let mut cfg = small(L_SHAPE, false, 3);
    cfg.zero_target = true;
    let domain = build_sector_domain(cfg.omega1).unwrap();
    let fam = build_family(&domain, cfg.family, 3, &cfg.perturbation()).unwrap();
    let run = solve_level(&cfg, fam.meshes[1].clone(), 2).unwrap();
    assert!(run.solution.u.values.iter().all(|v| v.abs() < 1e-12));
    let fields = cfg.problem().unwrap().exact_fields().unwrap();
    let ih = interpolate_control(&fields, &run.disc);
    let norm = run.disc.l2_norm_boundary(&ih);
    assert!((run.record.error - norm).abs() <= 1e-10 * norm);
}

#[test]
fn levels_are_deterministic() {
    let mut cfg = small(L_SHAPE, true, 3);
    cfg.family = MeshFamilyKind::Generic;
    cfg.seed = 7;
    let domain = build_sector_domain(cfg.omega1).unwrap();
    let fam = build_family(&domain, cfg.family, 3, &cfg.perturbation()).unwrap();
    let a = run_level(&cfg, fam.meshes[2].clone(), 3).unwrap();
    let b = run_level(&cfg, fam.meshes[2].clone(), 3).unwrap();
    assert_eq!(a.error.to_bits(), b.error.to_bits());
    assert_eq!(a, b);
    assert!(a.error.is_finite() && a.error > 0.0);
    assert_eq!(a.seconds, 0.0);
}

#[test]
fn convex_study_reports() {
    let cfg = small(FRAC_PI_2, false, 4);
    let r = run_study(&cfg).unwrap();
    assert_eq!(r.levels.len(), 4);
    assert!(r.levels.windows(2).all(|w| w[1].error < w[0].error));
    assert!(r.eoc.iter().all(|e| e.is_finite()));
    assert!((r.lsq_slope - r.headline_eoc).abs() <= 0.05);

    let rows = parse_csv(&report_csv(&r)).unwrap();
    assert_eq!(rows.len(), 4);
    for (row, l) in rows.iter().zip(&r.levels) {
        assert_eq!(row.h, l.h);
        assert_eq!(row.error, l.error);
        assert_eq!(
            (row.level, row.dofs, row.bdofs, row.iters),
            (l.level, l.dofs, l.bdofs, l.iters)
        );
        assert_eq!(row.toc_s, r.rate.s);
    }
    assert_eq!(rows[0].eoc, None);
    assert_eq!(rows[3].eoc, Some(r.headline_eoc));

    let json: serde_json::Value = serde_json::from_str(&report_json(&r).unwrap()).unwrap();
    let echo: StudyConfig = serde_json::from_value(json["config"].clone()).unwrap();
    assert_eq!(echo, cfg);

    let pts: Vec<(f64, f64)> = plot_data(&r)
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| {
            let mut it = l.split_whitespace().map(|v| v.parse::<f64>().unwrap());
            (it.next().unwrap(), it.next().unwrap())
        })
        .collect();
    let tail = &pts[pts.len() - 3..];
    let h: Vec<f64> = tail.iter().map(|p| 10f64.powf(p.0)).collect();
    let e: Vec<f64> = tail.iter().map(|p| 10f64.powf(p.1)).collect();
    assert!((lsq_slope(&h, &e) - r.headline_eoc).abs() <= 0.05);

    let dir = tempfile::tempdir().unwrap();
    let paths = emit_report(&r, dir.path()).unwrap();
    assert_eq!(std::fs::read_to_string(&paths.csv).unwrap(), report_csv(&r));
    assert!(paths.json.exists() && paths.plot.exists());
    let leftovers = std::fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .file_name()
                .to_string_lossy()
                .ends_with(".tmp")
        })
        .count();
    assert_eq!(leftovers, 0);
}

#[test]
fn flattening_diagnostic() {
    let mut cfg = small(L_SHAPE, true, 3);
    cfg.flattening_radius = Some(0.4);
    let r = run_study(&cfg).unwrap();
    assert_eq!(r.flattening.len(), 3);
    for f in &r.flattening {
        assert!(f.nodes >= 1 && f.at_bound <= f.nodes);
        assert_eq!(f.bound, BoundTaken::Lower);
        assert!(f.fraction > 0.0);
    }
    assert!(r.levels.iter().all(|l| l.vi_violation.unwrap() >= -1e-8));

    let unc = small(L_SHAPE, false, 3);
    let domain = build_sector_domain(unc.omega1).unwrap();
    let fam = build_family(&domain, unc.family, 3, &unc.perturbation()).unwrap();
    let run = solve_level(&unc, fam.meshes[0].clone(), 1).unwrap();
    assert!(corner_flattening_report(&run.solution, &run.problem, 0, 0.1).is_err());
}
