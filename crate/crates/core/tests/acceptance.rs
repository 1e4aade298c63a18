//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Set `DCLAB_ACCEPTANCE_STRICT=1` to turn any FAIL line into a test failure.

use std::f64::consts::PI;
use std::time::Instant;

use dirichlet_control::check::{run_checks, CheckOptions, PropertyResult};
use dirichlet_control::manufactured::LambdaChoice;
use dirichlet_control::mesh::MeshFamilyKind::{self, Generic, Superconvergent};
use dirichlet_control::study::{run_study, EocReport, StudyConfig};

const LEVELS: usize = 6;
const L_SHAPE: f64 = 1.5 * PI;

struct Ledger {
    failed: Vec<String>,
}

impl Ledger {
    fn record(&mut self, id: &str, passed: bool, detail: String) {
        println!(
            "{} criterion {id}: {detail}",
            if passed { "PASS" } else { "FAIL" }
        );
        if !passed {
            self.failed.push(id.to_string());
        }
    }
}

fn study(
    omega1: f64,
    choice: LambdaChoice,
    constrained: bool,
    family: MeshFamilyKind,
) -> EocReport {
    let mut cfg = StudyConfig::new(omega1, choice, constrained, family);
    cfg.levels = LEVELS;
    if constrained {
        cfg.flattening_radius = Some(0.1);
    }
    let t = Instant::now();
    let r = run_study(&cfg).expect("study runs");
    eprintln!(
        "  {} EOC={:.4} lsq={:.4} quadrature EOC={:?} ({:.1} s)",
        cfg.label(),
        r.headline_eoc,
        r.lsq_slope,
        r.eoc_quadrature.last(),
        t.elapsed().as_secs_f64()
    );
    r
}

fn in_band(r: &EocReport, lo: f64, hi: f64) -> (bool, String) {
    let eoc = r.headline_eoc;
    let seq: Vec<String> = r.eoc.iter().map(|e| format!("{e:.3}")).collect();
    (
        (lo..=hi).contains(&eoc),
        format!(
            "{} EOC_{LEVELS}={eoc:.4} in [{lo:.2}, {hi:.2}] (EOC_2..: {})",
            r.config.label(),
            seq.join(" ")
        ),
    )
}

fn band_criterion(ledger: &mut Ledger, id: &str, cases: &[(&EocReport, f64, f64)]) {
    let mut all = true;
    let mut details = Vec::new();
    for (r, lo, hi) in cases {
        let (ok, d) = in_band(r, *lo, *hi);
        all &= ok;
        details.push(d);
    }
    ledger.record(id, all, details.join("; "));
}

fn property<'a>(results: &'a [PropertyResult], name: &str) -> &'a PropertyResult {
    results
        .iter()
        .find(|r| r.name == name)
        .unwrap_or_else(|| panic!("missing property {name}"))
}

fn property_criterion(ledger: &mut Ledger, id: &str, results: &[PropertyResult], names: &[&str]) {
    let ps: Vec<&PropertyResult> = names.iter().map(|n| property(results, n)).collect();
    let detail = ps
        .iter()
        .map(|p| format!("{}={:.3e} (tol {:.1e})", p.name, p.value, p.tolerance))
        .collect::<Vec<_>>()
        .join(", ");
    ledger.record(id, ps.iter().all(|p| p.passed), detail);
}

fn main() {
    use LambdaChoice::{Leading, Special};
    let mut ledger = Ledger { failed: Vec::new() };

    let c1 = study(L_SHAPE, Leading, false, Generic);
    band_criterion(&mut ledger, "1", &[(&c1, 0.10, 0.28)]);

    let c2g = study(PI / 2.0, Leading, false, Generic);
    let c2s = study(PI / 2.0, Leading, false, Superconvergent);
    band_criterion(&mut ledger, "2", &[(&c2g, 0.85, 1.25), (&c2s, 1.30, 1.65)]);

    let c3g = study(L_SHAPE, Special, false, Generic);
    let c3s = study(L_SHAPE, Special, false, Superconvergent);
    band_criterion(&mut ledger, "3", &[(&c3g, 0.70, 1.00), (&c3s, 0.70, 1.00)]);

    let c4g = study(L_SHAPE, Leading, true, Generic);
    let c4s = study(L_SHAPE, Leading, true, Superconvergent);
    band_criterion(&mut ledger, "4", &[(&c4g, 0.80, 1.25), (&c4s, 1.15, 1.50)]);

    let c5 = study(L_SHAPE, Special, true, Generic);
    band_criterion(&mut ledger, "5", &[(&c5, 0.70, 1.00)]);

    let constrained = [&c4g, &c4s, &c5];
    let mut ok6 = true;
    let mut detail6 = Vec::new();
    for r in constrained {
        // eoc[k] is EOC_{k+2}; levels j >= 3 start at k = 1.
        let min = r.eoc[1..].iter().copied().fold(f64::INFINITY, f64::min);
        ok6 &= min >= 0.45;
        detail6.push(format!(
            "{} min EOC_j (j>=3)={min:.4} >= 0.45",
            r.config.label()
        ));
    }
    ledger.record("6", ok6, detail6.join("; "));

    let t = Instant::now();
    let checks = run_checks(&CheckOptions::default()).expect("property suites run");
    let check_seconds = t.elapsed().as_secs_f64();
    property_criterion(
        &mut ledger,
        "7",
        &checks,
        &["hessian_symmetry", "hessian_definiteness"],
    );
    property_criterion(&mut ledger, "8", &checks, &["gradient_fd"]);
    property_criterion(
        &mut ledger,
        "9",
        &checks,
        &["extension_trace_exact", "extension_affine"],
    );
    property_criterion(&mut ledger, "10", &checks, &["normal_derivative_identity"]);
    property_criterion(
        &mut ledger,
        "11",
        &checks,
        &[
            "interpolant_orthogonality_quasi",
            "interpolant_orthogonality_lagrange",
        ],
    );

    let suite12 = ["pdas_iterations", "pdas_vi", "pdas_matches_unconstrained"];
    let coarse_ok = suite12.iter().all(|n| property(&checks, n).passed);
    let max_pdas = constrained
        .iter()
        .flat_map(|r| r.levels.iter().map(|l| l.pdas_iterations))
        .max()
        .unwrap_or(0);
    let min_vi = constrained
        .iter()
        .flat_map(|r| r.levels.iter().filter_map(|l| l.vi_violation))
        .fold(f64::INFINITY, f64::min);
    let ok12 = coarse_ok && max_pdas <= 30 && min_vi >= -1e-8;
    ledger.record(
        "12",
        ok12,
        format!(
            "max PDAS iterations over shipped constrained cases={max_pdas} (<= 30), min VI violation={min_vi:.3e} (>= -1e-8), \
             unconstrained agreement={:.3e} (<= 1e-9)",
            property(&checks, "pdas_matches_unconstrained").value
        ),
    );
    property_criterion(
        &mut ledger,
        "13",
        &checks,
        &["mesh_superconvergent_exact", "mesh_generic_fails"],
    );

    let mut ok14 = true;
    let mut detail14 = Vec::new();
    for r in [&c4g, &c4s] {
        for f in r
            .flattening
            .iter()
            .filter(|f| f.level.is_some_and(|l| l >= 4))
        {
            ok14 &= f.fraction >= 0.9;
            detail14.push(format!(
                "{} level {} fraction {:.3} ({}/{} nodes, {:?})",
                r.config.label(),
                f.level.unwrap(),
                f.fraction,
                f.at_bound,
                f.nodes,
                f.bound
            ));
        }
    }
    ledger.record(
        "14",
        ok14 && !detail14.is_empty(),
        format!("radius 0.1, need >= 0.9: {}", detail14.join("; ")),
    );

    let shipped = [&c1, &c2g, &c2s, &c3g, &c3s, &c4g, &c4s, &c5];
    let monotone = shipped
        .iter()
        .all(|r| r.levels.windows(2).skip(1).all(|w| w[1].error < w[0].error));
    println!(
        "{} invariant monotone: e_j strictly decreasing for j >= 2 on all shipped cases",
        if monotone { "PASS" } else { "FAIL" }
    );
    println!(
        "{} invariant check-time: property suites took {check_seconds:.1} s (< 60 s)",
        if check_seconds < 60.0 { "PASS" } else { "FAIL" }
    );
    println!(
        "acceptance: {} of 14 criteria pass",
        14 - ledger.failed.len()
    );

    if std::env::var_os("DCLAB_ACCEPTANCE_STRICT").is_some_and(|v| v == "1") {
        assert!(
            ledger.failed.is_empty(),
            "failed criteria: {}",
            ledger.failed.join(", ")
        );
    }
}
