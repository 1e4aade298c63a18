use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{
    corner_flattening_report, theoretical_rate, FlatteningReport, RateQuery, StudyConfig,
    StudyError, TheoreticalRate,
};
use crate::control::{
    solve_constrained_pdas, solve_unconstrained, verify_discrete_vi, ControlProblem,
    ControlSolution,
};
use crate::fem::{Discretization, LineRule, QuadratureField, TraceFunction};
use crate::geometry::{dist, lerp};
use crate::manufactured::{build_y_omega, interpolate_control, ExactFields};
use crate::mesh::{build_family, Mesh};

/// Results of one level of a study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    /// One-based level index.
    pub level: usize,
    pub h: f64,
    pub dofs: usize,
    pub bdofs: usize,
    /// `|u_h - I_h u|` in L2 of the boundary.
    pub error: f64,
    /// `|u_h - u|` in L2 of the boundary by 5-point Gauss per edge (diagnostic).
    pub error_quadrature: f64,
    /// Active set iterations for constrained runs, reduced CG iterations otherwise.
    pub iters: usize,
    pub pdas_iterations: usize,
    pub cg_iterations: usize,
    pub inner_iterations: usize,
    pub residual_norm: f64,
    pub vi_violation: Option<f64>,
    pub seconds: f64,
}

/// All artefacts of a solved level.
pub struct LevelRun {
    pub record: LevelRecord,
    pub disc: Arc<Discretization>,
    pub problem: ControlProblem,
    pub solution: ControlSolution,
    pub interpolant: TraceFunction,
}

/// Outcome of a convergence study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EocReport {
    pub config: StudyConfig,
    pub epsilon_corner: f64,
    pub levels: Vec<LevelRecord>,
    /// `eoc[j]` compares levels `j` and `j + 1` (one-based), i.e. entry `k`
    /// is `EOC_{k+2}`.
    pub eoc: Vec<f64>,
    /// EOC of the quadrature error (diagnostic).
    pub eoc_quadrature: Vec<f64>,
    /// `EOC_J`.
    pub headline_eoc: f64,
    /// Least-squares slope of `log e` against `log h` over the last three levels.
    pub lsq_slope: f64,
    pub rate: TheoreticalRate,
    pub band: [f64; 2],
    pub verdict: bool,
    pub flattening: Vec<FlatteningReport>,
}

/// `EOC_j = log2(e_{j-1} / e_j)` for consecutive entries.
pub fn eoc_sequence(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Least-squares slope of `log e` over `log h`.
pub fn lsq_slope(h: &[f64], e: &[f64]) -> f64 {
    let n = h.len().min(e.len()) as f64;
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Rate query for the sector domain of a configuration.
pub fn rate_query(cfg: &StudyConfig) -> Result<RateQuery, StudyError> {
    let domain = crate::mesh::build_sector_domain(cfg.omega1)?;
    let mut special = vec![false; domain.len()];
    special[domain.primary_corner] =
        cfg.lambda_choice == crate::manufactured::LambdaChoice::Special;
    Ok(RateQuery {
        angles: domain.angles.clone(),
        constrained: cfg.constrained,
        special,
        family: cfg.family,
        assumption: cfg.assumption,
    })
}

fn quadrature_error(fields: &ExactFields, disc: &Discretization, u: &TraceFunction) -> f64 {
    let rule = LineRule::gauss5();
    let mut s = 0.0;
    for k in 0..disc.num_boundary() {
        let ([i, j], [p, q], side) = disc.boundary_edge(k);
        let l = dist(p, q);
        for (&t, &w) in rule.points.iter().zip(&rule.weights) {
            let d =
                fields.control(lerp(p, q, t), side) - (u.values[i] * (1.0 - t) + u.values[j] * t);
            s += w * l * d * d;
        }
    }
    s.sqrt()
}

/// Builds the target on `mesh`, solves the discrete problem and measures the error.
pub fn solve_level(cfg: &StudyConfig, mesh: Mesh, level: usize) -> Result<LevelRun, StudyError> {
    let start = Instant::now();
    let problem_data = cfg.problem()?;
    let fields = problem_data.exact_fields()?;
    let disc = Arc::new(Discretization::with_options(
        Arc::new(mesh),
        cfg.inner_options(),
        cfg.quadrature(),
    )?);
    let target = if cfg.zero_target {
        QuadratureField::zeros(&disc.mesh, disc.triangle_rule())
    } else {
        let y = build_y_omega(&fields, &disc, cfg.target_mode)?;
        disc.sample(&y, &disc.triangle_rule())?
    };
    let (a, b) = (problem_data.a, problem_data.b);
    let problem = ControlProblem::new(disc.clone(), problem_data.nu, a, b, target)?;
    let opts = cfg.solver_options();
    let solution = if problem.is_unconstrained() {
        solve_unconstrained(&problem, &opts)?
    } else {
        solve_constrained_pdas(&problem, &opts)?
    };
    let interpolant = interpolate_control(&fields, &disc);
    let diff = TraceFunction::new(
        solution
            .u
            .values
            .iter()
            .zip(&interpolant.values)
            .map(|(u, i)| u - i)
            .collect(),
    );
    let error = disc.l2_norm_boundary(&diff);
    let vi_violation =
        (!problem.is_unconstrained()).then(|| verify_discrete_vi(&problem, &solution));
    let constrained = !problem.is_unconstrained();
    let record = LevelRecord {
        level,
        h: disc.mesh.h,
        dofs: disc.num_vertices(),
        bdofs: disc.num_boundary(),
        error,
        error_quadrature: quadrature_error(&fields, &disc, &solution.u),
        iters: if constrained {
            solution.pdas_iterations
        } else {
            solution.cg_iterations
        },
        pdas_iterations: solution.pdas_iterations,
        cg_iterations: solution.cg_iterations,
        inner_iterations: disc.inner_cg_stats().0,
        residual_norm: solution.residual_norm,
        vi_violation,
        seconds: if cfg.record_timing {
            start.elapsed().as_secs_f64()
        } else {
            0.0
        },
    };
    Ok(LevelRun {
        record,
        disc,
        problem,
        solution,
        interpolant,
    })
}

/// Solves one level and returns its record.
pub fn run_level(cfg: &StudyConfig, mesh: Mesh, level: usize) -> Result<LevelRecord, StudyError> {
    Ok(solve_level(cfg, mesh, level)?.record)
}

/// Assembles a report from level records.
pub fn report_from_levels(
    cfg: &StudyConfig,
    levels: Vec<LevelRecord>,
    flattening: Vec<FlatteningReport>,
) -> Result<EocReport, StudyError> {
    if levels.len() < 2 {
        return Err(StudyError::InvalidConfig(
            "an EOC needs at least two levels".into(),
        ));
    }
    let errors: Vec<f64> = levels.iter().map(|l| l.error).collect();
    let eoc = eoc_sequence(&errors);
    let eoc_quadrature = eoc_sequence(
        &levels
            .iter()
            .map(|l| l.error_quadrature)
            .collect::<Vec<_>>(),
    );
    let headline_eoc = *eoc.last().expect("at least one EOC");
    let tail = levels.len().saturating_sub(3);
    let hs: Vec<f64> = levels[tail..].iter().map(|l| l.h).collect();
    let lsq_slope = lsq_slope(&hs, &errors[tail..]);
    let rate = theoretical_rate(&rate_query(cfg)?)?;
    let band = cfg.band_for(&rate);
    let verdict = headline_eoc.is_finite() && headline_eoc >= band[0] && headline_eoc <= band[1];
    Ok(EocReport {
        config: cfg.clone(),
        epsilon_corner: cfg.problem()?.epsilon_corner,
        levels,
        eoc,
        eoc_quadrature,
        headline_eoc,
        lsq_slope,
        rate,
        band,
        verdict,
        flattening,
    })
}

/// Runs every level of the configured mesh family and computes the EOCs.
pub fn run_study(cfg: &StudyConfig) -> Result<EocReport, StudyError> {
    run_study_with(cfg, |_| {})
}

/// Like [`run_study`], calling `progress` after every level.
pub fn run_study_with(
    cfg: &StudyConfig,
    mut progress: impl FnMut(&LevelRecord),
) -> Result<EocReport, StudyError> {
    cfg.validate()?;
    let domain = crate::mesh::build_sector_domain(cfg.omega1)?;
    let family = build_family(&domain, cfg.family, cfg.levels, &cfg.perturbation())?;
    let mut levels = Vec::with_capacity(cfg.levels);
    let mut flattening = Vec::new();
    for (k, mesh) in family.meshes.into_iter().enumerate() {
        let run = solve_level(cfg, mesh, k + 1)?;
        if let Some(rho) = cfg.flattening_radius {
            if !run.problem.is_unconstrained() {
                let mut rep = corner_flattening_report(
                    &run.solution,
                    &run.problem,
                    run.disc.mesh.domain.primary_corner,
                    rho,
                )?;
                rep.level = Some(k + 1);
                flattening.push(rep);
            }
        }
        progress(&run.record);
        levels.push(run.record);
    }
    report_from_levels(cfg, levels, flattening)
}
