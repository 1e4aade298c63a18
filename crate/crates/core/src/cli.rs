//! The `dclab` command line.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::check::{quadrature_oracle, run_checks, CheckOptions};
use crate::manufactured::LambdaChoice;
use crate::mesh::{
    build_family, build_sector_domain, check_h2_irregular, io::mesh_to_string, MeshFamilyKind,
    PerturbationOptions,
};
use crate::study::{
    emit_report, parse_angle, rate_grid, rate_query, run_study_with, theoretical_rate, EocReport,
    StudyConfig, StudyError,
};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "DCLAB_OUTPUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FAILED: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "dclab",
    version,
    about = "Dirichlet boundary control convergence lab"
)]
pub struct Cli {
    /// Print progress to standard error.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    /// Directory for all output files.
    #[arg(long, global = true, env = OUTPUT_DIR_ENV, default_value = "dclab-out")]
    pub out_dir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run convergence studies and write CSV, JSON and plot-data reports.
    Study(StudyArgs),
    /// Print the predicted convergence rate.
    Rates(RateArgs),
    /// Build a mesh family and print the irregularity diagnostic per level.
    Mesh(MeshArgs),
    /// Run the property suites on a coarse case.
    Check(CheckArgs),
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    /// JSON study configuration; may be repeated to run several studies.
    #[arg(long = "config")]
    pub configs: Vec<PathBuf>,
    /// Opening angle at the origin, e.g. 4.712 or 3pi/2.
    #[arg(long, allow_hyphen_values = true)]
    pub omega1: Option<String>,
    #[arg(long, value_parser = parse_choice)]
    pub lambda: Option<LambdaChoice>,
    #[arg(long, conflicts_with = "unconstrained")]
    pub constrained: bool,
    #[arg(long)]
    pub unconstrained: bool,
    #[arg(long, value_parser = parse_family)]
    pub family: Option<MeshFamilyKind>,
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Corner distance for the nodal interpolant at a singular corner.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub cg_tol: Option<f64>,
    #[arg(long)]
    pub inner_tol: Option<f64>,
    /// Accepted interval for the headline EOC, as `lo,hi`.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_band)]
    pub band: Option<[f64; 2]>,
    /// Corner flattening radius for constrained runs.
    #[arg(long)]
    pub flattening_radius: Option<f64>,
    /// Record wall-clock times in the reports.
    #[arg(long)]
    pub timing: bool,
    /// Presume nothing about the control near reentrant corners.
    #[arg(long)]
    pub no_assumption: bool,
    /// Number of studies run concurrently.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct RateArgs {
    #[arg(long, allow_hyphen_values = true, required_unless_present = "table")]
    pub omega1: Option<String>,
    #[arg(long, conflicts_with = "unconstrained")]
    pub constrained: bool,
    #[arg(long)]
    pub unconstrained: bool,
    /// The leading singular coefficient at the origin vanishes.
    #[arg(long)]
    pub special: bool,
    #[arg(long, value_parser = parse_family, default_value = "generic")]
    pub family: MeshFamilyKind,
    #[arg(long)]
    pub no_assumption: bool,
    /// Print the rates over the tabulated angle grid.
    #[arg(long)]
    pub table: bool,
}

#[derive(Debug, Args)]
pub struct MeshArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub omega1: String,
    #[arg(long, value_parser = parse_family, default_value = "superconvergent")]
    pub family: MeshFamilyKind,
    #[arg(long, default_value_t = 4)]
    pub levels: usize,
    #[arg(long, default_value_t = 0.2)]
    pub kappa: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write every level as a mesh file.
    #[arg(long)]
    pub export: bool,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long, default_value = "3pi/2")]
    pub omega1: String,
    #[arg(long, default_value_t = 2)]
    pub level: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Report order 5 against order 9 quadrature instead of running the suites.
    #[arg(long)]
    pub quad_oracle: bool,
    #[arg(long, hide = true)]
    pub mutate_normal_sign: bool,
}

macro_rules! out {
    ($($t:tt)*) => {{
        let _ = writeln!(std::io::stdout().lock(), $($t)*);
    }};
}

fn parse_choice(s: &str) -> Result<LambdaChoice, String> {
    s.parse()
}

fn parse_band(s: &str) -> Result<[f64; 2], String> {
    let (lo, hi) = s.split_once(',').ok_or("expected lo,hi")?;
    let parse = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    Ok([parse(lo)?, parse(hi)?])
}

fn parse_family(s: &str) -> Result<MeshFamilyKind, String> {
    s.parse()
}

/// Parses the arguments and runs the command, returning the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    let out = &cli.out_dir;
    let result = match &cli.command {
        Command::Study(a) => cmd_study(a, out, cli.verbose),
        Command::Rates(a) => cmd_rates(a),
        Command::Mesh(a) => cmd_mesh(a, out),
        Command::Check(a) => cmd_check(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn apply_overrides(mut cfg: StudyConfig, a: &StudyArgs) -> Result<StudyConfig, StudyError> {
    if let Some(w) = &a.omega1 {
        cfg.omega1 = parse_angle(w)?;
    }
    if let Some(c) = a.lambda {
        cfg.lambda_choice = c;
    }
    if a.constrained {
        cfg.constrained = true;
    }
    if a.unconstrained {
        cfg.constrained = false;
    }
    if let Some(f) = a.family {
        cfg.family = f;
    }
    macro_rules! set {
        ($($field:ident <- $arg:ident),*) => {
            $(if let Some(v) = a.$arg { cfg.$field = v; })*
        };
    }
    set!(levels <- levels, nu <- nu, seed <- seed, kappa <- kappa, cg_tol <- cg_tol, inner_tol <- inner_tol);
    if a.a.is_some() {
        cfg.a = a.a;
    }
    if a.b.is_some() {
        cfg.b = a.b;
    }
    if a.epsilon.is_some() {
        cfg.epsilon_corner = a.epsilon;
    }
    if let Some(b) = &a.band {
        cfg.band = Some(*b);
    }
    if a.flattening_radius.is_some() {
        cfg.flattening_radius = a.flattening_radius;
    }
    if a.timing {
        cfg.record_timing = true;
    }
    if a.no_assumption {
        cfg.assumption = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Resolves the study configurations from files and flags.
pub fn resolve_configs(a: &StudyArgs) -> Result<Vec<StudyConfig>, StudyError> {
    if a.configs.is_empty() {
        let w = a.omega1.as_ref().ok_or_else(|| {
            StudyError::InvalidConfig("either --config or --omega1 is required".into())
        })?;
        let base = StudyConfig::new(
            parse_angle(w)?,
            LambdaChoice::Leading,
            false,
            MeshFamilyKind::Generic,
        );
        return Ok(vec![apply_overrides(base, a)?]);
    }
    a.configs
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).map_err(|source| StudyError::Io {
                path: p.clone(),
                source,
            })?;
            let cfg: StudyConfig = serde_json::from_str(&text)?;
            apply_overrides(cfg, a)
        })
        .collect()
}

fn verdict_line(r: &EocReport) -> String {
    let hi = if r.band[1] >= f64::MAX {
        "inf".to_string()
    } else {
        format!("{:.2}", r.band[1])
    };
    format!(
        "{} {} EOC={:.4} {} band [{:.2}, {}]",
        if r.verdict { "PASS" } else { "FAIL" },
        r.config.label(),
        r.headline_eoc,
        r.rate,
        r.band[0],
        hi
    )
}

fn cmd_study(a: &StudyArgs, out: &Path, verbose: bool) -> Result<i32, StudyError> {
    let configs = resolve_configs(a)?;
    let jobs = a.jobs.max(1);
    let run_one = |cfg: &StudyConfig| -> Result<EocReport, StudyError> {
        let label = cfg.label();
        let report = run_study_with(cfg, |l| {
            if verbose {
                eprintln!(
                    "{label}: level {} h={:.4e} error={:.6e} iters={}",
                    l.level, l.h, l.error, l.iters
                );
            }
        })?;
        let dir = cfg
            .output_dir
            .clone()
            .map_or_else(|| out.to_path_buf(), |d| out.join(d));
        emit_report(&report, &dir)?;
        Ok(report)
    };
    let mut results: Vec<Option<Result<EocReport, StudyError>>> =
        (0..configs.len()).map(|_| None).collect();
    for (chunk_cfg, chunk_res) in configs.chunks(jobs).zip(results.chunks_mut(jobs)) {
        std::thread::scope(|s| {
            let handles: Vec<_> = chunk_cfg
                .iter()
                .map(|c| s.spawn(move || run_one(c)))
                .collect();
            for (slot, h) in chunk_res.iter_mut().zip(handles) {
                *slot = Some(h.join().unwrap_or_else(|_| {
                    Err(StudyError::InvalidConfig("study thread panicked".into()))
                }));
            }
        });
    }
    let mut all_pass = true;
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    for r in results.into_iter().flatten() {
        let r = r?;
        all_pass &= r.verdict;
        let _ = writeln!(lock, "{}", verdict_line(&r));
    }
    Ok(if all_pass { EXIT_OK } else { EXIT_FAILED })
}

fn cmd_rates(a: &RateArgs) -> Result<i32, StudyError> {
    let family = a.family;
    let constrained = a.constrained && !a.unconstrained;
    let query_for = |w: f64, special: bool| -> Result<_, StudyError> {
        let mut cfg = StudyConfig::new(w, LambdaChoice::Leading, constrained, family);
        cfg.assumption = !a.no_assumption;
        let mut q = rate_query(&cfg)?;
        q.special[0] = special;
        Ok(q)
    };
    if a.table {
        out!("omega1,lambda1,special,s,r,log_quarter,source");
        for w in rate_grid() {
            for special in [false, true] {
                let r = theoretical_rate(&query_for(w, special)?)?;
                out!(
                    "{w:.6},{:.6},{special},{:.6},{},{},{}",
                    PI / w,
                    r.s,
                    r.r,
                    r.log_quarter,
                    r.source
                );
            }
        }
        return Ok(EXIT_OK);
    }
    let w = parse_angle(a.omega1.as_deref().unwrap_or_default())?;
    if !(w > 0.0 && w < 2.0 * PI) {
        return Err(StudyError::InvalidAngle(w));
    }
    out!("{}", theoretical_rate(&query_for(w, a.special)?)?);
    Ok(EXIT_OK)
}

fn cmd_mesh(a: &MeshArgs, out: &Path) -> Result<i32, StudyError> {
    let w = parse_angle(&a.omega1)?;
    let spec = build_sector_domain(w)?;
    let fam = build_family(
        &spec,
        a.family,
        a.levels,
        &PerturbationOptions {
            kappa: a.kappa,
            seed: a.seed,
        },
    )?;
    if a.export {
        fs::create_dir_all(out).map_err(|source| StudyError::Io {
            path: out.to_path_buf(),
            source,
        })?;
    }
    out!(
        "level,vertices,triangles,h,max_discrepancy,ratio,exempt_area,boundary_violations,verdict"
    );
    for m in &fam.meshes {
        let r = check_h2_irregular(m);
        out!(
            "{},{},{},{:e},{:e},{:e},{:e},{},{}",
            m.level,
            m.num_vertices(),
            m.num_triangles(),
            m.h,
            r.max_interior_discrepancy,
            r.discrepancy_ratio,
            r.e2_area_fraction,
            r.boundary_vertex_violations,
            r.verdict
        );
        if a.export {
            let path = out.join(format!("mesh_{}_level{}.txt", a.family, m.level));
            crate::study::write_atomic(&path, &mesh_to_string(m))?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_check(a: &CheckArgs) -> Result<i32, StudyError> {
    let opts = CheckOptions {
        omega1: parse_angle(&a.omega1)?,
        level: a.level,
        seed: a.seed,
        flip_normal_sign: a.mutate_normal_sign,
        ..CheckOptions::default()
    };
    if a.quad_oracle {
        let r = quadrature_oracle(&opts)?;
        out!("quantity,relative_difference_order5_vs_order9");
        out!("target_load,{:e}", r.load_difference);
        out!("control_projection,{:e}", r.projection_difference);
        out!("optimal_objective,{:e}", r.objective_difference);
        out!("optimal_control,{:e}", r.control_difference);
        return Ok(EXIT_OK);
    }
    let results = run_checks(&opts)?;
    let mut failed = Vec::new();
    for r in &results {
        out!(
            "{} {} value={:e} tolerance={:e} {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.value,
            r.tolerance,
            r.detail
        );
        if !r.passed {
            failed.push(r.name.as_str());
        }
    }
    if failed.is_empty() {
        Ok(EXIT_OK)
    } else {
        eprintln!("failed properties: {}", failed.join(", "));
        Ok(EXIT_FAILED)
    }
}
