use std::f64::consts::PI;
use std::path::PathBuf;

use serde::{Deserialize, Deserializer, Serialize};

use super::{StudyError, TheoreticalRate};
use crate::control::SolverOptions;
use crate::fem::{CgOptions, QuadratureOrders};
use crate::manufactured::{LambdaChoice, ManufacturedProblem, TargetMode};
use crate::mesh::{MeshFamilyKind, PerturbationOptions};

/// Parses an angle given in radians, either as a decimal number or as a
/// multiple of pi such as `3pi/2`, `3*pi/2`, `1.5pi` or `pi`.
pub fn parse_angle(text: &str) -> Result<f64, StudyError> {
    let s: String = text
        .trim()
        .to_ascii_lowercase()
        .replace('π', "pi")
        .chars()
        .filter(|c| !c.is_whitespace())
        .collect();
    let bad = || StudyError::InvalidConfig(format!("cannot parse angle '{text}'"));
    let value = match s.find("pi") {
        None => s.parse::<f64>().map_err(|_| bad())?,
        Some(pos) => {
            let coeff = s[..pos].trim_end_matches('*');
            let coeff = if coeff.is_empty() {
                1.0
            } else {
                coeff.parse::<f64>().map_err(|_| bad())?
            };
            let rest = &s[pos + 2..];
            let denom = if rest.is_empty() {
                1.0
            } else {
                rest.strip_prefix('/')
                    .ok_or_else(bad)?
                    .parse::<f64>()
                    .map_err(|_| bad())?
            };
            coeff * PI / denom
        }
    };
    if !value.is_finite() {
        return Err(bad());
    }
    Ok(value)
}

fn deserialize_angle<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }
    match Repr::deserialize(d)? {
        Repr::Number(v) => Ok(v),
        Repr::Text(s) => parse_angle(&s).map_err(serde::de::Error::custom),
    }
}

fn default_levels() -> usize {
    6
}
fn default_nu() -> f64 {
    1.0
}
fn default_tol() -> f64 {
    1e-11
}
fn default_max_cg() -> usize {
    1000
}
fn default_max_pdas() -> usize {
    50
}
fn default_kappa() -> f64 {
    0.2
}
fn default_triangle_order() -> usize {
    5
}
fn default_true() -> bool {
    true
}

/// Everything that determines a convergence study.
///
/// Bounds and the corner distance default to the values of the manufactured
/// problem when absent. Infinite bounds are written as `null`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(deserialize_with = "deserialize_angle")]
    pub omega1: f64,
    #[serde(default = "leading")]
    pub lambda_choice: LambdaChoice,
    #[serde(default)]
    pub constrained: bool,
    #[serde(default = "generic")]
    pub family: MeshFamilyKind,
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default = "default_nu")]
    pub nu: f64,
    #[serde(default)]
    pub a: Option<f64>,
    #[serde(default)]
    pub b: Option<f64>,
    /// Relative tolerance of the reduced CG iterations.
    #[serde(default = "default_tol")]
    pub cg_tol: f64,
    /// Relative tolerance of the interior Poisson solves.
    #[serde(default = "default_tol")]
    pub inner_tol: f64,
    #[serde(default = "default_max_cg")]
    pub max_cg: usize,
    #[serde(default = "default_max_pdas")]
    pub max_pdas: usize,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub epsilon_corner: Option<f64>,
    #[serde(default = "default_triangle_order")]
    pub quad_triangle: usize,
    #[serde(default = "default_triangle_order")]
    pub quad_edge: usize,
    #[serde(default)]
    pub target_mode: TargetMode,
    /// Presume the control sits at a bound near reentrant corners.
    #[serde(default = "default_true")]
    pub assumption: bool,
    /// Accepted interval for the headline EOC; derived from the rate when absent.
    #[serde(default)]
    pub band: Option<[f64; 2]>,
    /// Record wall-clock times (makes reports non-reproducible).
    #[serde(default)]
    pub record_timing: bool,
    /// Replace the target by zero (sanity hook).
    #[serde(default)]
    pub zero_target: bool,
    /// Radius of the corner flattening diagnostic for constrained runs.
    #[serde(default)]
    pub flattening_radius: Option<f64>,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn leading() -> LambdaChoice {
    LambdaChoice::Leading
}
fn generic() -> MeshFamilyKind {
    MeshFamilyKind::Generic
}

impl StudyConfig {
    pub fn new(
        omega1: f64,
        lambda_choice: LambdaChoice,
        constrained: bool,
        family: MeshFamilyKind,
    ) -> Self {
        Self {
            omega1,
            lambda_choice,
            constrained,
            family,
            levels: default_levels(),
            nu: default_nu(),
            a: None,
            b: None,
            cg_tol: default_tol(),
            inner_tol: default_tol(),
            max_cg: default_max_cg(),
            max_pdas: default_max_pdas(),
            kappa: default_kappa(),
            seed: 0,
            epsilon_corner: None,
            quad_triangle: default_triangle_order(),
            quad_edge: default_triangle_order(),
            target_mode: TargetMode::default(),
            assumption: true,
            band: None,
            record_timing: false,
            zero_target: false,
            flattening_radius: None,
            name: None,
            output_dir: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, StudyError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), StudyError> {
        let bad = |m: String| Err(StudyError::InvalidConfig(m));
        if self.levels < 3 {
            return bad(format!("at least 3 levels are needed, got {}", self.levels));
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return bad(format!("nu = {} must be positive", self.nu));
        }
        if !(self.cg_tol > 0.0 && self.inner_tol > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if !(0.0..=crate::mesh::MAX_KAPPA).contains(&self.kappa) {
            return bad(format!(
                "kappa = {} outside [0, {}]",
                self.kappa,
                crate::mesh::MAX_KAPPA
            ));
        }
        if let (Some(a), Some(b)) = (self.a, self.b) {
            if !(a < b) {
                return bad(format!("bounds [{a}, {b}] must satisfy a < b"));
            }
        }
        if (self.a.is_some() || self.b.is_some()) && !self.constrained {
            return bad("bounds given for an unconstrained study".into());
        }
        if let Some([lo, hi]) = self.band {
            if !(lo <= hi) {
                return bad(format!("empty band [{lo}, {hi}]"));
            }
        }
        self.problem()?;
        Ok(())
    }

    /// Short identifier used for file names.
    pub fn label(&self) -> String {
        if let Some(n) = &self.name {
            return n.clone();
        }
        format!(
            "w{:.4}_{}_{}_{}",
            self.omega1,
            self.lambda_choice,
            if self.constrained { "con" } else { "unc" },
            self.family
        )
    }

    pub fn problem(&self) -> Result<ManufacturedProblem, StudyError> {
        let mut p = ManufacturedProblem::new(self.omega1, self.lambda_choice, self.constrained)?
            .with_nu(self.nu)?;
        if self.constrained {
            let a = self.a.unwrap_or(p.a);
            let b = self.b.unwrap_or(p.b);
            p = p.with_bounds(a, b)?;
        }
        if let Some(e) = self.epsilon_corner {
            p = p.with_epsilon(e)?;
        }
        Ok(p)
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.cg_tol,
            max_cg: self.max_cg,
            max_pdas: self.max_pdas,
        }
    }

    pub fn inner_options(&self) -> CgOptions {
        CgOptions {
            tol: self.inner_tol,
            ..CgOptions::default()
        }
    }

    pub fn quadrature(&self) -> QuadratureOrders {
        QuadratureOrders {
            triangle: self.quad_triangle,
            edge: self.quad_edge,
        }
    }

    pub fn perturbation(&self) -> PerturbationOptions {
        PerturbationOptions {
            kappa: self.kappa,
            seed: self.seed,
        }
    }

    /// The configured band, or the calibrated default for the rate.
    pub fn band_for(&self, rate: &TheoreticalRate) -> [f64; 2] {
        self.band.unwrap_or_else(|| default_band(rate))
    }
}

/// Acceptance interval for the headline EOC around a predicted rate; wider
/// below the rate when a logarithmic factor is predicted.
pub fn default_band(rate: &TheoreticalRate) -> [f64; 2] {
    if rate.log_quarter {
        return [0.45, f64::MAX];
    }
    let below = if rate.r == 1 { 0.2 } else { 0.15 };
    [rate.s - below, rate.s + 0.2]
}
