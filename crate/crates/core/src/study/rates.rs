use std::f64::consts::{PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::StudyError;
use crate::mesh::MeshFamilyKind;

/// Which convergence result a rate comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RateSource {
    #[serde(rename = "Thm 4.1")]
    Unconstrained,
    #[serde(rename = "Rem 4.6")]
    UnconstrainedSpecial,
    #[serde(rename = "Thm 5.2")]
    Constrained,
    #[serde(rename = "Thm 5.3")]
    ConstrainedFloor,
}

impl fmt::Display for RateSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Unconstrained => "Thm 4.1",
            Self::UnconstrainedSpecial => "Rem 4.6",
            Self::Constrained => "Thm 5.2",
            Self::ConstrainedFloor => "Thm 5.3",
        })
    }
}

/// Input to the rate table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateQuery {
    /// Interior angles of all corners.
    pub angles: Vec<f64>,
    pub constrained: bool,
    /// Per corner: whether the leading singular coefficient vanishes.
    pub special: Vec<bool>,
    pub family: MeshFamilyKind,
    /// Whether the control is assumed to sit at a bound near every reentrant corner.
    pub assumption: bool,
}

/// Predicted error bound `h^s |log h|^r`, or `h^(1/2) |log h|^(1/4)` when
/// `log_quarter` is set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoreticalRate {
    pub s: f64,
    pub r: u8,
    pub log_quarter: bool,
    pub source: RateSource,
    /// Smallest singular exponent over all corners.
    pub lambda: f64,
    /// Smallest effective exponent above one, if any.
    pub big_lambda: Option<f64>,
}

fn trim(v: f64) -> String {
    let s = format!("{v:.5}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

impl fmt::Display for TheoreticalRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.log_quarter {
            write!(f, "s={} log^(1/4) ({})", trim(self.s), self.source)
        } else {
            write!(f, "s={} r={} ({})", trim(self.s), self.r, self.source)
        }
    }
}

const TOL: f64 = 1e-12;

fn log_power(exponent: f64) -> u8 {
    u8::from(exponent > 1.0 + TOL && exponent <= 1.5 + TOL)
}

/// Rate exponents for a corner configuration.
pub fn theoretical_rate(q: &RateQuery) -> Result<TheoreticalRate, StudyError> {
    if q.angles.is_empty() {
        return Err(StudyError::InvalidConfig(
            "rate query without corners".into(),
        ));
    }
    if q.special.len() != q.angles.len() {
        return Err(StudyError::InvalidConfig(format!(
            "{} special flags for {} corners",
            q.special.len(),
            q.angles.len()
        )));
    }
    if let Some(&w) = q.angles.iter().find(|w| !(**w > 0.0 && **w < TAU)) {
        return Err(StudyError::InvalidAngle(w));
    }
    let lambdas: Vec<f64> = q.angles.iter().map(|w| PI / w).collect();
    let lambda = lambdas.iter().copied().fold(f64::INFINITY, f64::min);
    let effective: Vec<f64> = lambdas
        .iter()
        .zip(&q.special)
        .map(|(&l, &sp)| if l < 1.0 && sp { 2.0 * l } else { l })
        .collect();
    let big_lambda = effective
        .iter()
        .copied()
        .filter(|&l| l > 1.0)
        .fold(None, |m: Option<f64>, l| Some(m.map_or(l, |m| m.min(l))));
    let superconvergent = q.family == MeshFamilyKind::Superconvergent;

    if !q.constrained {
        let special = q
            .special
            .iter()
            .zip(&lambdas)
            .any(|(&sp, &l)| sp && l < 1.0);
        let (exp, source) = if special {
            let min_eff = effective.iter().copied().fold(f64::INFINITY, f64::min);
            (min_eff, RateSource::UnconstrainedSpecial)
        } else {
            (lambda, RateSource::Unconstrained)
        };
        let (s, r) = if superconvergent {
            ((exp - 0.5).min(1.5), 0)
        } else {
            ((exp - 0.5).min(1.0), log_power(exp - 0.5))
        };
        return Ok(TheoreticalRate {
            s,
            r,
            log_quarter: false,
            source,
            lambda,
            big_lambda,
        });
    }

    // in a convex domain there is no reentrant corner for the assumption to concern
    if lambda >= 1.0 - TOL || q.assumption {
        let big = big_lambda.ok_or_else(|| {
            StudyError::UnsupportedRegime("no effective exponent above one".into())
        })?;
        let (s, r) = if superconvergent {
            ((big - 0.5).min(1.5).min(2.0 * lambda), 0)
        } else {
            ((big - 0.5).min(1.0), log_power(big - 0.5))
        };
        return Ok(TheoreticalRate {
            s,
            r,
            log_quarter: false,
            source: RateSource::Constrained,
            lambda,
            big_lambda,
        });
    }
    Ok(TheoreticalRate {
        s: 0.5,
        r: 0,
        log_quarter: true,
        source: RateSource::ConstrainedFloor,
        lambda,
        big_lambda,
    })
}

/// The opening angles tabulated by the `rates --table` command.
pub fn rate_grid() -> Vec<f64> {
    let lo = PI / 3.0;
    let n = 50;
    (0..n)
        .map(|k| lo + (TAU - lo) * k as f64 / n as f64)
        .collect()
}
