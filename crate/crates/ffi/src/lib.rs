//! C ABI for the dirichlet-control crate.
//!
//! Every entry point returns a [`DcStatus`]; on failure the message is
//! available from [`dc_last_error_message`] on the same thread. Studies and
//! reports are opaque heap handles released with their `_free` functions.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dirichlet_control::manufactured::LambdaChoice;
use dirichlet_control::mesh::MeshFamilyKind;
use dirichlet_control::study::{
    parse_angle, rate_query, report_csv, report_json, run_study, theoretical_rate, EocReport,
    RateSource, StudyConfig, StudyError,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidConfig = 3,
    SolverFailure = 4,
    Io = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcFamily {
    Generic = 0,
    Superconvergent = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcLambdaChoice {
    Leading = 0,
    Special = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcRateSource {
    Unconstrained = 0,
    UnconstrainedSpecial = 1,
    Constrained = 2,
    ConstrainedFloor = 3,
}

/// Predicted rate `h^s |log h|^r`, or `h^s |log h|^(1/4)` when `log_quarter` is set.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcRate {
    pub s: f64,
    pub r: u8,
    pub log_quarter: bool,
    pub source: DcRateSource,
    pub lambda: f64,
}

/// One row of a convergence study.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcLevel {
    pub level: usize,
    pub h: f64,
    pub dofs: usize,
    pub boundary_dofs: usize,
    pub error: f64,
    /// NaN on the first level.
    pub eoc: f64,
    pub iterations: usize,
}

/// Opaque study configuration.
pub struct DcStudyConfig(StudyConfig);

/// Opaque study report.
pub struct DcReport(EocReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(e: &StudyError) -> DcStatus {
    match e {
        StudyError::InvalidConfig(_)
        | StudyError::InvalidAngle(_)
        | StudyError::UnsupportedRegime(_)
        | StudyError::Parse(_)
        | StudyError::Json(_)
        | StudyError::Manufactured(_)
        | StudyError::Mesh(_) => DcStatus::InvalidConfig,
        StudyError::Io { .. } => DcStatus::Io,
        StudyError::Fem(_) | StudyError::Control(_) => DcStatus::SolverFailure,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (DcStatus, String)>) -> DcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DcStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            DcStatus::Panic
        }
    }
}

fn study_err(e: StudyError) -> (DcStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (DcStatus, String) {
    (DcStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (DcStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        (
            DcStatus::InvalidArgument,
            format!("{what} is not valid UTF-8"),
        )
    })
}

fn family(f: DcFamily) -> MeshFamilyKind {
    match f {
        DcFamily::Generic => MeshFamilyKind::Generic,
        DcFamily::Superconvergent => MeshFamilyKind::Superconvergent,
    }
}

/// Message of the most recent failure on this thread, or null.
///
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses an angle such as `"3pi/2"` or `"4.71"`.
///
/// # Safety
/// `text` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dc_parse_angle(text: *const c_char, out: *mut f64) -> DcStatus {
    guard(|| {
        let s = read_str(text, "text")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = parse_angle(s).map_err(study_err)?;
        Ok(())
    })
}

/// Predicted control error rate for the sector with opening angle `omega1`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dc_theoretical_rate(
    omega1: f64,
    constrained: bool,
    special: bool,
    family_kind: DcFamily,
    assumption: bool,
    out: *mut DcRate,
) -> DcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let choice = if special {
            LambdaChoice::Special
        } else {
            LambdaChoice::Leading
        };
        let mut cfg = StudyConfig::new(omega1, choice, constrained, family(family_kind));
        cfg.assumption = assumption;
        let mut q = rate_query(&cfg).map_err(study_err)?;
        q.special[0] = special;
        let r = theoretical_rate(&q).map_err(study_err)?;
        *out = DcRate {
            s: r.s,
            r: r.r,
            log_quarter: r.log_quarter,
            source: match r.source {
                RateSource::Unconstrained => DcRateSource::Unconstrained,
                RateSource::UnconstrainedSpecial => DcRateSource::UnconstrainedSpecial,
                RateSource::Constrained => DcRateSource::Constrained,
                RateSource::ConstrainedFloor => DcRateSource::ConstrainedFloor,
            },
            lambda: r.lambda,
        };
        Ok(())
    })
}

/// Creates a study configuration with default solver settings.
///
/// # Safety
/// `out` must be a valid pointer; the handle is released with [`dc_config_free`].
#[no_mangle]
pub unsafe extern "C" fn dc_config_new(
    omega1: f64,
    choice: DcLambdaChoice,
    constrained: bool,
    family_kind: DcFamily,
    levels: usize,
    out: *mut *mut DcStudyConfig,
) -> DcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let choice = match choice {
            DcLambdaChoice::Leading => LambdaChoice::Leading,
            DcLambdaChoice::Special => LambdaChoice::Special,
        };
        let mut cfg = StudyConfig::new(omega1, choice, constrained, family(family_kind));
        cfg.levels = levels;
        cfg.validate().map_err(study_err)?;
        *out = Box::into_raw(Box::new(DcStudyConfig(cfg)));
        Ok(())
    })
}

/// Parses a JSON study configuration.
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dc_config_from_json(
    json: *const c_char,
    out: *mut *mut DcStudyConfig,
) -> DcStatus {
    guard(|| {
        let s = read_str(json, "json")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = StudyConfig::from_json(s).map_err(study_err)?;
        *out = Box::into_raw(Box::new(DcStudyConfig(cfg)));
        Ok(())
    })
}

/// Sets the accepted EOC interval of a configuration.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dc_config_set_band(cfg: *mut DcStudyConfig, lo: f64, hi: f64) -> DcStatus {
    guard(|| {
        let cfg = cfg.as_mut().ok_or_else(|| null("cfg"))?;
        if !(lo <= hi) {
            return Err((
                DcStatus::InvalidArgument,
                format!("band [{lo}, {hi}] is not ordered"),
            ));
        }
        cfg.0.band = Some([lo, hi]);
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn dc_config_free(cfg: *mut DcStudyConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Runs a convergence study.
///
/// # Safety
/// `cfg` must be a live handle and `out` a valid pointer; the report is
/// released with [`dc_report_free`].
#[no_mangle]
pub unsafe extern "C" fn dc_study_run(
    cfg: *const DcStudyConfig,
    out: *mut *mut DcReport,
) -> DcStatus {
    guard(|| {
        let cfg = cfg.as_ref().ok_or_else(|| null("cfg"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let report = run_study(&cfg.0).map_err(study_err)?;
        *out = Box::into_raw(Box::new(DcReport(report)));
        Ok(())
    })
}

/// EOC between the two finest levels, or NaN for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dc_report_headline_eoc(report: *const DcReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.0.headline_eoc)
}

/// Whether the headline EOC lies in the accepted band.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dc_report_verdict(report: *const DcReport) -> bool {
    report.as_ref().is_some_and(|r| r.0.verdict)
}

/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dc_report_num_levels(report: *const DcReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.levels.len())
}

/// Copies level `index` (zero-based) into `out`.
///
/// # Safety
/// `report` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dc_report_level(
    report: *const DcReport,
    index: usize,
    out: *mut DcLevel,
) -> DcStatus {
    guard(|| {
        let r = &report.as_ref().ok_or_else(|| null("report"))?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let l = r.levels.get(index).ok_or_else(|| {
            (
                DcStatus::InvalidArgument,
                format!("level index {index} out of range 0..{}", r.levels.len()),
            )
        })?;
        *out = DcLevel {
            level: l.level,
            h: l.h,
            dofs: l.dofs,
            boundary_dofs: l.bdofs,
            error: l.error,
            eoc: if index == 0 {
                f64::NAN
            } else {
                r.eoc[index - 1]
            },
            iterations: l.iters,
        };
        Ok(())
    })
}

/// Serialises the report as JSON (`csv = false`) or CSV (`csv = true`).
///
/// # Safety
/// `report` must be a live handle and `out` a valid pointer; the string is
/// released with [`dc_string_free`].
#[no_mangle]
pub unsafe extern "C" fn dc_report_serialize(
    report: *const DcReport,
    csv: bool,
    out: *mut *mut c_char,
) -> DcStatus {
    guard(|| {
        let r = &report.as_ref().ok_or_else(|| null("report"))?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let text = if csv {
            report_csv(r)
        } else {
            report_json(r).map_err(study_err)?
        };
        let c = CString::new(text)
            .map_err(|_| (DcStatus::InvalidArgument, "interior NUL".to_string()))?;
        *out = c.into_raw();
        Ok(())
    })
}

/// # Safety
/// `report` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn dc_report_free(report: *mut DcReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn dc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
