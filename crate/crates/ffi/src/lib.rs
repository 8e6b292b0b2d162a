//! C ABI over the skewstab library.
//!
//! Systems are opaque handles. Every fallible function returns a
//! [`SkewStatus`]; on failure the message is available from
//! [`skewstab_last_error`] until the next call on the same thread. Strings
//! returned through out-parameters are owned by the caller and released with
//! [`skewstab_string_free`].

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use skewstab::classify::classify;
use skewstab::config::RunConfig;
use skewstab::custom::CustomSystem;
use skewstab::error::Error;
use skewstab::gallery;
use skewstab::semiflow::{Semiflow, StatePoint};
use skewstab::system::System;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkewStatus {
    Ok = 0,
    NullPointer = 1,
    TimeOrder = 2,
    NonFinite = 3,
    Dimension = 4,
    InvalidParams = 5,
    Convergence = 6,
    InvalidUtf8 = 7,
    Internal = 99,
}

/// Opaque handle to a built system.
pub struct SkewSystem {
    inner: System,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> SkewStatus {
    match e {
        Error::TimeOrderViolation { .. } | Error::NegativeTime(_) => SkewStatus::TimeOrder,
        Error::NonFinite { .. } => SkewStatus::NonFinite,
        Error::DimensionMismatch { .. } => SkewStatus::Dimension,
        Error::ConvergenceFailure { .. } | Error::BudgetExceeded { .. } => SkewStatus::Convergence,
        Error::InvalidParams(_)
        | Error::InvalidState(_)
        | Error::InvalidGauge(_)
        | Error::Config(_)
        | Error::DegenerateProbe { .. }
        | Error::MissingGrowthEnvelope => SkewStatus::InvalidParams,
    }
}

struct Failure(SkewStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SkewStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SkewStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SkewStatus::Internal
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(SkewStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(SkewStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn system<'a>(h: *const SkewSystem) -> Result<&'a System, Failure> {
    h.as_ref().map(|s| &s.inner).ok_or_else(|| null("system"))
}

unsafe fn vector<'a>(sys: &System, v: *const f64, len: usize) -> Result<&'a [f64], Failure> {
    if v.is_null() {
        return Err(null("vector"));
    }
    if len != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            found: len,
        }
        .into());
    }
    Ok(std::slice::from_raw_parts(v, len))
}

fn state(sys: &System, x: f64) -> StatePoint {
    match sys.semiflow {
        Semiflow::Shift => StatePoint::Shift(x),
        Semiflow::Translation => StatePoint::Real(x),
    }
}

fn json_error(e: serde_json::Error) -> Failure {
    Failure(SkewStatus::InvalidParams, format!("bad JSON: {e}"))
}

fn hand_out(sys: System, out: *mut *mut SkewSystem) {
    unsafe { *out = Box::into_raw(Box::new(SkewSystem { inner: sys })) };
}

/// Builds a gallery system. `params_json` is a JSON object of parameter
/// overrides, or null for the defaults.
///
/// # Safety
/// `name` must be a NUL-terminated string, `params_json` null or
/// NUL-terminated, and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn skewstab_system_new(
    name: *const c_char,
    params_json: *const c_char,
    out: *mut *mut SkewSystem,
) -> SkewStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let name = text(name, "name")?;
        let params: BTreeMap<String, f64> = if params_json.is_null() {
            BTreeMap::new()
        } else {
            serde_json::from_str(text(params_json, "params_json")?).map_err(json_error)?
        };
        hand_out(gallery::build(name, &params)?, out);
        Ok(())
    })
}

/// Builds a declarative diagonal system from its JSON description.
///
/// # Safety
/// `json` must be NUL-terminated and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn skewstab_custom_system_new(
    json: *const c_char,
    out: *mut *mut SkewSystem,
) -> SkewStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let spec: CustomSystem =
            serde_json::from_str(text(json, "json")?).map_err(json_error)?;
        hand_out(spec.build()?, out);
        Ok(())
    })
}

/// Releases a system. Null is ignored.
///
/// # Safety
/// `sys` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn skewstab_system_free(sys: *mut SkewSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// # Safety
/// `sys` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn skewstab_system_dimension(
    sys: *const SkewSystem,
    out: *mut usize,
) -> SkewStatus {
    guard(|| {
        let sys = system(sys)?;
        out.as_mut().ok_or_else(|| null("out"))?.clone_from(&sys.dim());
        Ok(())
    })
}

/// Writes `Phi(t, s, x) v` to `out`. `x` is the state's shift parameter or
/// point, depending on the system's semiflow; `v` and `out` hold `len`
/// doubles.
///
/// # Safety
/// Pointers must be valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn skewstab_apply_cocycle(
    sys: *const SkewSystem,
    t: f64,
    s: f64,
    x: f64,
    v: *const f64,
    len: usize,
    out: *mut f64,
) -> SkewStatus {
    guard(|| {
        let sys = system(sys)?;
        let v = vector(sys, v, len)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let w = sys.apply_cocycle(t, s, &state(sys, x), v)?;
        ptr::copy_nonoverlapping(w.as_ptr(), out, len);
        Ok(())
    })
}

/// Writes `Phi(t, s, x)^T v` to `out`.
///
/// # Safety
/// Pointers must be valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn skewstab_apply_adjoint(
    sys: *const SkewSystem,
    t: f64,
    s: f64,
    x: f64,
    v: *const f64,
    len: usize,
    out: *mut f64,
) -> SkewStatus {
    guard(|| {
        let sys = system(sys)?;
        let v = vector(sys, v, len)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let w = sys.apply_adjoint(t, s, &state(sys, x), v)?;
        ptr::copy_nonoverlapping(w.as_ptr(), out, len);
        Ok(())
    })
}

/// Induced norm of `Phi(t, s, x)` in the system's norm.
///
/// # Safety
/// `sys` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn skewstab_operator_norm(
    sys: *const SkewSystem,
    t: f64,
    s: f64,
    x: f64,
    out: *mut f64,
) -> SkewStatus {
    guard(|| {
        let sys = system(sys)?;
        let n = sys.operator_norm(t, s, &state(sys, x))?;
        *out.as_mut().ok_or_else(|| null("out"))? = n;
        Ok(())
    })
}

/// New handle for the system with cocycle `e^{-alpha (t-s)} Phi(t, s, x)`.
///
/// # Safety
/// `sys` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn skewstab_shift_cocycle(
    sys: *const SkewSystem,
    alpha: f64,
    out: *mut *mut SkewSystem,
) -> SkewStatus {
    guard(|| {
        let sys = system(sys)?;
        if out.is_null() {
            return Err(null("out"));
        }
        if !alpha.is_finite() {
            return Err(Error::non_finite("shift").into());
        }
        hand_out(sys.shift_cocycle(alpha), out);
        Ok(())
    })
}

/// Runs both criterion panels and writes the JSON report to `out`.
/// `config_json` takes the same keys as a CLI config file; null means
/// defaults. `exit_code`, when not null, receives the CLI exit code the
/// report implies.
///
/// # Safety
/// `sys` must be a live handle, `config_json` null or NUL-terminated, `out`
/// valid, and `exit_code` null or valid.
#[no_mangle]
pub unsafe extern "C" fn skewstab_classify_json(
    sys: *const SkewSystem,
    config_json: *const c_char,
    out: *mut *mut c_char,
    exit_code: *mut i32,
) -> SkewStatus {
    guard(|| {
        let sys = system(sys)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let rc: RunConfig = if config_json.is_null() {
            RunConfig::default()
        } else {
            serde_json::from_str(text(config_json, "config_json")?).map_err(json_error)?
        };
        let report = classify(sys, &rc.panel_config()?)?;
        if let Some(code) = exit_code.as_mut() {
            *code = report.exit_code();
        }
        let s = CString::new(report.to_json())
            .map_err(|_| Failure(SkewStatus::Internal, "report contains NUL".into()))?;
        *out = s.into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn skewstab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread, or null.
#[no_mangle]
pub extern "C" fn skewstab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn skewstab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
