//! C interface to `trotterprof`.
//!
//! Every fallible call returns a [`TpStatus`]; on failure the message is
//! available from [`tp_last_error`] on the same thread. Handles are opaque
//! and must be released with their `_free` function. An experiment handle
//! may be shared between threads for concurrent reads.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use trotterprof::config::{parse_config, ConfigDocument};
use trotterprof::error::Error;
use trotterprof::experiments::{slope_fit, ErrorCurve, Experiment, Method};

pub const TP_METHOD_TROTTER: u32 = 0;
pub const TP_METHOD_EP: u32 = 1;
pub const TP_METHOD_MPF: u32 = 2;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ConfigError = 3,
    NumericalError = 4,
    IoError = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Opaque experiment handle.
pub struct TpExperiment(Experiment);

/// Opaque error-curve handle.
pub struct TpErrorCurve(ErrorCurve);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TpCurvePoint {
    pub t: f64,
    pub a_or_steps: f64,
    pub estimate: f64,
    pub exact: f64,
    pub abs_error: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("interior NULs were replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> TpStatus {
    match e {
        Error::Config(_) => TpStatus::ConfigError,
        Error::Io(_) => TpStatus::IoError,
        Error::InvalidInput(_)
        | Error::UnknownFormula(_)
        | Error::InvalidVariant(_)
        | Error::DimensionMismatch { .. }
        | Error::IndexOutOfRange { .. }
        | Error::FragmentCount { .. }
        | Error::DuplicateGrid(_) => TpStatus::InvalidArgument,
        _ => TpStatus::NumericalError,
    }
}

struct Fail(TpStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(TpStatus::NullPointer, format!("`{what}` is null"))
}

/// Runs `f`, recording any error or panic as the thread's last error.
fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> TpStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TpStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            TpStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Fail(TpStatus::InvalidArgument, format!("`{what}` is not UTF-8")))
}

fn method(m: u32) -> Result<Method, Fail> {
    match m {
        TP_METHOD_TROTTER => Ok(Method::Trotter),
        TP_METHOD_EP => Ok(Method::Ep),
        TP_METHOD_MPF => Ok(Method::Mpf),
        _ => Err(Fail(
            TpStatus::InvalidArgument,
            format!("unknown method code {m}"),
        )),
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn tp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

unsafe fn build(
    cfg: Result<trotterprof::experiments::ExperimentConfig, Error>,
    out: *mut *mut TpExperiment,
) -> Result<(), Fail> {
    let exp = Experiment::new(cfg?)?;
    *out = Box::into_raw(Box::new(TpExperiment(exp)));
    Ok(())
}

/// Builds an experiment from a preset name such as `"tfim-ruth3"`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn tp_experiment_from_preset(
    name: *const c_char,
    out: *mut *mut TpExperiment,
) -> TpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let name = read_str(name, "name")?;
        build(
            ConfigDocument::preset(name).and_then(|d| d.to_config()),
            out,
        )
    })
}

/// Builds an experiment from TOML document text.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn tp_experiment_from_config(
    toml: *const c_char,
    out: *mut *mut TpExperiment,
) -> TpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let text = read_str(toml, "toml")?;
        build(parse_config(text), out)
    })
}

/// # Safety
/// `exp` must be null or a handle from this library that was not freed yet.
#[no_mangle]
pub unsafe extern "C" fn tp_experiment_free(exp: *mut TpExperiment) {
    if !exp.is_null() {
        drop(Box::from_raw(exp));
    }
}

/// Error curve over the configured times for one `TP_METHOD_*`.
///
/// # Safety
/// `exp` must be a live experiment handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn tp_experiment_run_error_curve(
    exp: *const TpExperiment,
    method_code: u32,
    out: *mut *mut TpErrorCurve,
) -> TpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let exp = exp.as_ref().ok_or_else(|| null("exp"))?;
        let curve = exp.0.run_error_curve(method(method_code)?)?;
        *out = Box::into_raw(Box::new(TpErrorCurve(curve)));
        Ok(())
    })
}

/// Mitigated expectation value at time `t`.
///
/// # Safety
/// `exp` must be a live experiment handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn tp_experiment_mitigated_estimate(
    exp: *const TpExperiment,
    t: f64,
    out: *mut f64,
) -> TpStatus {
    guard(|| {
        let exp = exp.as_ref().ok_or_else(|| null("exp"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = exp.0.mitigated_estimate(t)?.0;
        Ok(())
    })
}

/// Exact expectation value at time `t`.
///
/// # Safety
/// `exp` must be a live experiment handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn tp_experiment_exact_value(
    exp: *const TpExperiment,
    t: f64,
    out: *mut f64,
) -> TpStatus {
    guard(|| {
        let exp = exp.as_ref().ok_or_else(|| null("exp"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = exp.0.exact_value(t)?;
        Ok(())
    })
}

/// Copies the multi-product weights into `buf`. `len` always receives the
/// number of weights; a short buffer yields `BufferTooSmall` and is left
/// untouched.
///
/// # Safety
/// `exp` must be a live experiment handle, `len` writable and `buf` valid
/// for `cap` doubles (it may be null when `cap` is 0).
#[no_mangle]
pub unsafe extern "C" fn tp_experiment_mpf_weights(
    exp: *const TpExperiment,
    buf: *mut f64,
    cap: usize,
    len: *mut usize,
) -> TpStatus {
    guard(|| {
        let exp = exp.as_ref().ok_or_else(|| null("exp"))?;
        let len = len.as_mut().ok_or_else(|| null("len"))?;
        let w = exp.0.mpf_weights().weights();
        *len = w.len();
        if cap < w.len() {
            return Err(Fail(
                TpStatus::BufferTooSmall,
                format!("need room for {} weights, got {cap}", w.len()),
            ));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        ptr::copy_nonoverlapping(w.as_ptr(), buf, w.len());
        Ok(())
    })
}

/// # Safety
/// `curve` must be null or a live curve handle.
#[no_mangle]
pub unsafe extern "C" fn tp_curve_len(curve: *const TpErrorCurve) -> usize {
    curve.as_ref().map_or(0, |c| c.0.points.len())
}

/// # Safety
/// `curve` must be a live curve handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn tp_curve_point(
    curve: *const TpErrorCurve,
    index: usize,
    out: *mut TpCurvePoint,
) -> TpStatus {
    guard(|| {
        let curve = curve.as_ref().ok_or_else(|| null("curve"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let p = curve.0.points.get(index).ok_or_else(|| {
            Fail(
                TpStatus::InvalidArgument,
                format!("index {index} is past the {} points", curve.0.points.len()),
            )
        })?;
        *out = TpCurvePoint {
            t: p.t,
            a_or_steps: p.a_or_steps,
            estimate: p.estimate,
            exact: p.exact,
            abs_error: p.abs_error,
        };
        Ok(())
    })
}

/// Log-log slope of the curve's error over `[t_min, t_max]`.
///
/// # Safety
/// `curve` must be a live curve handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn tp_curve_slope(
    curve: *const TpErrorCurve,
    t_min: f64,
    t_max: f64,
    out: *mut f64,
) -> TpStatus {
    guard(|| {
        let curve = curve.as_ref().ok_or_else(|| null("curve"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = slope_fit(&curve.0, (t_min, t_max))?;
        Ok(())
    })
}

/// # Safety
/// `curve` must be null or a handle from this library that was not freed yet.
#[no_mangle]
pub unsafe extern "C" fn tp_curve_free(curve: *mut TpErrorCurve) {
    if !curve.is_null() {
        drop(Box::from_raw(curve));
    }
}

/// Step count at which extrapolation reaches the profiling limit, as the
/// fraction `num / den`.
///
/// # Safety
/// `num` and `den` must be writable pointers.
#[no_mangle]
pub unsafe extern "C" fn tp_critical_n(
    alpha: u32,
    symmetric: bool,
    num: *mut i64,
    den: *mut i64,
) -> TpStatus {
    guard(|| {
        let num = num.as_mut().ok_or_else(|| null("num"))?;
        let den = den.as_mut().ok_or_else(|| null("den"))?;
        let r = trotterprof::mpf::critical_n(alpha, symmetric)?;
        *num = *r.numer();
        *den = *r.denom();
        Ok(())
    })
}
