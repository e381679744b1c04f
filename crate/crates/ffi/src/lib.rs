//! C ABI over the compact-coding simulator.
//!
//! Every function returns a [`CcqStatus`]. On failure the message is kept
//! per thread and read with [`ccq_last_error`]. Handles are opaque and must
//! be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use compact_coding::harness::output::{write_csv, write_json};
use compact_coding::harness::{run_trials, with_param, ExperimentConfig, MetricsRow};
use compact_coding::Error;

/// Status codes returned by every `ccq_` function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CcqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Runtime = 4,
    OutOfRange = 5,
    Panic = 6,
}

/// Protocol family of a result row.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CcqProtocol {
    ThreeStage = 0,
    SingleStage = 1,
}

/// Opaque experiment configuration.
pub struct CcqConfig(ExperimentConfig);

/// Opaque set of per-trial result rows.
pub struct CcqResults(Vec<MetricsRow>);

/// Numeric view of one result row.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CcqRow {
    pub trial_id: usize,
    pub protocol: CcqProtocol,
    pub symbols_sent: usize,
    pub ber_total: f64,
    pub ber_intensity: f64,
    pub ber_time: f64,
    pub ber_phase: f64,
    pub erasure_rate: f64,
    pub bits_per_pulse: f64,
    pub eve_detected: bool,
    pub aborted: bool,
    pub mean_photons_at_bob: f64,
    pub seed: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = CString::new(msg.into().replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
}

fn fail(status: CcqStatus, msg: impl Into<String>) -> CcqStatus {
    set_error(msg);
    status
}

fn from_core(err: Error) -> CcqStatus {
    let status = match err {
        Error::Config(_) => CcqStatus::Config,
        _ => CcqStatus::Runtime,
    };
    fail(status, err.to_string())
}

/// Runs `f`, clearing the last error first and turning panics into
/// [`CcqStatus::Panic`].
fn guard(f: impl FnOnce() -> CcqStatus) -> CcqStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(CcqStatus::Panic, "panic inside compact-coding"))
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, CcqStatus> {
    if p.is_null() {
        return Err(fail(CcqStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(CcqStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

fn null(name: &str) -> CcqStatus {
    fail(CcqStatus::NullPointer, format!("{name} is null"))
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next `ccq_` call on the same thread.
#[no_mangle]
pub extern "C" fn ccq_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ccq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Default configuration.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn ccq_config_default(out: *mut *mut CcqConfig) -> CcqStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        *out = Box::into_raw(Box::new(CcqConfig(ExperimentConfig::default())));
        CcqStatus::Ok
    })
}

/// Parses a TOML configuration document.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ccq_config_from_toml(toml: *const c_char, out: *mut *mut CcqConfig) -> CcqStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        let text = match str_arg(toml, "toml") {
            Ok(t) => t,
            Err(s) => return s,
        };
        match ExperimentConfig::from_toml_str(text) {
            Ok(cfg) => {
                *out = Box::into_raw(Box::new(CcqConfig(cfg)));
                CcqStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// Releases a configuration. Null is accepted.
///
/// # Safety
/// `cfg` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ccq_config_free(cfg: *mut CcqConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Sets the master seed.
///
/// # Safety
/// `cfg` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn ccq_config_set_seed(cfg: *mut CcqConfig, seed: u64) -> CcqStatus {
    guard(|| match cfg.as_mut() {
        Some(c) => {
            c.0.master_seed = seed;
            CcqStatus::Ok
        }
        None => null("cfg"),
    })
}

/// Sets the number of trials.
///
/// # Safety
/// `cfg` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn ccq_config_set_trials(cfg: *mut CcqConfig, trials: usize) -> CcqStatus {
    guard(|| match cfg.as_mut() {
        Some(c) => {
            c.0.trials = trials;
            CcqStatus::Ok
        }
        None => null("cfg"),
    })
}

/// Sets a numeric field by dotted path, e.g. `channel.eta`.
///
/// # Safety
/// `cfg` must be a live configuration handle and `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ccq_config_set_param(cfg: *mut CcqConfig, path: *const c_char, value: f64) -> CcqStatus {
    guard(|| {
        let Some(c) = cfg.as_mut() else { return null("cfg") };
        let path = match str_arg(path, "path") {
            Ok(p) => p,
            Err(s) => return s,
        };
        match with_param(&c.0, path, value) {
            Ok(next) => {
                c.0 = next;
                CcqStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// Checks the configuration without running it.
///
/// # Safety
/// `cfg` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn ccq_config_validate(cfg: *const CcqConfig) -> CcqStatus {
    guard(|| match cfg.as_ref() {
        Some(c) => c.0.validate().map_or_else(from_core, |_| CcqStatus::Ok),
        None => null("cfg"),
    })
}

/// Runs all trials of the configuration.
///
/// # Safety
/// `cfg` must be a live configuration handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ccq_run(cfg: *const CcqConfig, out: *mut *mut CcqResults) -> CcqStatus {
    guard(|| {
        let Some(c) = cfg.as_ref() else { return null("cfg") };
        if out.is_null() {
            return null("out");
        }
        let rows = match c.0.validate().and_then(|exp| run_trials(&exp)) {
            Ok(rows) => rows,
            Err(e) => return from_core(e),
        };
        *out = Box::into_raw(Box::new(CcqResults(rows)));
        CcqStatus::Ok
    })
}

/// Releases a result set. Null is accepted.
///
/// # Safety
/// `res` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ccq_results_free(res: *mut CcqResults) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}

/// Number of rows in a result set; 0 for null.
///
/// # Safety
/// `res` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn ccq_results_len(res: *const CcqResults) -> usize {
    res.as_ref().map_or(0, |r| r.0.len())
}

/// Copies row `index` into `out`.
///
/// # Safety
/// `res` must be a live result handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ccq_results_row(res: *const CcqResults, index: usize, out: *mut CcqRow) -> CcqStatus {
    guard(|| {
        let Some(r) = res.as_ref() else { return null("res") };
        if out.is_null() {
            return null("out");
        }
        let Some(row) = r.0.get(index) else {
            return fail(CcqStatus::OutOfRange, format!("row {index} of {}", r.0.len()));
        };
        *out = CcqRow {
            trial_id: row.trial_id,
            protocol: if row.protocol == "single_stage" { CcqProtocol::SingleStage } else { CcqProtocol::ThreeStage },
            symbols_sent: row.symbols_sent,
            ber_total: row.ber_total,
            ber_intensity: row.ber_intensity,
            ber_time: row.ber_time,
            ber_phase: row.ber_phase,
            erasure_rate: row.erasure_rate,
            bits_per_pulse: row.bits_per_pulse,
            eve_detected: row.eve_detected,
            aborted: row.aborted,
            mean_photons_at_bob: row.mean_photons_at_bob,
            seed: row.seed,
        };
        CcqStatus::Ok
    })
}

unsafe fn render(
    res: *const CcqResults,
    out: *mut *mut c_char,
    write: fn(&[MetricsRow], &mut Vec<u8>) -> compact_coding::Result<()>,
) -> CcqStatus {
    guard(|| {
        let Some(r) = res.as_ref() else { return null("res") };
        if out.is_null() {
            return null("out");
        }
        let mut buf = Vec::new();
        if let Err(e) = write(&r.0, &mut buf) {
            return from_core(e);
        }
        match CString::new(buf) {
            Ok(s) => {
                *out = s.into_raw();
                CcqStatus::Ok
            }
            Err(_) => fail(CcqStatus::Runtime, "output contains a NUL byte"),
        }
    })
}

/// Renders the rows as CSV. Release the string with [`ccq_string_free`].
///
/// # Safety
/// `res` must be a live result handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ccq_results_to_csv(res: *const CcqResults, out: *mut *mut c_char) -> CcqStatus {
    render(res, out, |rows, buf| write_csv(rows, buf))
}

/// Renders the rows as JSON. Release the string with [`ccq_string_free`].
///
/// # Safety
/// `res` must be a live result handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ccq_results_to_json(res: *const CcqResults, out: *mut *mut c_char) -> CcqStatus {
    render(res, out, |rows, buf| write_json(rows, buf))
}

/// Releases a string returned by this library. Null is accepted.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ccq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
