//! C ABI over `pwt_core`.
//!
//! Handles are opaque and owned by the caller, who releases them with the
//! matching `*_free`. Every fallible call returns a `PwtStatus`; on failure
//! `pwt_last_error_message` describes the most recent error on the calling
//! thread.

use pwt_core::cli::commands::solve;
use pwt_core::cli::config::{Command, RunConfig};
use pwt_core::error::Error;
use pwt_core::pwt::classify_pwt;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

/// Result codes of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PwtStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Malformed configuration, invalid arguments or unreadable files.
    InvalidInput = 2,
    /// A numerical method failed to converge or met a pathological profile.
    Numerical = 3,
    /// The caller's buffer is too small.
    BufferTooSmall = 4,
    /// An internal panic was caught at the boundary.
    Panic = 5,
}

/// A parsed run configuration.
pub struct PwtConfig {
    cfg: RunConfig,
}

/// A computed spectrum.
pub struct PwtSpectrum {
    lambdas: Vec<f64>,
    energies: Vec<f64>,
    v0: f64,
}

/// Outcome of the perfect-wave-transfer test.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PwtVerdict {
    /// 1 if the model transfers perfectly, 0 otherwise.
    pub is_pwt: i32,
    /// Transfer time; NaN unless `is_pwt`.
    pub period: f64,
    /// Offset c of the labelling m_n = n + c.
    pub c_shift: i64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> PwtStatus {
    if e.is_numerical() {
        PwtStatus::Numerical
    } else {
        PwtStatus::InvalidInput
    }
}

/// Run `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (PwtStatus, String)>) -> PwtStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PwtStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(p) => {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            set_error(format!("internal panic: {}", msg.unwrap_or_default()));
            PwtStatus::Panic
        }
    }
}

fn core(e: Error) -> (PwtStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(name: &str) -> (PwtStatus, String) {
    (PwtStatus::NullPointer, format!("{name} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, (PwtStatus, String)> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (PwtStatus::InvalidInput, format!("{name} is not valid UTF-8")))
}

/// Message of the last error on this thread, or null if the last call
/// succeeded. Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn pwt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pwt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parse a TOML run configuration. Relative paths resolve against the
/// working directory.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pwt_config_from_toml(toml: *const c_char, out: *mut *mut PwtConfig) -> PwtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = RunConfig::parse(str_arg(toml, "toml")?).map_err(core)?;
        *out = Box::into_raw(Box::new(PwtConfig { cfg }));
        Ok(())
    })
}

/// Load a TOML run configuration from a file. Relative paths inside it
/// resolve against the file's directory.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pwt_config_load(path: *const c_char, out: *mut *mut PwtConfig) -> PwtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = RunConfig::load(std::path::Path::new(str_arg(path, "path")?)).map_err(core)?;
        *out = Box::into_raw(Box::new(PwtConfig { cfg }));
        Ok(())
    })
}

/// Release a configuration. Null is ignored.
///
/// # Safety
/// `cfg` must come from `pwt_config_*` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pwt_config_free(cfg: *mut PwtConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Solve for the lowest `n_max + 1` eigenvalues of the configured model.
///
/// # Safety
/// `cfg` must be a live configuration and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pwt_solve(cfg: *const PwtConfig, n_max: usize, out: *mut *mut PwtSpectrum) -> PwtStatus {
    guard(|| {
        let cfg = cfg.as_ref().ok_or_else(|| null("cfg"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        cfg.cfg.validate().map_err(core)?;
        let s = solve(&cfg.cfg, n_max, false).map_err(core)?;
        let spec = PwtSpectrum { lambdas: s.spectrum.lambdas, energies: s.spectrum.energies, v0: s.v0 };
        *out = Box::into_raw(Box::new(spec));
        Ok(())
    })
}

/// Number of levels held by a spectrum (0 for null).
///
/// # Safety
/// `s` must be null or a live spectrum.
#[no_mangle]
pub unsafe extern "C" fn pwt_spectrum_len(s: *const PwtSpectrum) -> usize {
    s.as_ref().map_or(0, |s| s.energies.len())
}

/// Conformal velocity v0 of the solved model (NaN for null).
///
/// # Safety
/// `s` must be null or a live spectrum.
#[no_mangle]
pub unsafe extern "C" fn pwt_spectrum_v0(s: *const PwtSpectrum) -> f64 {
    s.as_ref().map_or(f64::NAN, |s| s.v0)
}

unsafe fn copy_out(s: *const PwtSpectrum, buf: *mut f64, len: usize, pick: fn(&PwtSpectrum) -> &[f64]) -> PwtStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("spectrum"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let src = pick(s);
        if len < src.len() {
            return Err((PwtStatus::BufferTooSmall, format!("buffer holds {len} values, {} needed", src.len())));
        }
        std::ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
        Ok(())
    })
}

/// Copy the energies E_n = sqrt(lambda_n) into `buf`, which must hold
/// `pwt_spectrum_len` values.
///
/// # Safety
/// `s` must be a live spectrum and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn pwt_spectrum_energies(s: *const PwtSpectrum, buf: *mut f64, len: usize) -> PwtStatus {
    copy_out(s, buf, len, |s| &s.energies)
}

/// Copy the eigenvalues lambda_n into `buf`, which must hold
/// `pwt_spectrum_len` values.
///
/// # Safety
/// `s` must be a live spectrum and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn pwt_spectrum_lambdas(s: *const PwtSpectrum, buf: *mut f64, len: usize) -> PwtStatus {
    copy_out(s, buf, len, |s| &s.lambdas)
}

/// Release a spectrum. Null is ignored.
///
/// # Safety
/// `s` must come from `pwt_solve` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pwt_spectrum_free(s: *mut PwtSpectrum) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Decide perfect wave transfer for the configured model using
/// `numeric.n_max`, `numeric.eps_spec` and `numeric.eps_parity`.
///
/// # Safety
/// `cfg` must be a live configuration and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pwt_check(cfg: *const PwtConfig, out: *mut PwtVerdict) -> PwtStatus {
    guard(|| {
        let c = &cfg.as_ref().ok_or_else(|| null("cfg"))?.cfg;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        c.validate().map_err(core)?;
        let s = solve(c, c.numeric.n_max, true).map_err(core)?;
        let modes = s.modes.as_deref().unwrap_or_default();
        let v = classify_pwt(&s.model, &s.spectrum, modes, c.numeric.eps_spec, c.numeric.eps_parity).map_err(core)?;
        *out = PwtVerdict { is_pwt: v.is_pwt as i32, period: v.t.unwrap_or(f64::NAN), c_shift: v.c_shift };
        Ok(())
    })
}

/// Run a pipeline and write its artifacts. `command` (for example
/// "check-pwt") and `out_dir` may be null to keep the configured values.
///
/// # Safety
/// `cfg` must be a live configuration; string arguments must be null or
/// NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn pwt_run(cfg: *const PwtConfig, command: *const c_char, out_dir: *const c_char) -> PwtStatus {
    guard(|| {
        let mut c = cfg.as_ref().ok_or_else(|| null("cfg"))?.cfg.clone();
        if !command.is_null() {
            let name = str_arg(command, "command")?;
            let cmd = Command::from_name(name).ok_or_else(|| (PwtStatus::InvalidInput, format!("unknown command {name:?}")))?;
            c.command = Some(cmd);
        }
        if !out_dir.is_null() {
            c.output.dir = PathBuf::from(str_arg(out_dir, "out_dir")?);
        }
        pwt_core::cli::run(&c).map_err(core)?;
        Ok(())
    })
}
