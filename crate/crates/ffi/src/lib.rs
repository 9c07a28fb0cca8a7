//! C ABI for the `kymh` solver and obstruction calculator.
//!
//! Every function returns a [`KymhStatus`] (or a null handle) and records a
//! message retrievable with [`kymh_last_error`] on the calling thread. Strings
//! returned through `char **` are owned by the library and must be released
//! with [`kymh_string_free`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use kymh::cli::{execute, parse_config};
use kymh::fields::HiggsConfig;
use kymh::geometry::{build_grid, AxisymGrid, ConformalMetric};
use kymh::newton::NewtonOptions;
use kymh::obstructions::{futaki_closed_form, futaki_quadrature, stability_check, FutakiInput};
use kymh::vortex::solve_vortex;
use kymh::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KymhStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Infeasible = 3,
    Obstructed = 4,
    NotConverged = 5,
    BufferTooSmall = 6,
    Utf8 = 7,
    Panic = 8,
}

/// Opaque collocation grid.
pub struct KymhGrid {
    grid: AxisymGrid,
}

/// Outcome of a Newton solve.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct KymhSolveSummary {
    pub converged: bool,
    pub iterations: usize,
    pub residual_sup: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &Error) -> KymhStatus {
    match err {
        Error::Infeasible(_) => KymhStatus::Infeasible,
        Error::Obstructed(_) => KymhStatus::Obstructed,
        _ => KymhStatus::InvalidArgument,
    }
}

fn fail(status: KymhStatus, msg: impl Into<String>) -> KymhStatus {
    set_error(msg);
    status
}

fn from_error(err: Error) -> KymhStatus {
    let s = status_of(&err);
    fail(s, err.to_string())
}

/// Runs `body`, converting panics into [`KymhStatus::Panic`].
fn guard(body: impl FnOnce() -> KymhStatus) -> KymhStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(s) => s,
        Err(_) => fail(KymhStatus::Panic, "internal panic"),
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, KymhStatus> {
    if p.is_null() {
        return Err(fail(KymhStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(KymhStatus::Utf8, "string is not valid UTF-8"))
}

unsafe fn write_string(out: *mut *mut c_char, text: String) -> KymhStatus {
    match CString::new(text) {
        Ok(c) => {
            *out = c.into_raw();
            KymhStatus::Ok
        }
        Err(_) => fail(KymhStatus::Utf8, "output contains a NUL byte"),
    }
}

unsafe fn rank2_config(
    degrees: *const u32,
    exponents: *const u32,
    tau: f64,
    alpha: f64,
) -> Result<HiggsConfig, KymhStatus> {
    if degrees.is_null() || exponents.is_null() {
        return Err(fail(KymhStatus::NullPointer, "null degrees or exponents"));
    }
    let d = [*degrees, *degrees.add(1)];
    let e = [*exponents, *exponents.add(1)];
    HiggsConfig::rank2(d, e, tau, alpha).map_err(from_error)
}

/// Message of the last failure on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn kymh_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn kymh_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be null or a string returned by this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn kymh_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds an `n`-node grid (`n` odd); null on failure.
#[no_mangle]
pub extern "C" fn kymh_grid_new(n: usize) -> *mut KymhGrid {
    let mut handle = ptr::null_mut();
    guard(|| match build_grid(n) {
        Ok(grid) => {
            handle = Box::into_raw(Box::new(KymhGrid { grid }));
            KymhStatus::Ok
        }
        Err(e) => from_error(e),
    });
    handle
}

/// # Safety
/// `grid` must be null or a handle from [`kymh_grid_new`], freed at most once.
#[no_mangle]
pub unsafe extern "C" fn kymh_grid_free(grid: *mut KymhGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Number of nodes, or 0 for a null handle.
///
/// # Safety
/// `grid` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kymh_grid_len(grid: *const KymhGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.grid.n())
}

/// Copies the nodes `s_k` into `out[0..len]`; `len` must equal the grid size.
///
/// # Safety
/// `grid` must be a live handle and `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn kymh_grid_nodes(grid: *const KymhGrid, out: *mut f64, len: usize) -> KymhStatus {
    guard(|| {
        let Some(g) = grid.as_ref() else {
            return fail(KymhStatus::NullPointer, "null grid");
        };
        if out.is_null() {
            return fail(KymhStatus::NullPointer, "null output buffer");
        }
        if len != g.grid.n() {
            return fail(KymhStatus::BufferTooSmall, format!("buffer needs {} entries", g.grid.n()));
        }
        ptr::copy_nonoverlapping(g.grid.nodes().as_ptr(), out, len);
        KymhStatus::Ok
    })
}

/// Imaginary part of the Futaki character of the split rank-2 configuration.
///
/// # Safety
/// `degrees` and `exponents` must point to two values each; `out` to one double.
#[no_mangle]
pub unsafe extern "C" fn kymh_futaki_closed_form(
    degrees: *const u32,
    exponents: *const u32,
    tau: f64,
    alpha: f64,
    out: *mut f64,
) -> KymhStatus {
    guard(|| {
        if out.is_null() {
            return fail(KymhStatus::NullPointer, "null output");
        }
        let cfg = match rank2_config(degrees, exponents, tau, alpha) {
            Ok(c) => c,
            Err(s) => return s,
        };
        match futaki_closed_form(&cfg) {
            Ok(v) => {
                *out = v;
                KymhStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Quadrature of the Futaki character at the round metric and Fubini–Study bundle metric.
///
/// # Safety
/// As [`kymh_futaki_closed_form`], plus `grid` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn kymh_futaki_quadrature(
    grid: *const KymhGrid,
    degrees: *const u32,
    exponents: *const u32,
    tau: f64,
    alpha: f64,
    out: *mut f64,
) -> KymhStatus {
    guard(|| {
        let Some(g) = grid.as_ref() else {
            return fail(KymhStatus::NullPointer, "null grid");
        };
        if out.is_null() {
            return fail(KymhStatus::NullPointer, "null output");
        }
        let cfg = match rank2_config(degrees, exponents, tau, alpha) {
            Ok(c) => c,
            Err(s) => return s,
        };
        let input = FutakiInput {
            config: cfg,
            metric: ConformalMetric::round(&g.grid),
            v: vec![g.grid.constant(0.0); 2],
        };
        match futaki_quadrature(&g.grid, &input) {
            Ok(v) => {
                *out = v;
                KymhStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Solves the abelian vortex equation on the round sphere. The potential `v`
/// goes to `v_out[0..len]` (`len` = grid size); `summary` may be null.
/// Returns [`KymhStatus::NotConverged`] with the last iterate written when
/// Newton fails.
///
/// # Safety
/// `grid` must be a live handle, `v_out` must hold `len` doubles, and
/// `summary` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn kymh_solve_vortex(
    grid: *const KymhGrid,
    degree: u32,
    exponent: u32,
    tau: f64,
    tolerance: f64,
    max_iter: usize,
    v_out: *mut f64,
    len: usize,
    summary: *mut KymhSolveSummary,
) -> KymhStatus {
    guard(|| {
        let Some(g) = grid.as_ref() else {
            return fail(KymhStatus::NullPointer, "null grid");
        };
        if v_out.is_null() {
            return fail(KymhStatus::NullPointer, "null output buffer");
        }
        if len != g.grid.n() {
            return fail(KymhStatus::BufferTooSmall, format!("buffer needs {} entries", g.grid.n()));
        }
        let opts = NewtonOptions { tolerance, max_iter };
        if let Err(e) = opts.validate() {
            return from_error(e);
        }
        let cfg = match HiggsConfig::abelian(degree, exponent, tau, 0.0) {
            Ok(c) => c,
            Err(e) => return from_error(e),
        };
        let metric = ConformalMetric::round(&g.grid);
        match solve_vortex(&g.grid, &metric, &cfg, &opts) {
            Ok((h, report)) => {
                ptr::copy_nonoverlapping(h.v[0].as_ptr(), v_out, len);
                if let Some(s) = summary.as_mut() {
                    *s = KymhSolveSummary {
                        converged: report.converged,
                        iterations: report.iterations,
                        residual_sup: report.residual_sup,
                    };
                }
                if report.converged {
                    KymhStatus::Ok
                } else {
                    fail(
                        KymhStatus::NotConverged,
                        report.failure.unwrap_or_else(|| "Newton did not converge".into()),
                    )
                }
            }
            Err(e) => from_error(e),
        }
    })
}

/// Stability report for a Higgs configuration given as JSON
/// (`{"degrees": [...], "exponents": [...], "tau": ..., "alpha": ...}`).
///
/// # Safety
/// `config_json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kymh_stability_json(config_json: *const c_char, out: *mut *mut c_char) -> KymhStatus {
    guard(|| {
        if out.is_null() {
            return fail(KymhStatus::NullPointer, "null output");
        }
        let text = match read_str(config_json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let cfg: HiggsConfig = match serde_json::from_str(text) {
            Ok(c) => c,
            Err(e) => return fail(KymhStatus::InvalidArgument, e.to_string()),
        };
        match stability_check(&cfg).and_then(|r| {
            serde_json::to_string(&r).map_err(|e| Error::InvalidInput(e.to_string()))
        }) {
            Ok(json) => write_string(out, json),
            Err(e) => from_error(e),
        }
    })
}

/// Runs a full CLI configuration in memory and returns the JSON report and
/// the process exit code the command-line tool would use. No files are written.
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `report_out` and
/// `exit_code` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kymh_run_json(
    config_json: *const c_char,
    override_obstruction: bool,
    report_out: *mut *mut c_char,
    exit_code: *mut c_int,
) -> KymhStatus {
    guard(|| {
        if report_out.is_null() || exit_code.is_null() {
            return fail(KymhStatus::NullPointer, "null output");
        }
        let text = match read_str(config_json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let cfg = match parse_config(text) {
            Ok(c) => c,
            Err(problems) => {
                *exit_code = kymh::cli::EXIT_USAGE;
                return fail(KymhStatus::InvalidArgument, problems.join("; "));
            }
        };
        let outcome = execute(&cfg, override_obstruction);
        *exit_code = outcome.exit_code();
        match serde_json::to_string(&outcome.report) {
            Ok(json) => write_string(report_out, json),
            Err(e) => fail(KymhStatus::InvalidArgument, e.to_string()),
        }
    })
}
