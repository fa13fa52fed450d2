//! C interface to the pathwise solver.
//!
//! Paths and solutions are opaque heap handles released with their `_free`
//! function. Every fallible call returns a [`PwStatus`]; the message of the
//! last failure on the calling thread is available from
//! [`pw_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pathwise::{
    bridge_solution, construct_ce1, construct_ce2, make_uniform_grid, residual_sup, sample_brownian,
    solve_pathwise, solve_until, Ce1Branch, Ce2Variant, DriftSpec, Error, PathKind, ResidualOptions, RngSpec,
    SamplePath, Side, SolutionPath, SolveOptions, Start,
};

/// Outcome of a call. Values other than `PW_STATUS_OK` name the failing condition.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PwStatus {
    Ok = 0,
    Usage = 1,
    SingularPoint = 2,
    StepUnderflow = 3,
    SideViolation = 4,
    NonFinite = 5,
    DegenerateIncrement = 6,
    InvalidBranch = 7,
    JunctionMismatch = 8,
    Io = 9,
    Parse = 10,
    NullPointer = 11,
    Panic = 12,
}

/// Opaque sampled path (driver or solution values on a time grid).
pub struct PwPath(SamplePath);

/// Opaque solution: the path plus its construction record.
pub struct PwSolution(SolutionPath);

/// Integrator settings; fill with [`pw_solve_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PwSolveOptions {
    pub h_base: f64,
    pub max_refine_depth: u32,
    pub sing_guard: f64,
    pub pin_window: f64,
    pub pin_tol: f64,
    pub boot_floor: f64,
    pub step_growth_cap: f64,
}

impl From<SolveOptions> for PwSolveOptions {
    fn from(o: SolveOptions) -> Self {
        PwSolveOptions {
            h_base: o.h_base,
            max_refine_depth: o.max_refine_depth,
            sing_guard: o.sing_guard,
            pin_window: o.pin_window,
            pin_tol: o.pin_tol,
            boot_floor: o.boot_floor,
            step_growth_cap: o.step_growth_cap,
        }
    }
}

impl From<PwSolveOptions> for SolveOptions {
    fn from(o: PwSolveOptions) -> Self {
        SolveOptions {
            h_base: o.h_base,
            max_refine_depth: o.max_refine_depth,
            sing_guard: o.sing_guard,
            pin_window: o.pin_window,
            pin_tol: o.pin_tol,
            boot_floor: o.boot_floor,
            step_growth_cap: o.step_growth_cap,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

enum Failure {
    Lib(Error),
    Null(&'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn status_of(e: &Error) -> PwStatus {
    match e {
        Error::Usage(_) => PwStatus::Usage,
        Error::SingularPoint { .. } => PwStatus::SingularPoint,
        Error::StepUnderflow { .. } => PwStatus::StepUnderflow,
        Error::SideViolation { .. } => PwStatus::SideViolation,
        Error::NonFinite { .. } => PwStatus::NonFinite,
        Error::DegenerateIncrement { .. } => PwStatus::DegenerateIncrement,
        Error::InvalidBranch { .. } => PwStatus::InvalidBranch,
        Error::JunctionMismatch { .. } => PwStatus::JunctionMismatch,
        Error::Io(_) => PwStatus::Io,
        Error::Parse(_) => PwStatus::Parse,
    }
}

fn set_error(msg: String) {
    LAST_ERROR.with(|m| *m.borrow_mut() = msg);
}

/// Runs `f`, converting errors and panics into a status and recording the message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            PwStatus::Ok
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(format!("{}: {e}", e.name()));
            status_of(&e)
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("NullPointer: {what} is null"));
            PwStatus::NullPointer
        }
        Err(_) => {
            set_error("Panic: internal error".to_string());
            PwStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn options(opts: *const PwSolveOptions) -> SolveOptions {
    opts.as_ref().map_or_else(SolveOptions::default, |o| (*o).into())
}

fn side(code: i32) -> Result<Side, Failure> {
    match code {
        0 => Ok(Side::Above),
        1 => Ok(Side::Below),
        _ => Err(Error::Usage(format!("side must be 0 (above) or 1 (below), got {code}")).into()),
    }
}

unsafe fn drift(json: *const c_char) -> Result<DriftSpec, Failure> {
    if json.is_null() {
        return Err(Failure::Null("drift_json"));
    }
    let text = CStr::from_ptr(json)
        .to_str()
        .map_err(|_| Error::Parse("drift JSON is not UTF-8".into()))?;
    let spec: DriftSpec = serde_json::from_str(text).map_err(|e| Error::Parse(format!("drift JSON: {e}")))?;
    spec.validate()?;
    Ok(spec)
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn pw_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|m| {
        let m = m.borrow();
        if !buf.is_null() && len > 0 {
            let n = m.len().min(len - 1);
            ptr::copy_nonoverlapping(m.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        m.len()
    })
}

/// Stable name of a status code, as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pw_status_name(status: PwStatus) -> *const c_char {
    let s: &'static CStr = match status {
        PwStatus::Ok => c"Ok",
        PwStatus::Usage => c"Usage",
        PwStatus::SingularPoint => c"SingularPoint",
        PwStatus::StepUnderflow => c"StepUnderflow",
        PwStatus::SideViolation => c"SideViolation",
        PwStatus::NonFinite => c"NonFinite",
        PwStatus::DegenerateIncrement => c"DegenerateIncrement",
        PwStatus::InvalidBranch => c"InvalidBranch",
        PwStatus::JunctionMismatch => c"JunctionMismatch",
        PwStatus::Io => c"Io",
        PwStatus::Parse => c"Parse",
        PwStatus::NullPointer => c"NullPointer",
        PwStatus::Panic => c"Panic",
    };
    s.as_ptr()
}

#[no_mangle]
pub extern "C" fn pw_solve_options_default() -> PwSolveOptions {
    SolveOptions::default().into()
}

/// Brownian driver on `[0, horizon]` with `cells` uniform cells, drawn from
/// substream `(seed, stream)`.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn pw_path_brownian(
    horizon: f64,
    cells: usize,
    seed: u64,
    stream: u64,
    out: *mut *mut PwPath,
) -> PwStatus {
    guard(|| {
        let grid = make_uniform_grid(horizon, cells)?;
        store(out, PwPath(sample_brownian(&grid, RngSpec::new(seed, stream))))
    })
}

/// Driver path through the given nodes (strictly increasing times).
///
/// # Safety
/// `times` and `values` must point to `len` readable doubles; `out` must be
/// a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn pw_path_from_nodes(
    times: *const f64,
    values: *const f64,
    len: usize,
    out: *mut *mut PwPath,
) -> PwStatus {
    guard(|| {
        if times.is_null() || values.is_null() {
            return Err(Failure::Null("times/values"));
        }
        let t = std::slice::from_raw_parts(times, len).to_vec();
        let v = std::slice::from_raw_parts(values, len).to_vec();
        store(out, PwPath(SamplePath::from_nodes(t, v, PathKind::Driver)?))
    })
}

/// Number of nodes, 0 for a null handle.
///
/// # Safety
/// `path` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pw_path_len(path: *const PwPath) -> usize {
    path.as_ref().map_or(0, |p| p.0.len())
}

/// Copies up to `len` nodes into `times` and `values` (either may be null).
///
/// # Safety
/// `path` must be a live handle; non-null buffers must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pw_path_copy(path: *const PwPath, times: *mut f64, values: *mut f64, len: usize) -> PwStatus {
    guard(|| {
        let p = &deref(path, "path")?.0;
        let n = len.min(p.len());
        if !times.is_null() {
            ptr::copy_nonoverlapping(p.times().as_ptr(), times, n);
        }
        if !values.is_null() {
            ptr::copy_nonoverlapping(p.values().as_ptr(), values, n);
        }
        Ok(())
    })
}

/// Linear interpolation of the path at `t`.
///
/// # Safety
/// `path` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pw_path_eval(path: *const PwPath, t: f64, out: *mut f64) -> PwStatus {
    guard(|| {
        let v = deref(path, "path")?.0.eval(t)?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        *out = v;
        Ok(())
    })
}

/// # Safety
/// `path` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pw_path_free(path: *mut PwPath) {
    if !path.is_null() {
        drop(Box::from_raw(path));
    }
}

/// Solves the drift given as JSON (e.g. `{"variant":"bes3","center":0,"side":"above"}`)
/// on `[t0, t1]` from `x0`. `start_side` (0 above, 1 below) decides the side when
/// `x0` sits on a singular point. A finite `stop_level` stops at its first
/// crossing; pass NaN to run to `t1`. `opts` may be null for defaults.
///
/// # Safety
/// Pointers must be valid; `drift_json` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn pw_solve(
    drift_json: *const c_char,
    driver: *const PwPath,
    x0: f64,
    start_side: i32,
    t0: f64,
    t1: f64,
    stop_level: f64,
    opts: *const PwSolveOptions,
    out: *mut *mut PwSolution,
) -> PwStatus {
    guard(|| {
        let spec = drift(drift_json)?;
        let d = &deref(driver, "driver")?.0;
        let start = Start::new(x0, side(start_side)?);
        let o = options(opts);
        let sol = if stop_level.is_nan() {
            solve_pathwise(&spec, d, start, (t0, t1), &o)?
        } else {
            solve_until(&spec, d, start, (t0, t1), stop_level, &o)?
        };
        store(out, PwSolution(sol))
    })
}

/// Bridge solution on `[0, 1]` from 0 to `±y` (side 0 positive, 1 negative).
///
/// # Safety
/// Pointers must be valid; `opts` may be null.
#[no_mangle]
pub unsafe extern "C" fn pw_bridge(
    driver: *const PwPath,
    bridge_side: i32,
    y: f64,
    opts: *const PwSolveOptions,
    out: *mut *mut PwSolution,
) -> PwStatus {
    guard(|| {
        let d = &deref(driver, "driver")?.0;
        store(out, PwSolution(bridge_solution(side(bridge_side)?, y, d, &options(opts))?))
    })
}

/// `Ce1` solution on `[0, 3]`; `branch` 0 auto, 1 positive, 2 negative.
///
/// # Safety
/// Pointers must be valid; `opts` may be null.
#[no_mangle]
pub unsafe extern "C" fn pw_construct_ce1(
    driver: *const PwPath,
    branch: i32,
    opts: *const PwSolveOptions,
    out: *mut *mut PwSolution,
) -> PwStatus {
    guard(|| {
        let d = &deref(driver, "driver")?.0;
        let b = match branch {
            0 => Ce1Branch::Auto,
            1 => Ce1Branch::Positive,
            2 => Ce1Branch::Negative,
            _ => return Err(Error::Usage(format!("branch must be 0, 1 or 2, got {branch}")).into()),
        };
        store(out, PwSolution(construct_ce1(d, b, &options(opts))?))
    })
}

/// `Ce2` solution on `[0, 4]`; `variant` 0 weak, 1 alternative.
///
/// # Safety
/// Pointers must be valid; `opts` may be null.
#[no_mangle]
pub unsafe extern "C" fn pw_construct_ce2(
    driver: *const PwPath,
    variant: i32,
    opts: *const PwSolveOptions,
    out: *mut *mut PwSolution,
) -> PwStatus {
    guard(|| {
        let d = &deref(driver, "driver")?.0;
        let v = match variant {
            0 => Ce2Variant::Weak,
            1 => Ce2Variant::Alternative,
            _ => return Err(Error::Usage(format!("variant must be 0 or 1, got {variant}")).into()),
        };
        store(out, PwSolution(construct_ce2(d, v, &options(opts))?))
    })
}

/// New path handle holding a copy of the solution's nodes.
///
/// # Safety
/// `sol` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pw_solution_path(sol: *const PwSolution, out: *mut *mut PwPath) -> PwStatus {
    guard(|| {
        let s = deref(sol, "solution")?;
        store(out, PwPath(s.0.path.clone()))
    })
}

/// Writes the JSON sidecar (segments, hits, branch log, pins) into `buf`,
/// NUL-terminated and truncated to `len`; `*needed` receives the full length
/// without the NUL.
///
/// # Safety
/// `sol` must be a live handle; `buf` null or `len` writable bytes; `needed` valid.
#[no_mangle]
pub unsafe extern "C" fn pw_solution_sidecar_json(
    sol: *const PwSolution,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> PwStatus {
    guard(|| {
        let json = deref(sol, "solution")?.0.sidecar_json()?;
        if needed.is_null() {
            return Err(Failure::Null("needed"));
        }
        *needed = json.len();
        if !buf.is_null() && len > 0 {
            let n = json.len().min(len - 1);
            ptr::copy_nonoverlapping(json.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        Ok(())
    })
}

/// # Safety
/// `sol` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pw_solution_free(sol: *mut PwSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// Residual sup-norm of `candidate` for the JSON drift against `driver` on
/// `[t0, t1]`, with the quadrature settings derived from `opts` (null for
/// defaults).
///
/// # Safety
/// Pointers must be valid; `drift_json` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn pw_residual(
    drift_json: *const c_char,
    candidate: *const PwPath,
    driver: *const PwPath,
    t0: f64,
    t1: f64,
    opts: *const PwSolveOptions,
    out_sup: *mut f64,
) -> PwStatus {
    guard(|| {
        let spec = drift(drift_json)?;
        let c = &deref(candidate, "candidate")?.0;
        let d = &deref(driver, "driver")?.0;
        let r = residual_sup(&spec, c, d, (t0, t1), &ResidualOptions::from(&options(opts)))?;
        if out_sup.is_null() {
            return Err(Failure::Null("out_sup"));
        }
        *out_sup = r.sup;
        Ok(())
    })
}
