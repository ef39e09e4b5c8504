//! C ABI for the wmorrey toolkit.
//!
//! Handles are opaque pointers created and freed by this library. Functions
//! that can fail return an `i32` status (`WM_OK` on success) or a null
//! pointer; the message behind the most recent failure on the current
//! thread is available via `wm_last_error_message`. JSON strings cross the
//! boundary for structured inputs (weights, Young functions, full run
//! configs), matching the schemas the CLI consumes.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::sync::Arc;

use wmorrey::config::RunConfig;
use wmorrey::lattice::{integrate, Ball, BallFamily, Grid, Region, SampledFunction};
use wmorrey::orlicz::{luxemburg_norm, YoungFunction};
use wmorrey::runner::{run_verification, RunOptions};
use wmorrey::spaces::{bmo_norm, lp_norm, morrey_norm, weak_lp_norm, weak_morrey_norm};
use wmorrey::weights::{ap_characteristic, ap_stability, Weight};
use wmorrey::Error;

pub const WM_OK: i32 = 0;
pub const WM_ERR_RUNTIME: i32 = 1;
pub const WM_ERR_INVALID: i32 = 2;
pub const WM_ERR_COST_GUARD: i32 = 3;
pub const WM_ERR_DEGENERATE: i32 = 4;
pub const WM_ERR_NULL_ARGUMENT: i32 = 5;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let stored = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(stored));
}

fn code_for(err: &Error) -> i32 {
    match err {
        Error::CostGuard { .. } => WM_ERR_COST_GUARD,
        Error::DegenerateCorpus => WM_ERR_DEGENERATE,
        Error::InvalidConfig(_)
        | Error::InvalidArgument(_)
        | Error::InvalidExponent(_)
        | Error::WeightSingular { .. }
        | Error::GridMismatch(_)
        | Error::Json(_) => WM_ERR_INVALID,
        _ => WM_ERR_RUNTIME,
    }
}

fn fail(err: Error) -> i32 {
    let code = code_for(&err);
    set_error(&err.to_string());
    code
}

fn null_arg(name: &str) -> i32 {
    set_error(&format!("null argument: {name}"));
    WM_ERR_NULL_ARGUMENT
}

unsafe fn read_str<'a>(ptr: *const c_char) -> Option<&'a str> {
    if ptr.is_null() {
        set_error("null string argument");
        return None;
    }
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Some(s),
        Err(_) => {
            set_error("string argument is not valid UTF-8");
            None
        }
    }
}

/// Opaque lattice handle.
pub struct WmGrid(Arc<Grid>);
/// Opaque sampled-function handle.
pub struct WmFunction(SampledFunction);
/// Opaque weight handle.
pub struct WmWeight(Weight);
/// Opaque ball-family handle.
pub struct WmFamily(BallFamily);

/// Message behind the most recent failure on this thread, or null. Free the
/// returned string with `wm_string_free`.
#[no_mangle]
pub extern "C" fn wm_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|slot| match &*slot.borrow() {
        Some(msg) => msg.clone().into_raw(),
        None => std::ptr::null_mut(),
    })
}

/// Frees a string allocated by this library.
///
/// # Safety
/// `s` must have been returned by a `wm_*` function and not freed before.
#[no_mangle]
pub unsafe extern "C" fn wm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Creates an offset lattice over `[-half_extent, half_extent]^n`;
/// `half_extent / spacing` must be a power of two. Null on error.
#[no_mangle]
pub extern "C" fn wm_grid_new(n: u32, half_extent: f64, spacing: f64) -> *mut WmGrid {
    match Grid::new(n as usize, half_extent, spacing) {
        Ok(grid) => Box::into_raw(Box::new(WmGrid(Arc::new(grid)))),
        Err(err) => {
            fail(err);
            std::ptr::null_mut()
        }
    }
}

/// # Safety
/// `grid` must be a live handle from `wm_grid_new`.
#[no_mangle]
pub unsafe extern "C" fn wm_grid_free(grid: *mut WmGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Sample count of the grid, 0 for null.
///
/// # Safety
/// `grid` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wm_grid_sample_count(grid: *const WmGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.sample_count())
}

/// Builds a function from one value per lattice sample (canonical index
/// order). Null on length mismatch or non-finite values.
///
/// # Safety
/// `grid` must be a live handle; `values` must point to `len` readable
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn wm_function_new(
    grid: *const WmGrid,
    values: *const f64,
    len: usize,
) -> *mut WmFunction {
    let Some(grid) = grid.as_ref() else {
        null_arg("grid");
        return std::ptr::null_mut();
    };
    if values.is_null() {
        null_arg("values");
        return std::ptr::null_mut();
    }
    let slice = std::slice::from_raw_parts(values, len);
    match SampledFunction::new(grid.0.clone(), slice.to_vec()) {
        Ok(f) => Box::into_raw(Box::new(WmFunction(f))),
        Err(err) => {
            fail(err);
            std::ptr::null_mut()
        }
    }
}

/// # Safety
/// `f` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn wm_function_free(f: *mut WmFunction) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// # Safety
/// `f` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wm_function_len(f: *const WmFunction) -> usize {
    f.as_ref().map_or(0, |f| f.0.values().len())
}

/// Value at a sample index; NaN when out of range.
///
/// # Safety
/// `f` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wm_function_value(f: *const WmFunction, index: usize) -> f64 {
    f.as_ref()
        .and_then(|f| f.0.values().get(index).copied())
        .unwrap_or(f64::NAN)
}

/// Writes `<base>.json` and `<base>.f64` (8-byte little-endian floats).
///
/// # Safety
/// `f`, `name`, and `base_path` must be live/valid.
#[no_mangle]
pub unsafe extern "C" fn wm_function_export(
    f: *const WmFunction,
    name: *const c_char,
    base_path: *const c_char,
) -> i32 {
    let Some(f) = f.as_ref() else { return null_arg("function") };
    let (Some(name), Some(base)) = (read_str(name), read_str(base_path)) else {
        return WM_ERR_NULL_ARGUMENT;
    };
    match wmorrey::io::export_function(Path::new(base), name, &f.0) {
        Ok(()) => WM_OK,
        Err(err) => fail(err),
    }
}

/// Reads a `<base>.json` / `<base>.f64` pair. Null on error.
///
/// # Safety
/// `base_path` must be a valid C string.
#[no_mangle]
pub unsafe extern "C" fn wm_function_import(base_path: *const c_char) -> *mut WmFunction {
    let Some(base) = read_str(base_path) else {
        return std::ptr::null_mut();
    };
    match wmorrey::io::import_function(Path::new(base)) {
        Ok((_, f)) => Box::into_raw(Box::new(WmFunction(f))),
        Err(err) => {
            fail(err);
            std::ptr::null_mut()
        }
    }
}

/// Parses a weight from its JSON form, e.g.
/// `{"kind":"power","c":1.0,"terms":[{"anchor":[0.0,0.0],"alpha":0.5}]}`.
///
/// # Safety
/// `json` must be a valid C string.
#[no_mangle]
pub unsafe extern "C" fn wm_weight_from_json(json: *const c_char) -> *mut WmWeight {
    let Some(json) = read_str(json) else {
        return std::ptr::null_mut();
    };
    match serde_json::from_str::<Weight>(json) {
        Ok(w) => Box::into_raw(Box::new(WmWeight(w))),
        Err(err) => {
            set_error(&err.to_string());
            std::ptr::null_mut()
        }
    }
}

/// # Safety
/// `w` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn wm_weight_free(w: *mut WmWeight) {
    if !w.is_null() {
        drop(Box::from_raw(w));
    }
}

/// Samples a weight on a grid; null when the weight is singular on a sample.
///
/// # Safety
/// `w` and `grid` must be live handles.
#[no_mangle]
pub unsafe extern "C" fn wm_weight_sample(w: *const WmWeight, grid: *const WmGrid) -> *mut WmFunction {
    let (Some(w), Some(grid)) = (w.as_ref(), grid.as_ref()) else {
        null_arg("weight/grid");
        return std::ptr::null_mut();
    };
    match w.0.sample(&grid.0) {
        Ok(f) => Box::into_raw(Box::new(WmFunction(f))),
        Err(err) => {
            fail(err);
            std::ptr::null_mut()
        }
    }
}

/// Dyadic ball family over a center sublattice of the given stride.
///
/// # Safety
/// `grid` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn wm_family_dyadic(grid: *const WmGrid, stride: usize) -> *mut WmFamily {
    let Some(grid) = grid.as_ref() else {
        null_arg("grid");
        return std::ptr::null_mut();
    };
    Box::into_raw(Box::new(WmFamily(BallFamily::dyadic(&grid.0, stride))))
}

/// Origin-centered dyadic ladder only.
///
/// # Safety
/// `grid` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn wm_family_origin(grid: *const WmGrid) -> *mut WmFamily {
    let Some(grid) = grid.as_ref() else {
        null_arg("grid");
        return std::ptr::null_mut();
    };
    Box::into_raw(Box::new(WmFamily(BallFamily::origin_dyadic(&grid.0))))
}

/// # Safety
/// `fam` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn wm_family_free(fam: *mut WmFamily) {
    if !fam.is_null() {
        drop(Box::from_raw(fam));
    }
}

/// # Safety
/// `fam` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wm_family_len(fam: *const WmFamily) -> usize {
    fam.as_ref().map_or(0, |f| f.0.len())
}

/// Midpoint-rule integral over the open ball with center `(cx, cy)` and
/// radius `r` (pass `cy = 0` in one dimension).
///
/// # Safety
/// `f` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wm_integrate_ball(
    f: *const WmFunction,
    cx: f64,
    cy: f64,
    r: f64,
    out: *mut f64,
) -> i32 {
    let Some(f) = f.as_ref() else { return null_arg("function") };
    if out.is_null() {
        return null_arg("out");
    }
    let ball = Ball { center: [cx, cy], radius: r };
    match integrate(&f.0, Region::Ball(&ball)) {
        Ok(v) => {
            *out = v;
            WM_OK
        }
        Err(err) => fail(err),
    }
}

/// Integral over the whole cube.
///
/// # Safety
/// `f` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wm_integrate_domain(f: *const WmFunction, out: *mut f64) -> i32 {
    let Some(f) = f.as_ref() else { return null_arg("function") };
    if out.is_null() {
        return null_arg("out");
    }
    match integrate(&f.0, Region::Domain) {
        Ok(v) => {
            *out = v;
            WM_OK
        }
        Err(err) => fail(err),
    }
}

unsafe fn opt_weight_fn<'a>(w: *const WmFunction) -> Option<&'a SampledFunction> {
    w.as_ref().map(|w| &w.0)
}

/// `(int |f|^p w)^{1/p}` over the cube; `w` may be null for Lebesgue.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wm_lp_norm(
    f: *const WmFunction,
    w: *const WmFunction,
    p: f64,
    out: *mut f64,
) -> i32 {
    let Some(f) = f.as_ref() else { return null_arg("function") };
    if out.is_null() {
        return null_arg("out");
    }
    match lp_norm(&f.0, opt_weight_fn(w), p) {
        Ok(v) => {
            *out = v;
            WM_OK
        }
        Err(err) => fail(err),
    }
}

/// Weak norm `sup_lambda lambda w({|f| > lambda})^{1/p}`.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wm_weak_lp_norm(
    f: *const WmFunction,
    w: *const WmFunction,
    p: f64,
    out: *mut f64,
) -> i32 {
    let Some(f) = f.as_ref() else { return null_arg("function") };
    if out.is_null() {
        return null_arg("out");
    }
    match weak_lp_norm(&f.0, opt_weight_fn(w), p) {
        Ok(v) => {
            *out = v;
            WM_OK
        }
        Err(err) => fail(err),
    }
}

/// Morrey norm over the family: `max_F (w(B)^{-kappa} int_B |f|^p w)^{1/p}`.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wm_morrey_norm(
    f: *const WmFunction,
    w: *const WmFunction,
    p: f64,
    kappa: f64,
    family: *const WmFamily,
    out: *mut f64,
) -> i32 {
    let (Some(f), Some(family)) = (f.as_ref(), family.as_ref()) else {
        return null_arg("function/family");
    };
    if out.is_null() {
        return null_arg("out");
    }
    match morrey_norm(&f.0, opt_weight_fn(w), p, kappa, &family.0) {
        Ok(v) => {
            *out = v;
            WM_OK
        }
        Err(err) => fail(err),
    }
}

/// Weak Morrey norm over the family.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wm_weak_morrey_norm(
    f: *const WmFunction,
    w: *const WmFunction,
    p: f64,
    kappa: f64,
    family: *const WmFamily,
    out: *mut f64,
) -> i32 {
    let (Some(f), Some(family)) = (f.as_ref(), family.as_ref()) else {
        return null_arg("function/family");
    };
    if out.is_null() {
        return null_arg("out");
    }
    match weak_morrey_norm(&f.0, opt_weight_fn(w), p, kappa, &family.0) {
        Ok(v) => {
            *out = v;
            WM_OK
        }
        Err(err) => fail(err),
    }
}

/// Max mean oscillation over the family.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wm_bmo_norm(
    f: *const WmFunction,
    family: *const WmFamily,
    out: *mut f64,
) -> i32 {
    let (Some(f), Some(family)) = (f.as_ref(), family.as_ref()) else {
        return null_arg("function/family");
    };
    if out.is_null() {
        return null_arg("out");
    }
    match bmo_norm(&f.0, &family.0) {
        Ok(v) => {
            *out = v.norm;
            WM_OK
        }
        Err(err) => fail(err),
    }
}

/// Luxemburg norm on the ball `B((cx, cy), r)` for a Young function given
/// in JSON, e.g. `{"kind":"phi"}` or `{"kind":"power","p":2.0}`; `w` may be
/// null for the Lebesgue average.
///
/// # Safety
/// Handles must be live, strings valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wm_luxemburg_norm(
    f: *const WmFunction,
    young_json: *const c_char,
    cx: f64,
    cy: f64,
    r: f64,
    w: *const WmFunction,
    out: *mut f64,
) -> i32 {
    let Some(f) = f.as_ref() else { return null_arg("function") };
    let Some(young) = read_str(young_json) else {
        return WM_ERR_NULL_ARGUMENT;
    };
    if out.is_null() {
        return null_arg("out");
    }
    let young: YoungFunction = match serde_json::from_str(young) {
        Ok(y) => y,
        Err(err) => {
            set_error(&err.to_string());
            return WM_ERR_INVALID;
        }
    };
    let ball = Ball { center: [cx, cy], radius: r };
    match luxemburg_norm(&f.0, &young, &ball, opt_weight_fn(w)) {
        Ok(v) => {
            *out = v;
            WM_OK
        }
        Err(err) => fail(err),
    }
}

/// A_p characteristic of a weight over the family (A_1 form at p = 1).
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wm_ap_characteristic(
    w: *const WmWeight,
    p: f64,
    grid: *const WmGrid,
    family: *const WmFamily,
    out: *mut f64,
) -> i32 {
    let (Some(w), Some(grid), Some(family)) = (w.as_ref(), grid.as_ref(), family.as_ref()) else {
        return null_arg("weight/grid/family");
    };
    if out.is_null() {
        return null_arg("out");
    }
    match ap_characteristic(&w.0, p, &grid.0, &family.0) {
        Ok(v) => {
            *out = v;
            WM_OK
        }
        Err(err) => fail(err),
    }
}

/// Stability probe of an A_p characteristic on the origin ladder:
/// `out_value` gets the base characteristic, `out_stable` 1 or 0.
///
/// # Safety
/// Handles must be live; out pointers writable.
#[no_mangle]
pub unsafe extern "C" fn wm_ap_stability(
    w: *const WmWeight,
    p: f64,
    grid: *const WmGrid,
    out_value: *mut f64,
    out_stable: *mut i32,
) -> i32 {
    let (Some(w), Some(grid)) = (w.as_ref(), grid.as_ref()) else {
        return null_arg("weight/grid");
    };
    if out_value.is_null() || out_stable.is_null() {
        return null_arg("out");
    }
    match ap_stability(&w.0, p, &grid.0) {
        Ok(report) => {
            *out_value = report.base_value();
            *out_stable = report.stable as i32;
            WM_OK
        }
        Err(err) => fail(err),
    }
}

/// Runs a full verification config (same JSON schema as the CLI) and
/// returns the report as a JSON string; null on error. Free the result with
/// `wm_string_free`.
///
/// # Safety
/// `config_json` must be a valid C string.
#[no_mangle]
pub unsafe extern "C" fn wm_run_verification(config_json: *const c_char) -> *mut c_char {
    let Some(text) = read_str(config_json) else {
        return std::ptr::null_mut();
    };
    let run = || -> wmorrey::Result<String> {
        let cfg = RunConfig::from_json(text)?;
        let report = run_verification(&cfg, RunOptions::default())?;
        Ok(serde_json::to_string(&report)?)
    };
    match run() {
        Ok(json) => CString::new(json).map_or(std::ptr::null_mut(), CString::into_raw),
        Err(err) => {
            fail(err);
            std::ptr::null_mut()
        }
    }
}
