//! C ABI over the `osmd` library.
//!
//! Every function returns an [`OsmdStatus`]; on failure a message describing
//! the error is available from [`osmd_last_error_message`] on the same
//! thread. Objects cross the boundary as opaque handles that the caller
//! releases with the matching `_free` function. Strings returned by the
//! library are released with [`osmd_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use osmd::analysis::tune_eta;
use osmd::graph::GraphSpec;
use osmd::mirror::{constrained_step, MirrorStepRequest};
use osmd::potentials::{Geometry, Potential};
use osmd::runner::{run_experiment, RunConfig};
use osmd::Error;

/// Result code of every exported function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OsmdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    Domain = 4,
    NotConverged = 5,
    Unsupported = 6,
    Config = 7,
    Io = 8,
    Parse = 9,
    BudgetExceeded = 10,
    Panic = 11,
}

/// A potential (negentropy, Tsallis, clipped ℓp).
pub struct OsmdPotential(Potential);

/// A directed feedback graph.
pub struct OsmdGraph(GraphSpec);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> OsmdStatus {
    match e {
        Error::Domain(_) => OsmdStatus::Domain,
        Error::InvalidInput(_)
        | Error::SignalMismatch(_)
        | Error::Exhausted { .. }
        | Error::ImpossibleObservation { .. } => OsmdStatus::InvalidInput,
        Error::NotConverged { .. } => OsmdStatus::NotConverged,
        Error::Unsupported(_) => OsmdStatus::Unsupported,
        Error::BudgetExceeded { .. } => OsmdStatus::BudgetExceeded,
        Error::Config(_) => OsmdStatus::Config,
        Error::AtRound { source, .. } => status_of(source),
        Error::Io { .. } => OsmdStatus::Io,
        Error::Json(_) | Error::Csv(_) | Error::Parse { .. } => OsmdStatus::Parse,
    }
}

struct Failure(OsmdStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

type Outcome = Result<(), Failure>;

/// Runs `body`, recording any error or panic for `osmd_last_error_message`.
fn guard(body: impl FnOnce() -> Outcome) -> OsmdStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_last_error("");
            OsmdStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(&format!("internal panic: {msg}"));
            OsmdStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(OsmdStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(OsmdStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn read_slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Output slot, checked before any work is done.
unsafe fn out_ref<'a, T>(out: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    out.as_mut().ok_or_else(|| null(what))
}

fn parse_error(e: serde_json::Error) -> Failure {
    Failure(OsmdStatus::Parse, e.to_string())
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call into the library on the
/// same thread.
#[no_mangle]
pub extern "C" fn osmd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn osmd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn osmd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a potential from JSON, e.g. `{"kind":"tsallis_half"}` or
/// `{"kind":"clipped_lp","p":1.5,"d":10}`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn osmd_potential_from_json(json: *const c_char, out: *mut *mut OsmdPotential) -> OsmdStatus {
    guard(|| {
        let slot = out_ref(out, "out")?;
        *slot = ptr::null_mut();
        let potential: Potential = serde_json::from_str(read_str(json, "json")?).map_err(parse_error)?;
        potential.validate()?;
        *slot = Box::into_raw(Box::new(OsmdPotential(potential)));
        Ok(())
    })
}

/// Releases a potential. Null is ignored.
///
/// # Safety
/// `potential` must come from `osmd_potential_from_json` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn osmd_potential_free(potential: *mut OsmdPotential) {
    if !potential.is_null() {
        drop(Box::from_raw(potential));
    }
}

/// `F(x)` for a point of length `len`.
///
/// # Safety
/// `potential` must be live; `x` must hold `len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn osmd_potential_value(
    potential: *const OsmdPotential,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> OsmdStatus {
    guard(|| {
        let slot = out_ref(out, "out")?;
        let f = potential.as_ref().ok_or_else(|| null("potential"))?;
        *slot = f.0.value(read_slice(x, len, "x")?)?;
        Ok(())
    })
}

/// Bregman divergence `D_F(x, y)`.
///
/// # Safety
/// `potential` must be live; `x` and `y` must hold `len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn osmd_potential_bregman(
    potential: *const OsmdPotential,
    x: *const f64,
    y: *const f64,
    len: usize,
    out: *mut f64,
) -> OsmdStatus {
    guard(|| {
        let slot = out_ref(out, "out")?;
        let f = potential.as_ref().ok_or_else(|| null("potential"))?;
        *slot = f.0.bregman(read_slice(x, len, "x")?, read_slice(y, len, "y")?)?;
        Ok(())
    })
}

unsafe fn step(
    potential: *const OsmdPotential,
    geometry: Geometry,
    x: *const f64,
    loss_estimate: *const f64,
    eta: f64,
    out: *mut f64,
) -> Outcome {
    let f = potential.as_ref().ok_or_else(|| null("potential"))?;
    let n = geometry.dim();
    let x = read_slice(x, n, "x")?;
    let e = read_slice(loss_estimate, n, "loss_estimate")?;
    if out.is_null() {
        return Err(null("out"));
    }
    let y = constrained_step(&MirrorStepRequest::new(&f.0, geometry, x, e, eta))?;
    std::slice::from_raw_parts_mut(out, n).copy_from_slice(&y);
    Ok(())
}

/// One mirror step on the probability simplex:
/// `out = argmin_y η⟨y, loss_estimate⟩ + D_F(y, x)` over `k` coordinates.
///
/// # Safety
/// `x`, `loss_estimate` and `out` must each hold `k` values.
#[no_mangle]
pub unsafe extern "C" fn osmd_mirror_step_simplex(
    potential: *const OsmdPotential,
    x: *const f64,
    loss_estimate: *const f64,
    k: usize,
    eta: f64,
    out: *mut f64,
) -> OsmdStatus {
    guard(|| step(potential, Geometry::Simplex { k }, x, loss_estimate, eta, out))
}

/// One mirror step on the unit ℓp ball in dimension `d`.
///
/// # Safety
/// `x`, `loss_estimate` and `out` must each hold `d` values.
#[no_mangle]
pub unsafe extern "C" fn osmd_mirror_step_ball(
    potential: *const OsmdPotential,
    p: f64,
    x: *const f64,
    loss_estimate: *const f64,
    d: usize,
    eta: f64,
    out: *mut f64,
) -> OsmdStatus {
    guard(|| step(potential, Geometry::LpBall { p, d }, x, loss_estimate, eta, out))
}

/// Learning rate `√(2·diam/(n·a))` and the implied regret bound.
///
/// # Safety
/// `eta_out` and `bound_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn osmd_tune_eta(
    diam: f64,
    a: f64,
    b: f64,
    n: usize,
    eta_out: *mut f64,
    bound_out: *mut f64,
) -> OsmdStatus {
    guard(|| {
        let (eta_slot, bound_slot) = (out_ref(eta_out, "eta_out")?, out_ref(bound_out, "bound_out")?);
        let t = tune_eta(diam, a, b, n)?;
        *eta_slot = t.eta;
        *bound_slot = t.implied_bound;
        Ok(())
    })
}

/// Parses an edge list (first line `k`, then 1-indexed `i j` pairs).
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn osmd_graph_from_edge_list(text: *const c_char, out: *mut *mut OsmdGraph) -> OsmdStatus {
    guard(|| {
        let slot = out_ref(out, "out")?;
        *slot = ptr::null_mut();
        let g = GraphSpec::parse_edge_list(read_str(text, "text")?)?;
        *slot = Box::into_raw(Box::new(OsmdGraph(g)));
        Ok(())
    })
}

/// Releases a graph. Null is ignored.
///
/// # Safety
/// `graph` must come from `osmd_graph_from_edge_list` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn osmd_graph_free(graph: *mut OsmdGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Independence number; `exact_out` is set to 0 when only a greedy lower
/// bound was computed (graphs above the exact-search size).
///
/// # Safety
/// `graph` must be live; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn osmd_graph_independence_number(
    graph: *const OsmdGraph,
    value_out: *mut usize,
    exact_out: *mut bool,
) -> OsmdStatus {
    guard(|| {
        let (value_slot, exact_slot) = (out_ref(value_out, "value_out")?, out_ref(exact_out, "exact_out")?);
        let g = graph.as_ref().ok_or_else(|| null("graph"))?;
        let ind = g.0.independence_number();
        *value_slot = ind.value;
        *exact_slot = ind.exact;
        Ok(())
    })
}

/// Whether every vertex observes itself or is observed by all others.
///
/// # Safety
/// `graph` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn osmd_graph_is_strongly_observable(graph: *const OsmdGraph, out: *mut bool) -> OsmdStatus {
    guard(|| {
        let slot = out_ref(out, "out")?;
        let g = graph.as_ref().ok_or_else(|| null("graph"))?;
        *slot = g.0.is_strongly_observable();
        Ok(())
    })
}

/// Runs an experiment from a JSON configuration (the same format as
/// `osmd run --config`), writing its outputs to disk, and returns the
/// summary as a JSON string to be released with `osmd_string_free`.
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `summary_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn osmd_run_config_json(
    config_json: *const c_char,
    workers: usize,
    summary_out: *mut *mut c_char,
) -> OsmdStatus {
    guard(|| {
        let slot = out_ref(summary_out, "summary_out")?;
        *slot = ptr::null_mut();
        let value: serde_json::Value = serde_json::from_str(read_str(config_json, "config_json")?).map_err(parse_error)?;
        let cfg = RunConfig::from_value(&value)?;
        let summary = run_experiment(&cfg, workers.max(1))?;
        let text = serde_json::to_string(&summary).map_err(parse_error)?;
        let c = CString::new(text).map_err(|e| Failure(OsmdStatus::Parse, e.to_string()))?;
        *slot = c.into_raw();
        Ok(())
    })
}
