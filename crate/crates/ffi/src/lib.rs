//! C ABI over the simulator and optimizer.
//!
//! Handles are opaque and owned by the caller until passed to the matching
//! `*_free`. Every fallible call returns an [`MgStatus`]; on failure the
//! message is available from [`mg_last_error`] on the same thread.
//! Strings returned through out-pointers must be released with
//! [`mg_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use manetga::engine::{run, MetricsReport, SimOutcome};
use manetga::gaopt::{backup_paths, evaluate, evolve, route_demands, Chromosome, Evolution, LinkGraph};
use manetga::report;
use manetga::scenario::{parse_scenario, Scenario};

#[repr(C)]
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum MgStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    /// Scenario text rejected; the message names the line.
    Scenario = 3,
    /// Simulation or optimization failed.
    Simulation = 4,
    InvalidArgument = 5,
    /// A Rust panic was caught at the boundary.
    Internal = 6,
}

/// Parsed scenario.
pub struct MgScenario(Scenario);

/// Outcome of one simulation run.
pub struct MgReport(SimOutcome);

/// Optimized weights with routed primary and backup paths.
pub struct MgOptimizeResult {
    evo: Evolution,
    weights_csv: String,
    history_csv: String,
    paths_csv: String,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: MgStatus, msg: impl Into<String>) -> MgStatus {
    set_error(msg);
    status
}

/// Clears the error slot, runs `f`, and turns panics into `Internal`.
fn guard(f: impl FnOnce() -> MgStatus) -> MgStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(MgStatus::Internal, "panic in manetga"),
    }
}

fn out_string(s: &str, out: *mut *mut c_char) -> MgStatus {
    if out.is_null() {
        return fail(MgStatus::NullArgument, "null output pointer");
    }
    match CString::new(s) {
        Ok(c) => {
            // SAFETY: `out` checked non-null; caller guarantees it is writable.
            unsafe { *out = c.into_raw() };
            MgStatus::Ok
        }
        Err(_) => fail(MgStatus::Internal, "output contains a NUL byte"),
    }
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn mg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn mg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parse NUL-terminated scenario text.
///
/// # Safety
/// `text` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mg_scenario_parse(text: *const c_char, out: *mut *mut MgScenario) -> MgStatus {
    guard(|| {
        if text.is_null() || out.is_null() {
            return fail(MgStatus::NullArgument, "null argument");
        }
        let text = match CStr::from_ptr(text).to_str() {
            Ok(t) => t,
            Err(e) => return fail(MgStatus::InvalidUtf8, e.to_string()),
        };
        match parse_scenario(text) {
            Ok(sc) => {
                *out = Box::into_raw(Box::new(MgScenario(sc)));
                MgStatus::Ok
            }
            Err(e) => fail(MgStatus::Scenario, e.to_string()),
        }
    })
}

/// # Safety
/// `sc` must be null or a live handle from [`mg_scenario_parse`].
#[no_mangle]
pub unsafe extern "C" fn mg_scenario_free(sc: *mut MgScenario) {
    if !sc.is_null() {
        drop(Box::from_raw(sc));
    }
}

/// Override the simulation seed and the optimizer seed.
///
/// # Safety
/// `sc` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mg_scenario_set_seed(sc: *mut MgScenario, seed: u64) -> MgStatus {
    guard(|| match sc.as_mut() {
        Some(s) => {
            s.0.sim.seed = seed;
            s.0.ga.seed = seed;
            MgStatus::Ok
        }
        None => fail(MgStatus::NullArgument, "null scenario"),
    })
}

/// Switch all enabled defenses on or off.
///
/// # Safety
/// `sc` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mg_scenario_set_defense(sc: *mut MgScenario, enabled: bool) -> MgStatus {
    guard(|| match sc.as_mut() {
        Some(s) => {
            s.0.defense.enabled = enabled;
            MgStatus::Ok
        }
        None => fail(MgStatus::NullArgument, "null scenario"),
    })
}

/// Canonical text form of a scenario.
///
/// # Safety
/// `sc` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mg_scenario_render(sc: *const MgScenario, out: *mut *mut c_char) -> MgStatus {
    guard(|| match sc.as_ref() {
        Some(s) => out_string(&manetga::render(&s.0), out),
        None => fail(MgStatus::NullArgument, "null scenario"),
    })
}

/// Run the simulation.
///
/// # Safety
/// `sc` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mg_simulate(sc: *const MgScenario, out: *mut *mut MgReport) -> MgStatus {
    guard(|| {
        let (Some(s), false) = (sc.as_ref(), out.is_null()) else {
            return fail(MgStatus::NullArgument, "null argument");
        };
        match run(&s.0) {
            Ok(o) => {
                *out = Box::into_raw(Box::new(MgReport(o)));
                MgStatus::Ok
            }
            Err(e) => fail(MgStatus::Simulation, e.to_string()),
        }
    })
}

/// # Safety
/// `r` must be null or a live handle from [`mg_simulate`].
#[no_mangle]
pub unsafe extern "C" fn mg_report_free(r: *mut MgReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

unsafe fn metrics<'a>(r: *const MgReport) -> Option<&'a MetricsReport> {
    r.as_ref().map(|r| &r.0.report)
}

/// Delivered / (delivered + dropped); NaN for a null handle.
///
/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mg_report_delivery_ratio(r: *const MgReport) -> f64 {
    metrics(r).map_or(f64::NAN, MetricsReport::delivery_ratio)
}

/// Blacklist insertions over the run; 0 for a null handle.
///
/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mg_report_blacklist_events(r: *const MgReport) -> u64 {
    metrics(r).map_or(0, |m| m.blacklist_events)
}

/// # Safety
/// `r` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mg_report_summary_csv(r: *const MgReport, out: *mut *mut c_char) -> MgStatus {
    guard(|| match metrics(r) {
        Some(m) => out_string(&report::summary_csv(m), out),
        None => fail(MgStatus::NullArgument, "null report"),
    })
}

/// # Safety
/// `r` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mg_report_steps_csv(r: *const MgReport, out: *mut *mut c_char) -> MgStatus {
    guard(|| match metrics(r) {
        Some(m) => out_string(&report::steps_csv(m), out),
        None => fail(MgStatus::NullArgument, "null report"),
    })
}

/// # Safety
/// `r` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mg_report_events_log(r: *const MgReport, out: *mut *mut c_char) -> MgStatus {
    guard(|| match r.as_ref() {
        Some(r) => out_string(&report::events_log(&r.0.log), out),
        None => fail(MgStatus::NullArgument, "null report"),
    })
}

/// Optimize link weights over the scenario's initial topology.
///
/// # Safety
/// `sc` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mg_optimize(sc: *const MgScenario, out: *mut *mut MgOptimizeResult) -> MgStatus {
    guard(|| {
        let (Some(s), false) = (sc.as_ref(), out.is_null()) else {
            return fail(MgStatus::NullArgument, "null argument");
        };
        let sc = &s.0;
        if sc.commodities.is_empty() {
            return fail(MgStatus::InvalidArgument, "scenario has no demand records");
        }
        let graph = LinkGraph::from_topology(&sc.topology);
        let result = evolve(&graph, &sc.commodities, &sc.ga).and_then(|evo| {
            let routed = route_demands(&graph, &evo.best, &sc.commodities)?;
            let routed = backup_paths(&graph, &evo.best, &routed)?;
            Ok(MgOptimizeResult {
                weights_csv: report::weights_csv(&graph, &evo.best),
                history_csv: report::history_csv(&evo.history),
                paths_csv: report::paths_csv(&sc.commodities, &routed),
                evo,
            })
        });
        match result {
            Ok(r) => {
                *out = Box::into_raw(Box::new(r));
                MgStatus::Ok
            }
            Err(e) => fail(MgStatus::Simulation, e.to_string()),
        }
    })
}

/// # Safety
/// `r` must be null or a live handle from [`mg_optimize`].
#[no_mangle]
pub unsafe extern "C" fn mg_optimize_free(r: *mut MgOptimizeResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Best fitness found; NaN for a null handle.
///
/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mg_optimize_fitness(r: *const MgOptimizeResult) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.evo.best_breakdown.fitness)
}

/// Copy up to `cap` weights, in canonical link order, into `buf`.
/// Returns the total number of weights; call with `cap == 0` to size `buf`.
///
/// # Safety
/// `r` must be null or a live handle; `buf` must hold `cap` values.
#[no_mangle]
pub unsafe extern "C" fn mg_optimize_weights(r: *const MgOptimizeResult, buf: *mut u32, cap: usize) -> usize {
    let Some(r) = r.as_ref() else { return 0 };
    let w = &r.evo.best.weights;
    if !buf.is_null() {
        let n = w.len().min(cap);
        ptr::copy_nonoverlapping(w.as_ptr(), buf, n);
    }
    w.len()
}

/// # Safety
/// `r` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mg_optimize_weights_csv(r: *const MgOptimizeResult, out: *mut *mut c_char) -> MgStatus {
    guard(|| match r.as_ref() {
        Some(r) => out_string(&r.weights_csv, out),
        None => fail(MgStatus::NullArgument, "null result"),
    })
}

/// # Safety
/// `r` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mg_optimize_history_csv(r: *const MgOptimizeResult, out: *mut *mut c_char) -> MgStatus {
    guard(|| match r.as_ref() {
        Some(r) => out_string(&r.history_csv, out),
        None => fail(MgStatus::NullArgument, "null result"),
    })
}

/// # Safety
/// `r` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mg_optimize_paths_csv(r: *const MgOptimizeResult, out: *mut *mut c_char) -> MgStatus {
    guard(|| match r.as_ref() {
        Some(r) => out_string(&r.paths_csv, out),
        None => fail(MgStatus::NullArgument, "null result"),
    })
}

/// Fitness of a caller-supplied weight vector, one weight per link in
/// canonical order. Weights must be at least 1.
///
/// # Safety
/// `sc` must be a live handle; `weights` must hold `len` values;
/// `fitness` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mg_evaluate_weights(
    sc: *const MgScenario,
    weights: *const u32,
    len: usize,
    fitness: *mut f64,
) -> MgStatus {
    guard(|| {
        let (Some(s), false, false) = (sc.as_ref(), weights.is_null() && len > 0, fitness.is_null()) else {
            return fail(MgStatus::NullArgument, "null argument");
        };
        let w = if len == 0 { &[][..] } else { std::slice::from_raw_parts(weights, len) };
        if w.contains(&0) {
            return fail(MgStatus::InvalidArgument, "link weights must be at least 1");
        }
        let graph = LinkGraph::from_topology(&s.0.topology);
        let chrom = Chromosome { weights: w.to_vec() };
        match evaluate(&graph, &chrom, &s.0.commodities, &s.0.ga) {
            Ok(b) => {
                *fitness = b.fitness;
                MgStatus::Ok
            }
            Err(e) => fail(MgStatus::InvalidArgument, e.to_string()),
        }
    })
}
