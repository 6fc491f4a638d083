//! C ABI for embedding the simulator, monitor, and oracle.
//!
//! Conventions: functions returning pointers yield null on failure;
//! functions returning `HmStatus` yield `HM_STATUS_OK` on success. In either
//! failure case `hm_last_error_message` describes the problem for the
//! calling thread. Strings produced by this library are released with
//! `hm_string_free`, traces with `hm_trace_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Duration;

use hlcmon::hlc::{advance_local, advance_receive, HlcTimestamp};
use hlcmon::monitor::{monitor_reports, MonitorWindowing};
use hlcmon::oracle::{find_valid_snapshot_in_window, OracleLimits};
use hlcmon::predicate::parse_predicate_spec;
use hlcmon::report::{read_reports, trace_to_reports, write_reports, ReportMessage, WindowData};
use hlcmon::scenario::parse_scenario;
use hlcmon::sim::{run as simulate, ScenarioConfig};
use hlcmon::smt::{EncoderConfig, SolverConfig};

/// Result codes for fallible entry points.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HmStatus {
    Ok = 0,
    InvalidArgument = 1,
    Io = 2,
    Parse = 3,
    Simulation = 4,
    Monitor = 5,
    Oracle = 6,
    Panicked = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: impl AsRef<str>) {
    let sanitized = message.as_ref().replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap();
    });
}

fn guard<T>(fallback: T, body: impl FnOnce() -> T) -> T {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(value) => value,
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic in hlcmon".to_string());
            set_error(message);
            fallback
        }
    }
}

/// An instrumentation trace held as its report stream.
pub struct HmTrace {
    reports: Vec<ReportMessage>,
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn hm_version() -> *const c_char {
    concat!("hlcmon ", env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message for the most recent failure on this thread. Valid until the next
/// failing call from the same thread.
#[no_mangle]
pub extern "C" fn hm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

unsafe fn cstr<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, String> {
    if ptr.is_null() {
        return Err(format!("{what} is null"));
    }
    unsafe { CStr::from_ptr(ptr) }
        .to_str()
        .map_err(|_| format!("{what} is not valid UTF-8"))
}

/// Simulate a scenario described by key=value text (the scenario file
/// format) and capture its report stream. Null on failure.
///
/// # Safety
/// `config_text` must be a valid nul-terminated string or null.
#[no_mangle]
pub unsafe extern "C" fn hm_trace_from_scenario(config_text: *const c_char) -> *mut HmTrace {
    guard(std::ptr::null_mut(), || {
        let text = match unsafe { cstr(config_text, "config_text") } {
            Ok(t) => t,
            Err(e) => {
                set_error(e);
                return std::ptr::null_mut();
            }
        };
        let base = ScenarioConfig::synthetic_defaults(1);
        let config = match parse_scenario(text, &base) {
            Ok(c) => c,
            Err(e) => {
                set_error(e.to_string());
                return std::ptr::null_mut();
            }
        };
        let trace = match simulate(&config) {
            Ok(t) => t,
            Err(e) => {
                set_error(e.to_string());
                return std::ptr::null_mut();
            }
        };
        match trace_to_reports(&trace) {
            Ok(reports) => Box::into_raw(Box::new(HmTrace { reports })),
            Err(e) => {
                set_error(e.to_string());
                std::ptr::null_mut()
            }
        }
    })
}

/// Load a JSONL trace file. Null on failure.
///
/// # Safety
/// `path` must be a valid nul-terminated string or null.
#[no_mangle]
pub unsafe extern "C" fn hm_trace_load(path: *const c_char) -> *mut HmTrace {
    guard(std::ptr::null_mut(), || {
        let path = match unsafe { cstr(path, "path") } {
            Ok(p) => p,
            Err(e) => {
                set_error(e);
                return std::ptr::null_mut();
            }
        };
        let file = match std::fs::File::open(path) {
            Ok(f) => f,
            Err(e) => {
                set_error(format!("opening {path}: {e}"));
                return std::ptr::null_mut();
            }
        };
        match read_reports(std::io::BufReader::new(file)) {
            Ok(reports) => Box::into_raw(Box::new(HmTrace { reports })),
            Err(e) => {
                set_error(e.to_string());
                std::ptr::null_mut()
            }
        }
    })
}

/// Write the trace as JSONL.
///
/// # Safety
/// `trace` must come from this library and be live; `path` must be a valid
/// nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn hm_trace_save(trace: *const HmTrace, path: *const c_char) -> HmStatus {
    guard(HmStatus::Panicked, || {
        let Some(trace) = (unsafe { trace.as_ref() }) else {
            set_error("trace is null");
            return HmStatus::InvalidArgument;
        };
        let path = match unsafe { cstr(path, "path") } {
            Ok(p) => p,
            Err(e) => {
                set_error(e);
                return HmStatus::InvalidArgument;
            }
        };
        let file = match std::fs::File::create(path) {
            Ok(f) => f,
            Err(e) => {
                set_error(format!("creating {path}: {e}"));
                return HmStatus::Io;
            }
        };
        match write_reports(std::io::BufWriter::new(file), &trace.reports) {
            Ok(()) => HmStatus::Ok,
            Err(e) => {
                set_error(e.to_string());
                HmStatus::Io
            }
        }
    })
}

/// Number of report records in the trace.
///
/// # Safety
/// `trace` must come from this library and be live, or null.
#[no_mangle]
pub unsafe extern "C" fn hm_trace_report_count(trace: *const HmTrace) -> u64 {
    unsafe { trace.as_ref() }
        .map(|t| t.reports.len() as u64)
        .unwrap_or(0)
}

/// Release a trace handle. Null is ignored.
///
/// # Safety
/// `trace` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hm_trace_free(trace: *mut HmTrace) {
    if !trace.is_null() {
        drop(unsafe { Box::from_raw(trace) });
    }
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// HLC update for a local or send event at physical tick `pt`.
///
/// # Safety
/// `out_l` and `out_c` must be valid writable pointers or null.
#[no_mangle]
pub unsafe extern "C" fn hm_hlc_advance_local(
    l: u64,
    c: u32,
    pt: u64,
    out_l: *mut u64,
    out_c: *mut u32,
) -> HmStatus {
    guard(HmStatus::Panicked, || {
        if out_l.is_null() || out_c.is_null() {
            set_error("output pointers are null");
            return HmStatus::InvalidArgument;
        }
        let next = advance_local(HlcTimestamp::new(l, c), pt);
        unsafe {
            *out_l = next.l;
            *out_c = next.c;
        }
        HmStatus::Ok
    })
}

/// HLC update for a receive event carrying timestamp (msg_l, msg_c).
///
/// # Safety
/// `out_l` and `out_c` must be valid writable pointers or null.
#[no_mangle]
pub unsafe extern "C" fn hm_hlc_advance_receive(
    l: u64,
    c: u32,
    msg_l: u64,
    msg_c: u32,
    pt: u64,
    out_l: *mut u64,
    out_c: *mut u32,
) -> HmStatus {
    guard(HmStatus::Panicked, || {
        if out_l.is_null() || out_c.is_null() {
            set_error("output pointers are null");
            return HmStatus::InvalidArgument;
        }
        let next = advance_receive(HlcTimestamp::new(l, c), HlcTimestamp::new(msg_l, msg_c), pt);
        unsafe {
            *out_l = next.l;
            *out_c = next.c;
        }
        HmStatus::Ok
    })
}

/// Strict lexicographic HLC order: true iff (a_l, a_c) < (b_l, b_c).
#[no_mangle]
pub extern "C" fn hm_hlc_less(a_l: u64, a_c: u32, b_l: u64, b_c: u32) -> bool {
    HlcTimestamp::new(a_l, a_c) < HlcTimestamp::new(b_l, b_c)
}

fn export_json(value: &impl serde::Serialize, out_json: *mut *mut c_char) -> HmStatus {
    let text = match serde_json::to_string(value) {
        Ok(t) => t,
        Err(e) => {
            set_error(e.to_string());
            return HmStatus::Parse;
        }
    };
    match CString::new(text) {
        Ok(cstring) => {
            unsafe { *out_json = cstring.into_raw() };
            HmStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            HmStatus::Parse
        }
    }
}

/// Monitor a trace window by window. On success, `*out_json` receives a JSON
/// array of per-window reports (verdict, witness, timings); release it with
/// `hm_string_free`.
///
/// `predicate` uses the CLI syntax (`conj`, `exactly:K`, `atleast:K`,
/// `sumeq:K`, `sumgeq:K`, `pairwise`, `cnf:PATH`). `solver_command` may be
/// null to use the default resolution (HLCMON_SOLVER, z3, bundled solver);
/// `overlap` and `period` of zero select the defaults.
///
/// # Safety
/// `trace` must come from this library and be live; string arguments must be
/// valid nul-terminated strings (or null where documented); `out_json` must
/// be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hm_monitor(
    trace: *const HmTrace,
    epsilon: u64,
    predicate: *const c_char,
    period: u64,
    overlap: u64,
    combine: bool,
    solver_command: *const c_char,
    timeout_secs: u64,
    out_json: *mut *mut c_char,
) -> HmStatus {
    guard(HmStatus::Panicked, || {
        let Some(trace) = (unsafe { trace.as_ref() }) else {
            set_error("trace is null");
            return HmStatus::InvalidArgument;
        };
        if out_json.is_null() {
            set_error("out_json is null");
            return HmStatus::InvalidArgument;
        }
        let predicate = match unsafe { cstr(predicate, "predicate") }.and_then(parse_predicate_spec)
        {
            Ok(p) => p,
            Err(e) => {
                set_error(e);
                return HmStatus::InvalidArgument;
            }
        };
        let solver = if solver_command.is_null() {
            SolverConfig::resolve()
        } else {
            match unsafe { cstr(solver_command, "solver_command") } {
                Ok(spec) => {
                    let command: Vec<String> =
                        spec.split_whitespace().map(str::to_string).collect();
                    if command.is_empty() {
                        Err(hlcmon::smt::SolverError::NoSolver)
                    } else {
                        Ok(SolverConfig::new(command))
                    }
                }
                Err(e) => {
                    set_error(e);
                    return HmStatus::InvalidArgument;
                }
            }
        };
        let mut solver = match solver {
            Ok(s) => s,
            Err(e) => {
                set_error(e.to_string());
                return HmStatus::Monitor;
            }
        };
        if timeout_secs > 0 {
            solver.timeout = Duration::from_secs(timeout_secs);
        }
        let windowing = MonitorWindowing {
            period: if period == 0 { 100_000 } else { period },
            overlap: if overlap == 0 { epsilon } else { overlap },
        };
        let encoder = EncoderConfig {
            epsilon,
            combine,
            c_prime: 4,
        };
        match monitor_reports(
            &trace.reports,
            epsilon,
            &windowing,
            &predicate,
            &encoder,
            &solver,
            None,
        ) {
            Ok(reports) => export_json(&reports, out_json),
            Err(e) => {
                set_error(e.to_string());
                HmStatus::Monitor
            }
        }
    })
}

/// Brute-force search for a valid snapshot on a small trace (at most 4
/// processes and a 40-tick horizon; the search is exhaustive). On success,
/// `*out_json` receives the witness in snapshot JSON form, or `null` when no
/// valid snapshot exists; release it with `hm_string_free`.
///
/// # Safety
/// As for `hm_monitor`.
#[no_mangle]
pub unsafe extern "C" fn hm_oracle(
    trace: *const HmTrace,
    epsilon: u64,
    predicate: *const c_char,
    out_json: *mut *mut c_char,
) -> HmStatus {
    guard(HmStatus::Panicked, || {
        let Some(trace) = (unsafe { trace.as_ref() }) else {
            set_error("trace is null");
            return HmStatus::InvalidArgument;
        };
        if out_json.is_null() {
            set_error("out_json is null");
            return HmStatus::InvalidArgument;
        }
        let predicate = match unsafe { cstr(predicate, "predicate") }.and_then(parse_predicate_spec)
        {
            Ok(p) => p,
            Err(e) => {
                set_error(e);
                return HmStatus::InvalidArgument;
            }
        };
        let window = match WindowData::from_reports(&trace.reports) {
            Ok(w) => w,
            Err(e) => {
                set_error(e.to_string());
                return HmStatus::Parse;
            }
        };
        let limits = OracleLimits::default();
        if window.n > limits.max_processes || window.horizon.l > limits.max_ticks {
            set_error(format!(
                "trace too large for exhaustive search: {} processes, horizon {} (limits {}, {})",
                window.n, window.horizon.l, limits.max_processes, limits.max_ticks
            ));
            return HmStatus::Oracle;
        }
        match find_valid_snapshot_in_window(&window, &predicate, epsilon) {
            Ok(witness) => export_json(&witness, out_json),
            Err(e) => {
                set_error(e.to_string());
                HmStatus::Oracle
            }
        }
    })
}
