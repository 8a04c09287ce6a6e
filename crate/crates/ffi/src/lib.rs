//! C ABI over the flow solver and its monitors.
//!
//! Every function returns an [`RlStatus`]. On failure a message is kept per
//! thread and can be read with [`rl_last_error_message`]. Histories are
//! opaque handles released with [`rl_history_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use ricci_lab::config::parse_config;
use ricci_lab::flow::{run, FlowHistory, StopReason};
use ricci_lab::monitors::barrier::lemma_a_margins;
use ricci_lab::monitors::{summary, MonitorParams};
use ricci_lab::output::{build_report, emit_outputs, series_csv_for};
use ricci_lab::Error;

/// Result of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RlStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    RangeError = 4,
    InvalidInput = 5,
    NumericalError = 6,
    IoError = 7,
    OutOfRange = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// How a run ended.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RlStopReason {
    TimeReached = 0,
    PinchDetected = 1,
    NumericalFailure = 2,
}

impl From<StopReason> for RlStopReason {
    fn from(s: StopReason) -> Self {
        match s {
            StopReason::TimeReached => Self::TimeReached,
            StopReason::PinchDetected => Self::PinchDetected,
            StopReason::NumericalFailure => Self::NumericalFailure,
        }
    }
}

/// Headline monitor values of a history.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RlSummary {
    pub k_bar: f64,
    pub lambda0: f64,
    pub t_total: f64,
    pub shi_ratio_max: f64,
    pub shi_ratio_h_max: f64,
    pub rm_ratio_max: f64,
    pub taming_max_early: f64,
    pub taming_max_late: f64,
    pub beta_needed_max: f64,
    pub shig_ratio_max: f64,
    pub delta_observed: f64,
    pub snapshots: usize,
}

/// Opaque recorded flow.
pub struct RlHistory {
    history: FlowHistory,
    wall_clock: Duration,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    let c = CString::new(msg).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> RlStatus {
    match e {
        Error::Parse { .. } => RlStatus::ParseError,
        Error::Range { .. } => RlStatus::RangeError,
        Error::Io { .. } | Error::Output(_) => RlStatus::IoError,
        Error::NumericalBlowup { .. } => RlStatus::NumericalError,
        _ => RlStatus::InvalidInput,
    }
}

fn fail(e: Error) -> RlStatus {
    set_error(e.to_string());
    status_of(&e)
}

/// Run `f`, turning panics into `RlStatus::Panic`.
fn guarded(f: impl FnOnce() -> RlStatus) -> RlStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic");
            RlStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, RlStatus> {
    if p.is_null() {
        set_error("null string argument");
        return Err(RlStatus::NullArgument);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("string argument is not UTF-8");
        RlStatus::InvalidUtf8
    })
}

unsafe fn history_arg<'a>(h: *const RlHistory) -> Result<&'a RlHistory, RlStatus> {
    h.as_ref().ok_or_else(|| {
        set_error("null history handle");
        RlStatus::NullArgument
    })
}

macro_rules! try_status {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call on the same thread.
#[no_mangle]
pub extern "C" fn rl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Parse `config_text` and run the scenario. On success `*out` owns a new
/// handle.
///
/// # Safety
/// `config_text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rl_run_config(config_text: *const c_char, out: *mut *mut RlHistory) -> RlStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null output pointer");
            return RlStatus::NullArgument;
        }
        *out = std::ptr::null_mut();
        let text = try_status!(str_arg(config_text));
        let cfg = match parse_config(text) {
            Ok(c) => c,
            Err(e) => return fail(e),
        };
        let started = Instant::now();
        match run(&cfg) {
            Ok(history) => {
                let handle = RlHistory { history, wall_clock: started.elapsed() };
                *out = Box::into_raw(Box::new(handle));
                RlStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Release a handle. NULL is ignored.
///
/// # Safety
/// `h` must come from `rl_run_config` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rl_history_free(h: *mut RlHistory) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Number of recorded snapshots.
///
/// # Safety
/// `h` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rl_history_len(h: *const RlHistory, out: *mut usize) -> RlStatus {
    guarded(|| {
        let h = try_status!(history_arg(h));
        if out.is_null() {
            set_error("null output pointer");
            return RlStatus::NullArgument;
        }
        *out = h.history.len();
        RlStatus::Ok
    })
}

/// Time of snapshot `index`.
///
/// # Safety
/// `h` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rl_history_time(h: *const RlHistory, index: usize, out: *mut f64) -> RlStatus {
    guarded(|| {
        let h = try_status!(history_arg(h));
        if out.is_null() {
            set_error("null output pointer");
            return RlStatus::NullArgument;
        }
        match h.history.snapshots().get(index) {
            Some(s) => {
                *out = s.state.time();
                RlStatus::Ok
            }
            None => {
                set_error(format!("snapshot {index} out of range (len {})", h.history.len()));
                RlStatus::OutOfRange
            }
        }
    })
}

/// Copy the warping function of snapshot `index` into `buf`. `*len` holds
/// the capacity on entry and the node count on return; a short buffer
/// yields `BufferTooSmall` with `*len` set to the size needed.
///
/// # Safety
/// `h` must be a live handle, `len` valid, and `buf` valid for `*len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rl_history_warp(
    h: *const RlHistory,
    index: usize,
    buf: *mut f64,
    len: *mut usize,
) -> RlStatus {
    guarded(|| {
        let h = try_status!(history_arg(h));
        if len.is_null() {
            set_error("null length pointer");
            return RlStatus::NullArgument;
        }
        let Some(snap) = h.history.snapshots().get(index) else {
            set_error(format!("snapshot {index} out of range (len {})", h.history.len()));
            return RlStatus::OutOfRange;
        };
        let w = snap.state.w();
        let cap = *len;
        *len = w.len();
        if cap < w.len() {
            set_error(format!("buffer holds {cap} values, {} needed", w.len()));
            return RlStatus::BufferTooSmall;
        }
        if buf.is_null() {
            set_error("null buffer");
            return RlStatus::NullArgument;
        }
        std::ptr::copy_nonoverlapping(w.as_ptr(), buf, w.len());
        RlStatus::Ok
    })
}

/// How the run ended.
///
/// # Safety
/// `h` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rl_history_stop_reason(h: *const RlHistory, out: *mut RlStopReason) -> RlStatus {
    guarded(|| {
        let h = try_status!(history_arg(h));
        if out.is_null() {
            set_error("null output pointer");
            return RlStatus::NullArgument;
        }
        *out = h.history.stop_reason().into();
        RlStatus::Ok
    })
}

/// Evaluate the monitors with the run's own constants.
///
/// # Safety
/// `h` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rl_history_summary(h: *const RlHistory, out: *mut RlSummary) -> RlStatus {
    guarded(|| {
        let h = try_status!(history_arg(h));
        if out.is_null() {
            set_error("null output pointer");
            return RlStatus::NullArgument;
        }
        let params = MonitorParams::from_config(h.history.scenario());
        match summary(&h.history, &params) {
            Ok(s) => {
                *out = RlSummary {
                    k_bar: s.k_bar,
                    lambda0: s.lambda0,
                    t_total: s.t_total,
                    shi_ratio_max: s.shi_ratio_max,
                    shi_ratio_h_max: s.shi_ratio_h_max,
                    rm_ratio_max: s.rm_ratio_max,
                    taming_max_early: s.taming_max.early,
                    taming_max_late: s.taming_max.late,
                    beta_needed_max: s.beta_needed_max,
                    shig_ratio_max: s.shig_ratio_max,
                    delta_observed: s.delta_observed,
                    snapshots: h.history.len(),
                };
                RlStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Copy series.csv into `buf` as a NUL-terminated string. `*len` holds the
/// capacity on entry and the size needed, including the NUL, on return.
///
/// # Safety
/// `h` must be a live handle, `len` valid, and `buf` valid for `*len` bytes.
#[no_mangle]
pub unsafe extern "C" fn rl_history_series_csv(
    h: *const RlHistory,
    buf: *mut c_char,
    len: *mut usize,
) -> RlStatus {
    guarded(|| {
        let h = try_status!(history_arg(h));
        if len.is_null() {
            set_error("null length pointer");
            return RlStatus::NullArgument;
        }
        let text = match series_csv_for(&h.history) {
            Ok(t) => t,
            Err(e) => return fail(e),
        };
        let cap = *len;
        *len = text.len() + 1;
        if cap < text.len() + 1 {
            set_error(format!("buffer holds {cap} bytes, {} needed", text.len() + 1));
            return RlStatus::BufferTooSmall;
        }
        if buf.is_null() {
            set_error("null buffer");
            return RlStatus::NullArgument;
        }
        std::ptr::copy_nonoverlapping(text.as_ptr(), buf.cast::<u8>(), text.len());
        *buf.add(text.len()) = 0;
        RlStatus::Ok
    })
}

/// Write series.csv, snapshots.csv and report.txt into `dir`.
///
/// # Safety
/// `h` must be a live handle and `dir` a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn rl_history_write_outputs(h: *const RlHistory, dir: *const c_char) -> RlStatus {
    guarded(|| {
        let h = try_status!(history_arg(h));
        let dir = try_status!(str_arg(dir));
        let result = build_report(&h.history, h.wall_clock)
            .and_then(|report| emit_outputs(&h.history, &report, Path::new(dir)));
        match result {
            Ok(()) => RlStatus::Ok,
            Err(e) => fail(e),
        }
    })
}

/// Barrier arithmetic margins for dimension `n` and horizon `theta1`.
///
/// # Safety
/// `margin_c` and `margin_d` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn rl_lemma_a_margins(
    n: usize,
    theta1: f64,
    margin_c: *mut f64,
    margin_d: *mut f64,
) -> RlStatus {
    guarded(|| {
        if margin_c.is_null() || margin_d.is_null() {
            set_error("null output pointer");
            return RlStatus::NullArgument;
        }
        if n < 2 {
            return fail(Error::DimensionTooSmall { n, min: 2 });
        }
        if !(theta1 > 0.0 && theta1 < 1.0) {
            return fail(Error::Range { key: "theta1".into(), message: "must lie in (0, 1)".into() });
        }
        let m = lemma_a_margins(n, theta1);
        *margin_c = m.margin_c;
        *margin_d = m.margin_d;
        RlStatus::Ok
    })
}
