//! C ABI over the slate-select library: opaque instance handles, integer
//! status codes, and a thread-local last-error message.
//!
//! The committed header `include/slate_select.h` mirrors this surface
//! declaration-for-declaration; the tests at the bottom of this file keep the
//! two in sync. Every fallible function returns a [`SlateStatus`]; on any
//! non-OK status, [`slate_last_error`] holds a human-readable message until
//! the next failing call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use slate_select::data_io::instance_from_json;
use slate_select::distance::DistanceIndex;
use slate_select::error::Error;
use slate_select::metrics::MetricsReport;
use slate_select::model::{ApprovalMatrix, Instance, Rule, Selection};
use slate_select::selectors::{select, SelectorConfig};
use slate_select::verify::check_jr;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlateStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidArgument = 4,
    RuntimeError = 5,
    BufferTooSmall = 6,
}

/// Opaque handle over a loaded instance.
pub struct SlateInstance(Instance);

/// Metric values for one slate. `median_u` and `consensus` are NaN when the
/// instance carries no group partition.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct SlateMetrics {
    pub u_all: f64,
    pub median_u: f64,
    pub consensus: f64,
    pub coverage_gap: f64,
    pub redundancy: f64,
    pub redundancy_epsilon: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let sanitized = CString::new(message.replace('\0', " "))
        .unwrap_or_else(|_| CString::new("error message unavailable").expect("static string"));
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(sanitized));
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

fn status_for(error: &Error) -> SlateStatus {
    match error {
        Error::Json(_) => SlateStatus::ParseError,
        e if e.is_usage() => SlateStatus::InvalidArgument,
        _ => SlateStatus::RuntimeError,
    }
}

fn fail(error: &Error) -> SlateStatus {
    let status = status_for(error);
    set_last_error(error.to_string());
    status
}

fn null_argument() -> SlateStatus {
    set_last_error("null argument".to_string());
    SlateStatus::NullArgument
}

/// Runs an FFI body, converting panics into a status instead of unwinding
/// across the C boundary.
fn guarded(body: impl FnOnce() -> SlateStatus) -> SlateStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_last_error("internal panic".to_string());
            SlateStatus::RuntimeError
        }
    }
}

/// Returns the crate version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn slate_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Returns the message from the most recent failing call on this thread, or
/// null when the last call succeeded.
#[no_mangle]
pub extern "C" fn slate_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(std::ptr::null(), |msg| msg.as_ptr())
    })
}

/// Parses an instance from canonical JSON. On success writes a handle the
/// caller must release with `slate_instance_free`.
///
/// # Safety
/// `json` must point to a NUL-terminated string and `out_instance` to a
/// writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn slate_instance_from_json(
    json: *const c_char,
    out_instance: *mut *mut SlateInstance,
) -> SlateStatus {
    guarded(|| {
        if json.is_null() || out_instance.is_null() {
            return null_argument();
        }
        let text = match unsafe { CStr::from_ptr(json) }.to_str() {
            Ok(t) => t,
            Err(_) => {
                set_last_error("instance JSON is not valid UTF-8".to_string());
                return SlateStatus::InvalidUtf8;
            }
        };
        match instance_from_json(text) {
            Ok(instance) => {
                unsafe { *out_instance = Box::into_raw(Box::new(SlateInstance(instance))) };
                clear_last_error();
                SlateStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Builds an instance from a dense row-major 0/1 cell buffer of length
/// `n_users * n_opinions`. Cells other than 0 and 1 are rejected.
///
/// # Safety
/// `cells` must point to at least `n_users * n_opinions` readable bytes and
/// `out_instance` to a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn slate_instance_from_dense(
    n_users: usize,
    n_opinions: usize,
    cells: *const u8,
    k_default: usize,
    out_instance: *mut *mut SlateInstance,
) -> SlateStatus {
    guarded(|| {
        if cells.is_null() || out_instance.is_null() {
            return null_argument();
        }
        let Some(len) = n_users.checked_mul(n_opinions) else {
            set_last_error("n_users * n_opinions overflows".to_string());
            return SlateStatus::InvalidArgument;
        };
        let data = unsafe { slice::from_raw_parts(cells, len) }.to_vec();
        let matrix = match ApprovalMatrix::new(n_users, n_opinions, data) {
            Ok(m) => m,
            Err(e) => return fail(&e),
        };
        if let Some(&(u, i, v)) = matrix.non_binary_cells().first() {
            set_last_error(format!("cell ({u}, {i}) holds {v}; cells must be 0 or 1"));
            return SlateStatus::InvalidArgument;
        }
        let instance = Instance::new("ffi-instance", matrix, k_default);
        unsafe { *out_instance = Box::into_raw(Box::new(SlateInstance(instance))) };
        clear_last_error();
        SlateStatus::Ok
    })
}

/// Releases an instance handle. Null is ignored.
///
/// # Safety
/// `instance` must be null or a handle produced by this library that has not
/// been freed yet.
#[no_mangle]
pub unsafe extern "C" fn slate_instance_free(instance: *mut SlateInstance) {
    if !instance.is_null() {
        drop(unsafe { Box::from_raw(instance) });
    }
}

/// Number of users, or 0 for a null handle.
///
/// # Safety
/// `instance` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn slate_instance_users(instance: *const SlateInstance) -> usize {
    if instance.is_null() {
        return 0;
    }
    unsafe { &*instance }.0.matrix().n_users()
}

/// Number of candidate opinions, or 0 for a null handle.
///
/// # Safety
/// `instance` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn slate_instance_opinions(instance: *const SlateInstance) -> usize {
    if instance.is_null() {
        return 0;
    }
    unsafe { &*instance }.0.matrix().n_opinions()
}

/// Runs a selection rule and writes the slate into `out_opinions`.
///
/// On entry `*out_len` is the buffer capacity; on exit it is the slate
/// length. When the buffer is too small the required length is still written
/// and `BufferTooSmall` is returned.
///
/// # Safety
/// `rule` must be NUL-terminated, `out_opinions` must point to `*out_len`
/// writable entries, and `out_len` must be a valid in/out slot.
#[no_mangle]
pub unsafe extern "C" fn slate_select_opinions(
    instance: *const SlateInstance,
    rule: *const c_char,
    k: usize,
    seed: u64,
    epsilon: f64,
    trials: u32,
    out_opinions: *mut usize,
    out_len: *mut usize,
) -> SlateStatus {
    guarded(|| {
        if instance.is_null() || rule.is_null() || out_opinions.is_null() || out_len.is_null() {
            return null_argument();
        }
        let capacity = unsafe { *out_len };
        let rule = match unsafe { CStr::from_ptr(rule) }.to_str() {
            Ok(r) => r,
            Err(_) => {
                set_last_error("rule name is not valid UTF-8".to_string());
                return SlateStatus::InvalidUtf8;
            }
        };
        let rule: Rule = match rule.parse() {
            Ok(r) => r,
            Err(e) => return fail(&e),
        };
        let inst = &unsafe { &*instance }.0;
        let mut config = SelectorConfig::new(rule, k);
        config.seed = seed;
        config.epsilon = epsilon;
        config.trials = trials;
        let outcome = match select(inst, &config) {
            Ok(o) => o,
            Err(e) => return fail(&e),
        };
        let opinions = outcome.selection.opinions();
        unsafe { *out_len = opinions.len() };
        if opinions.len() > capacity {
            set_last_error(format!(
                "output buffer holds {capacity} entries; {} needed",
                opinions.len()
            ));
            return SlateStatus::BufferTooSmall;
        }
        unsafe { slice::from_raw_parts_mut(out_opinions, opinions.len()) }
            .copy_from_slice(opinions);
        clear_last_error();
        SlateStatus::Ok
    })
}

/// Scores a slate, writing the metric values into `out_metrics`. `epsilon`
/// is the neighborhood radius used by the redundancy metric.
///
/// # Safety
/// `opinions` must point to `n_opinions` readable entries and `out_metrics`
/// to a writable struct.
#[no_mangle]
pub unsafe extern "C" fn slate_compute_metrics(
    instance: *const SlateInstance,
    opinions: *const usize,
    n_opinions: usize,
    epsilon: f64,
    out_metrics: *mut SlateMetrics,
) -> SlateStatus {
    guarded(|| {
        if instance.is_null() || opinions.is_null() || out_metrics.is_null() {
            return null_argument();
        }
        if n_opinions == 0 {
            set_last_error("slate is empty".to_string());
            return SlateStatus::InvalidArgument;
        }
        let slate = unsafe { slice::from_raw_parts(opinions, n_opinions) }.to_vec();
        let selection = match Selection::manual(slate) {
            Ok(s) => s,
            Err(e) => return fail(&e),
        };
        let inst = &unsafe { &*instance }.0;
        let index = DistanceIndex::build(inst.matrix(), epsilon);
        let report = match MetricsReport::compute(inst, &selection, &index) {
            Ok(r) => r,
            Err(e) => return fail(&e),
        };
        unsafe {
            *out_metrics = SlateMetrics {
                u_all: report.u_all,
                median_u: report.median_u.unwrap_or(f64::NAN),
                consensus: report.consensus.unwrap_or(f64::NAN),
                coverage_gap: report.coverage_gap,
                redundancy: report.redundancy,
                redundancy_epsilon: report.redundancy_epsilon,
            };
        }
        clear_last_error();
        SlateStatus::Ok
    })
}

/// Checks a slate for justified representation; writes 1 into
/// `out_satisfied` when no opinion group is left unrepresented, else 0.
///
/// # Safety
/// `opinions` must point to `n_opinions` readable entries and
/// `out_satisfied` to a writable int.
#[no_mangle]
pub unsafe extern "C" fn slate_check_jr(
    instance: *const SlateInstance,
    opinions: *const usize,
    n_opinions: usize,
    out_satisfied: *mut c_int,
) -> SlateStatus {
    guarded(|| {
        if instance.is_null() || opinions.is_null() || out_satisfied.is_null() {
            return null_argument();
        }
        if n_opinions == 0 {
            set_last_error("slate is empty".to_string());
            return SlateStatus::InvalidArgument;
        }
        let slate = unsafe { slice::from_raw_parts(opinions, n_opinions) }.to_vec();
        let selection = match Selection::manual(slate) {
            Ok(s) => s,
            Err(e) => return fail(&e),
        };
        let inst = &unsafe { &*instance }.0;
        if let Err(e) = selection.check_in_range(inst.matrix()) {
            return fail(&e);
        }
        let report = match check_jr(inst, &selection) {
            Ok(r) => r,
            Err(e) => return fail(&e),
        };
        unsafe { *out_satisfied = c_int::from(report.satisfied) };
        clear_last_error();
        SlateStatus::Ok
    })
}
