//! C ABI for the qfiflow library: opaque handles, status codes, out
//! parameters. The header `include/qfiflow.h` is generated at build time.

use std::ptr;

use libc::{c_double, size_t};

use qfiflow::config::{ModelKind, ScenarioConfig};
use qfiflow::flow::{cramer_rao_bound, qfi_bloch};
use qfiflow::models::{
    analytic_flow, analytic_qfi, analytic_state, gamma_t, h_function, DampedJcParams, RATE_GUARD,
};
use qfiflow::runner::{run_scenario, RunReport};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum QfStatus {
    Ok = 0,
    /// Null pointer or out-of-range argument.
    InvalidArgument = 1,
    /// The decay rate diverges at the requested time.
    Singularity = 2,
    /// A state invariant (trace, positivity) was violated during a run.
    InvariantViolation = 3,
    /// Nonpositive QFI: the Cramer-Rao bound is undefined.
    NonpositiveQfi = 4,
    /// Index past the end of a series.
    OutOfRange = 5,
}

/// Opaque damped-JC parameter handle.
pub struct QfJcParams(DampedJcParams);

/// Opaque flow-series handle produced by a run.
pub struct QfFlowSeries {
    report: RunReport,
}

unsafe fn out_write<T>(out: *mut T, value: T) -> QfStatus {
    if out.is_null() {
        return QfStatus::InvalidArgument;
    }
    unsafe { ptr::write(out, value) };
    QfStatus::Ok
}

/// Create a parameter handle; `w` and `lambda` must be positive.
/// The returned handle must be freed with `qfiflow_jc_params_free`.
#[no_mangle]
pub unsafe extern "C" fn qfiflow_jc_params_new(
    w: c_double,
    lambda: c_double,
    phi: c_double,
    out: *mut *mut QfJcParams,
) -> QfStatus {
    if out.is_null() {
        return QfStatus::InvalidArgument;
    }
    match DampedJcParams::new(w, lambda, phi) {
        Ok(p) => unsafe { out_write(out, Box::into_raw(Box::new(QfJcParams(p)))) },
        Err(_) => QfStatus::InvalidArgument,
    }
}

/// # Safety
/// `params` must come from `qfiflow_jc_params_new` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn qfiflow_jc_params_free(params: *mut QfJcParams) {
    if !params.is_null() {
        drop(unsafe { Box::from_raw(params) });
    }
}

/// Characteristic damping envelope h(t).
#[no_mangle]
pub unsafe extern "C" fn qfiflow_jc_h(
    params: *const QfJcParams,
    t: c_double,
    out: *mut c_double,
) -> QfStatus {
    let Some(p) = (unsafe { params.as_ref() }) else {
        return QfStatus::InvalidArgument;
    };
    unsafe { out_write(out, h_function(t, &p.0)) }
}

/// Decay rate gamma(t) = -2 h'(t)/h(t); fails with `Singularity` inside the
/// guard band around the zeros of h.
#[no_mangle]
pub unsafe extern "C" fn qfiflow_jc_gamma(
    params: *const QfJcParams,
    t: c_double,
    out: *mut c_double,
) -> QfStatus {
    let Some(p) = (unsafe { params.as_ref() }) else {
        return QfStatus::InvalidArgument;
    };
    match gamma_t(t, &p.0, RATE_GUARD) {
        Ok(g) => unsafe { out_write(out, g) },
        Err(_) => QfStatus::Singularity,
    }
}

/// Exact QFI F(t) = h(t)^2.
#[no_mangle]
pub unsafe extern "C" fn qfiflow_jc_qfi(
    params: *const QfJcParams,
    t: c_double,
    out: *mut c_double,
) -> QfStatus {
    let Some(p) = (unsafe { params.as_ref() }) else {
        return QfStatus::InvalidArgument;
    };
    unsafe { out_write(out, analytic_qfi(t, &p.0)) }
}

/// Exact QFI flow I(t) = 2 h(t) h'(t); finite at the rate singularities.
#[no_mangle]
pub unsafe extern "C" fn qfiflow_jc_flow(
    params: *const QfJcParams,
    t: c_double,
    out: *mut c_double,
) -> QfStatus {
    let Some(p) = (unsafe { params.as_ref() }) else {
        return QfStatus::InvalidArgument;
    };
    unsafe { out_write(out, analytic_flow(t, &p.0)) }
}

/// Exact Bloch vector; `out` must point to 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn qfiflow_jc_bloch(
    params: *const QfJcParams,
    t: c_double,
    out: *mut c_double,
) -> QfStatus {
    let Some(p) = (unsafe { params.as_ref() }) else {
        return QfStatus::InvalidArgument;
    };
    if out.is_null() {
        return QfStatus::InvalidArgument;
    }
    let b = analytic_state(t, &p.0);
    unsafe {
        ptr::write(out, b.x);
        ptr::write(out.add(1), b.y);
        ptr::write(out.add(2), b.z);
    }
    QfStatus::Ok
}

/// Quantum Cramer-Rao bound 1/(M F) for `m >= 1` measurements.
#[no_mangle]
pub unsafe extern "C" fn qfiflow_cramer_rao_bound(
    f: c_double,
    m: u64,
    out: *mut c_double,
) -> QfStatus {
    if m == 0 {
        return QfStatus::InvalidArgument;
    }
    match cramer_rao_bound(f, m) {
        Ok(b) => unsafe { out_write(out, b) },
        Err(_) => QfStatus::NonpositiveQfi,
    }
}

/// Qubit QFI from Bloch coordinates; `b` and `db` point to 3 doubles each.
#[no_mangle]
pub unsafe extern "C" fn qfiflow_qfi_bloch(
    b: *const c_double,
    db: *const c_double,
    out: *mut c_double,
) -> QfStatus {
    if b.is_null() || db.is_null() {
        return QfStatus::InvalidArgument;
    }
    let bv = unsafe { [*b, *b.add(1), *b.add(2)] };
    let dbv = unsafe { [*db, *db.add(1), *db.add(2)] };
    match qfi_bloch(bv, dbv) {
        Ok(f) => unsafe { out_write(out, f) },
        Err(_) => QfStatus::InvalidArgument,
    }
}

/// Run the numeric damped-JC pipeline on a uniform grid and return a series
/// handle. Guard-band grid points near rate singularities carry no samples.
/// The handle must be freed with `qfiflow_series_free`.
#[no_mangle]
pub unsafe extern "C" fn qfiflow_jc_run(
    params: *const QfJcParams,
    t_max: c_double,
    dt: c_double,
    out: *mut *mut QfFlowSeries,
) -> QfStatus {
    let Some(p) = (unsafe { params.as_ref() }) else {
        return QfStatus::InvalidArgument;
    };
    if out.is_null() || !(t_max > 0.0) || !(dt > 0.0) || dt > t_max / 10.0 {
        return QfStatus::InvalidArgument;
    }
    let cfg = ScenarioConfig {
        model: ModelKind::DampedJc,
        w: p.0.w,
        lambda: p.0.lambda,
        phi: p.0.phi,
        t_max,
        dt,
        ..Default::default()
    };
    match run_scenario(&cfg) {
        Ok(report) => unsafe {
            out_write(out, Box::into_raw(Box::new(QfFlowSeries { report })))
        },
        Err(e) => match e.exit_code() {
            4 => QfStatus::Singularity,
            _ => QfStatus::InvariantViolation,
        },
    }
}

/// Number of samples in a series.
#[no_mangle]
pub unsafe extern "C" fn qfiflow_series_len(series: *const QfFlowSeries) -> size_t {
    unsafe { series.as_ref() }.map_or(0, |s| s.report.rows.len())
}

/// Read one sample: time, QFI, total flow, and the (single-channel) decay
/// rate. Any out pointer may be null to skip that field.
#[no_mangle]
pub unsafe extern "C" fn qfiflow_series_sample(
    series: *const QfFlowSeries,
    index: size_t,
    t: *mut c_double,
    f: *mut c_double,
    i_total: *mut c_double,
    gamma: *mut c_double,
) -> QfStatus {
    let Some(s) = (unsafe { series.as_ref() }) else {
        return QfStatus::InvalidArgument;
    };
    let Some(row) = s.report.rows.get(index) else {
        return QfStatus::OutOfRange;
    };
    unsafe {
        if !t.is_null() {
            ptr::write(t, row.t);
        }
        if !f.is_null() {
            ptr::write(f, row.f_numeric);
        }
        if !i_total.is_null() {
            ptr::write(i_total, row.i_decomposed);
        }
        if !gamma.is_null() {
            ptr::write(gamma, row.channels.first().map_or(0.0, |c| c.0));
        }
    }
    QfStatus::Ok
}

/// Number of inward-flow intervals found by the witness.
#[no_mangle]
pub unsafe extern "C" fn qfiflow_series_inward_count(series: *const QfFlowSeries) -> size_t {
    unsafe { series.as_ref() }.map_or(0, |s| s.report.series.inward_intervals.len())
}

/// Bounds of one inward-flow interval.
#[no_mangle]
pub unsafe extern "C" fn qfiflow_series_inward_interval(
    series: *const QfFlowSeries,
    index: size_t,
    t_start: *mut c_double,
    t_end: *mut c_double,
) -> QfStatus {
    let Some(s) = (unsafe { series.as_ref() }) else {
        return QfStatus::InvalidArgument;
    };
    let Some(iv) = s.report.series.inward_intervals.get(index) else {
        return QfStatus::OutOfRange;
    };
    unsafe {
        if !t_start.is_null() {
            ptr::write(t_start, iv.t_start);
        }
        if !t_end.is_null() {
            ptr::write(t_end, iv.t_end);
        }
    }
    QfStatus::Ok
}

/// Accumulated inward flow (trapezoidal integral of max(I, 0)).
#[no_mangle]
pub unsafe extern "C" fn qfiflow_series_accumulated_inward(
    series: *const QfFlowSeries,
    out: *mut c_double,
) -> QfStatus {
    let Some(s) = (unsafe { series.as_ref() }) else {
        return QfStatus::InvalidArgument;
    };
    unsafe { out_write(out, s.report.series.accumulated_inward) }
}

/// # Safety
/// `series` must come from `qfiflow_jc_run` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn qfiflow_series_free(series: *mut QfFlowSeries) {
    if !series.is_null() {
        drop(unsafe { Box::from_raw(series) });
    }
}
