//! C ABI over the core diagnostics: opaque matrix handles, status codes,
//! and a thread-local last-error message.
//!
//! Conventions:
//! - every fallible call returns an [`RcpStatus`]; `RCP_STATUS_OK` is 0
//! - output parameters are written only on success
//! - handles from `rcp_matrix_*` constructors must be released with
//!   [`rcp_matrix_free`]; passing them to any other library is undefined
//! - on failure, [`rcp_last_error`] returns a UTF-8 description of the
//!   most recent error on the calling thread

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::slice;

use ndarray::{Array1, Array2};

use rcp_core::ensembles::MeasurementMatrix;
use rcp_core::rcpcalc as calc;
use rcp_core::ripcalc;
use rcp_core::wishstat;
use rcp_core::Error;

/// Status code returned by every fallible entry point.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RcpStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    InvalidArgument = 2,
    NumericFailure = 3,
    CapacityExceeded = 4,
    DomainError = 5,
    DegenerateSample = 6,
    IoError = 7,
    ParseError = 8,
    SerializeError = 9,
}

/// Opaque measurement-matrix handle.
pub struct RcpMatrix {
    inner: MeasurementMatrix,
}

/// Scalar summary of one signal pair under a measurement matrix.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct RcpPairSummary {
    /// Energy-imbalance ratio, always >= 1.
    pub xi: f64,
    pub cos_alpha: f64,
    pub cos_beta: f64,
    pub delta_u: f64,
    pub delta_v: f64,
    pub delta_max: f64,
}

/// A closed interval bound.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct RcpInterval {
    pub lower: f64,
    pub upper: f64,
}

/// Outcome of a statistical test.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct RcpTestOutcome {
    pub statistic: f64,
    pub critical_value: f64,
    /// 1 when the test passes (fails to reject), 0 otherwise.
    pub pass: i32,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(err: &Error) -> RcpStatus {
    let msg = CString::new(err.to_string()).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = msg);
    match err {
        Error::InvalidArgument(_) => RcpStatus::InvalidArgument,
        Error::NumericFailure(_) => RcpStatus::NumericFailure,
        Error::Capacity(_) => RcpStatus::CapacityExceeded,
        Error::Domain(_) => RcpStatus::DomainError,
        Error::DegenerateSample(_) => RcpStatus::DegenerateSample,
        Error::Io(_) => RcpStatus::IoError,
        Error::Parse(_) => RcpStatus::ParseError,
        Error::Serialize(_) => RcpStatus::SerializeError,
    }
}

fn set_message(status: RcpStatus, msg: &str) -> RcpStatus {
    let msg = CString::new(msg).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = msg);
    status
}

fn null_error(what: &str) -> RcpStatus {
    set_message(RcpStatus::NullPointer, &format!("{what} must not be null"))
}

/// Copies the last error message on this thread into `buf` (NUL-terminated,
/// truncated to `len` bytes) and returns the full message length excluding
/// the terminator. `buf` may be null to query the length.
#[no_mangle]
pub unsafe extern "C" fn rcp_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            unsafe {
                std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rcp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates an M x N Gaussian measurement matrix (entry variance 1/M).
#[no_mangle]
pub unsafe extern "C" fn rcp_matrix_gaussian(
    m: usize,
    n: usize,
    seed: u64,
    out: *mut *mut RcpMatrix,
) -> RcpStatus {
    if out.is_null() {
        return null_error("out");
    }
    match rcp_core::ensembles::gen_gaussian_matrix(m, n, seed) {
        Ok(inner) => {
            unsafe { *out = Box::into_raw(Box::new(RcpMatrix { inner })) };
            RcpStatus::Ok
        }
        Err(e) => set_error(&e),
    }
}

/// Creates a matrix from `rows * cols` row-major doubles.
#[no_mangle]
pub unsafe extern "C" fn rcp_matrix_from_data(
    rows: usize,
    cols: usize,
    data: *const f64,
    out: *mut *mut RcpMatrix,
) -> RcpStatus {
    if out.is_null() || data.is_null() {
        return null_error("data and out");
    }
    if rows == 0 || cols == 0 {
        return set_message(RcpStatus::InvalidArgument, "matrix dimensions must be positive");
    }
    let slice = unsafe { slice::from_raw_parts(data, rows * cols) };
    let entries = match Array2::from_shape_vec((rows, cols), slice.to_vec()) {
        Ok(a) => a,
        Err(e) => return set_message(RcpStatus::InvalidArgument, &e.to_string()),
    };
    let inner = MeasurementMatrix::from_entries(entries);
    unsafe { *out = Box::into_raw(Box::new(RcpMatrix { inner })) };
    RcpStatus::Ok
}

/// Row count of a matrix handle; 0 for null.
#[no_mangle]
pub unsafe extern "C" fn rcp_matrix_rows(matrix: *const RcpMatrix) -> usize {
    if matrix.is_null() {
        0
    } else {
        unsafe { &*matrix }.inner.rows
    }
}

/// Column count of a matrix handle; 0 for null.
#[no_mangle]
pub unsafe extern "C" fn rcp_matrix_cols(matrix: *const RcpMatrix) -> usize {
    if matrix.is_null() {
        0
    } else {
        unsafe { &*matrix }.inner.cols
    }
}

/// Releases a matrix handle. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn rcp_matrix_free(matrix: *mut RcpMatrix) {
    if !matrix.is_null() {
        drop(unsafe { Box::from_raw(matrix) });
    }
}

/// Exact restricted isometry constant at sparsity `k` (enumerates all
/// supports; fails with `CapacityExceeded` past the enumeration cap).
#[no_mangle]
pub unsafe extern "C" fn rcp_ric_exact(
    matrix: *const RcpMatrix,
    k: usize,
    out_delta: *mut f64,
) -> RcpStatus {
    if matrix.is_null() || out_delta.is_null() {
        return null_error("matrix and out_delta");
    }
    match ripcalc::ric_exact(&unsafe { &*matrix }.inner, k) {
        Ok(r) => {
            unsafe { *out_delta = r.delta };
            RcpStatus::Ok
        }
        Err(e) => set_error(&e),
    }
}

/// Monte-Carlo lower bound of the restricted isometry constant.
#[no_mangle]
pub unsafe extern "C" fn rcp_ric_monte_carlo(
    matrix: *const RcpMatrix,
    k: usize,
    trials: usize,
    seed: u64,
    out_delta: *mut f64,
) -> RcpStatus {
    if matrix.is_null() || out_delta.is_null() {
        return null_error("matrix and out_delta");
    }
    match ripcalc::ric_monte_carlo(&unsafe { &*matrix }.inner, k, trials, seed) {
        Ok(r) => {
            unsafe { *out_delta = r.delta };
            RcpStatus::Ok
        }
        Err(e) => set_error(&e),
    }
}

/// Angle and isometry summary of the pair `(x_u, x_v)`, both of length
/// `len` equal to the matrix column count.
#[no_mangle]
pub unsafe extern "C" fn rcp_pair_geometry(
    matrix: *const RcpMatrix,
    x_u: *const f64,
    x_v: *const f64,
    len: usize,
    out: *mut RcpPairSummary,
) -> RcpStatus {
    if matrix.is_null() || x_u.is_null() || x_v.is_null() || out.is_null() {
        return null_error("matrix, x_u, x_v, and out");
    }
    let u = Array1::from_vec(unsafe { slice::from_raw_parts(x_u, len) }.to_vec());
    let v = Array1::from_vec(unsafe { slice::from_raw_parts(x_v, len) }.to_vec());
    match calc::pair_geometry(&unsafe { &*matrix }.inner, &u, &v) {
        Ok(g) => {
            unsafe {
                *out = RcpPairSummary {
                    xi: g.xi,
                    cos_alpha: g.cos_alpha,
                    cos_beta: g.cos_beta,
                    delta_u: g.delta_u,
                    delta_v: g.delta_v,
                    delta_max: g.delta_max,
                };
            }
            RcpStatus::Ok
        }
        Err(e) => set_error(&e),
    }
}

/// Sign-robust JL angle envelope for the given constants.
#[no_mangle]
pub unsafe extern "C" fn rcp_jl_envelope(
    xi: f64,
    cos_alpha: f64,
    delta_max: f64,
    epsilon: f64,
    out: *mut RcpInterval,
) -> RcpStatus {
    if out.is_null() {
        return null_error("out");
    }
    match calc::rcp_jl_envelope(xi, cos_alpha, delta_max, epsilon) {
        Ok(b) => {
            unsafe { *out = RcpInterval { lower: b.lower, upper: b.upper } };
            RcpStatus::Ok
        }
        Err(e) => set_error(&e),
    }
}

/// Symmetric angle envelope for disjoint-support pairs.
#[no_mangle]
pub unsafe extern "C" fn rcp_orthogonal_envelope(
    delta_k: f64,
    delta_max: f64,
    xi: f64,
    out: *mut RcpInterval,
) -> RcpStatus {
    if out.is_null() {
        return null_error("out");
    }
    match calc::rcp_orthogonal_envelope(delta_k, delta_max, xi) {
        Ok(b) => {
            unsafe { *out = RcpInterval { lower: b.lower, upper: b.upper } };
            RcpStatus::Ok
        }
        Err(e) => set_error(&e),
    }
}

/// Runs a Wishart eigenvalue campaign and a Kolmogorov-Smirnov normality
/// test of the transformed statistic at the given significance level.
#[no_mangle]
pub unsafe extern "C" fn rcp_wishart_ks(
    m: usize,
    n: usize,
    supp_size: usize,
    trials: usize,
    seed: u64,
    significance: f64,
    out: *mut RcpTestOutcome,
) -> RcpStatus {
    if out.is_null() {
        return null_error("out");
    }
    let outcome = wishstat::run_campaign(m, n, supp_size, trials, seed).and_then(|camp| {
        let mut t = camp.transformed;
        t.sort_by(|a, b| a.total_cmp(b));
        wishstat::ks_test(&t, significance)
    });
    match outcome {
        Ok(o) => {
            unsafe {
                *out = RcpTestOutcome {
                    statistic: o.statistic,
                    critical_value: o.critical_value,
                    pass: i32::from(o.pass),
                };
            }
            RcpStatus::Ok
        }
        Err(e) => set_error(&e),
    }
}
