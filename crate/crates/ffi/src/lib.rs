//! C ABI for cx-core.
//!
//! Every entry point returns a [`CxStatus`] and writes results through
//! out-pointers. On failure the message is kept per thread and read back with
//! [`cx_last_error_message`]. Panics are caught at the boundary and reported
//! as [`CxStatus::Panic`].
//!
//! Instances are opaque heap handles: create with `cx_*_new`, release with
//! [`cx_instance_free`].

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use cx_core::construct::{
    blowup_study, build_div, build_nondiv, build_ps, CounterexampleInstance, InstanceKind, Stage,
};
use cx_core::error::CxError;
use cx_core::geom::Quadrant;
use cx_core::operators::apply_nondiv;
use cx_core::quadrature::QuadratureError;
use cx_core::verify::{residual_suite, Tolerances};

/// Result of every call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CxStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = -1,
    /// A parameter is out of range or the instance kind does not support the call.
    InvalidArgument = -2,
    /// The point is singular for the field or not finite.
    Singular = -3,
    /// A matrix is singular or the coefficients are not elliptic.
    Degenerate = -4,
    /// Quadrature exhausted its cell budget.
    NotConverged = -5,
    /// A Rust panic was caught.
    Panic = -99,
}

pub const CX_STAGE_QUADRANT: i32 = 0;
pub const CX_STAGE_HALF: i32 = 1;
pub const CX_STAGE_FULL: i32 = 2;

/// Opaque instance handle.
pub struct CxInstance {
    inner: CounterexampleInstance,
}

/// Value, gradient and Hessian of a field at a point.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CxJet {
    pub value: f64,
    pub gradient: [f64; 2],
    /// Row-major `[h11, h12, h21, h22]`.
    pub hessian: [f64; 4],
    /// The point lies on an interface; the jet is a one-sided limit.
    pub on_interface: bool,
}

/// Summary of a blow-up study. Fields without a value are NaN.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CxBlowupSummary {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub increment_spread: f64,
    /// Closed-form growth rate of the plateau annulus.
    pub plateau_slope: f64,
    pub rows: usize,
    pub converged_rows: usize,
}

/// Summary of the strong-residual suite.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CxResidualSummary {
    pub max: f64,
    pub p99: f64,
    pub samples: usize,
    pub pass: bool,
}

struct FfiError {
    status: CxStatus,
    message: String,
}

impl From<CxError> for FfiError {
    fn from(e: CxError) -> Self {
        let status = match &e {
            CxError::InvalidParameter { .. } | CxError::WrongKind(_) | CxError::OrderTooHigh { .. } => {
                CxStatus::InvalidArgument
            }
            CxError::Singular { .. } | CxError::NonFinite { .. } => CxStatus::Singular,
            CxError::SingularMatrix { .. } | CxError::NonElliptic { .. } => CxStatus::Degenerate,
            CxError::Quadrature(QuadratureError::NotConverged { .. }) => CxStatus::NotConverged,
            CxError::Quadrature(QuadratureError::NonFinite { .. }) => CxStatus::Singular,
            CxError::Quadrature(_) => CxStatus::InvalidArgument,
        };
        FfiError {
            status,
            message: e.to_string(),
        }
    }
}

fn null(name: &str) -> FfiError {
    FfiError {
        status: CxStatus::NullPointer,
        message: format!("{name} is null"),
    }
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_last_error(message: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = message);
}

fn guard(f: impl FnOnce() -> Result<(), FfiError>) -> CxStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CxStatus::Ok,
        Ok(Err(e)) => {
            set_last_error(e.message);
            e.status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {message}"));
            CxStatus::Panic
        }
    }
}

/// # Safety
/// `ptr` must be null or valid for writes of `T`.
unsafe fn write_out<T>(ptr: *mut T, name: &str, value: T) -> Result<(), FfiError> {
    if ptr.is_null() {
        return Err(null(name));
    }
    ptr.write(value);
    Ok(())
}

/// # Safety
/// `ptr` must be null or a live handle from `cx_*_new`.
unsafe fn instance<'a>(ptr: *const CxInstance) -> Result<&'a CounterexampleInstance, FfiError> {
    ptr.as_ref().map(|h| &h.inner).ok_or_else(|| null("instance"))
}

/// # Safety
/// `out` must be null or valid for writes of one pointer.
unsafe fn new_instance(
    out: *mut *mut CxInstance,
    build: impl FnOnce() -> Result<CounterexampleInstance, CxError>,
) -> CxStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = build()?;
        out.write(Box::into_raw(Box::new(CxInstance { inner })));
        Ok(())
    })
}

/// Library version as a NUL-terminated static string.
#[no_mangle]
pub extern "C" fn cx_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy the calling thread's last error message into `buf`.
///
/// Returns the message length in bytes, excluding the terminator. At most
/// `len - 1` bytes are copied and the result is always NUL-terminated when
/// `len > 0`. Pass a null `buf` to query the length.
///
/// # Safety
/// `buf` must be null or valid for writes of `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn cx_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            buf.add(n).write(0);
        }
        msg.len()
    })
}

/// Non-divergence instance for exponent `p > 2` at cutoff scale `n`.
/// `stage` is one of the `CX_STAGE_*` constants.
///
/// # Safety
/// `out` must be valid for writes of one pointer.
#[no_mangle]
pub unsafe extern "C" fn cx_nondiv_new(
    p: f64,
    n: u32,
    stage: i32,
    out: *mut *mut CxInstance,
) -> CxStatus {
    new_instance(out, || {
        let stage = match stage {
            CX_STAGE_QUADRANT => Stage::Quadrant,
            CX_STAGE_HALF => Stage::Half,
            CX_STAGE_FULL => Stage::Full,
            _ => {
                return Err(CxError::InvalidParameter {
                    name: "stage",
                    value: stage as f64,
                    reason: "must be a CX_STAGE_* constant",
                })
            }
        };
        build_nondiv(p, n, stage)
    })
}

/// Divergence instance for exponent `q > 2` at cutoff scale `n`.
///
/// # Safety
/// `out` must be valid for writes of one pointer.
#[no_mangle]
pub unsafe extern "C" fn cx_div_new(q: f64, n: u32, out: *mut *mut CxInstance) -> CxStatus {
    new_instance(out, || build_div(q, n))
}

/// Four-sector instance for angle `theta0` on the ball of `radius`.
///
/// # Safety
/// `out` must be valid for writes of one pointer.
#[no_mangle]
pub unsafe extern "C" fn cx_ps_new(theta0: f64, radius: f64, out: *mut *mut CxInstance) -> CxStatus {
    new_instance(out, || build_ps(theta0, radius))
}

/// Release an instance. Null is ignored.
///
/// # Safety
/// `inst` must be null or a handle from `cx_*_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cx_instance_free(inst: *mut CxInstance) {
    if !inst.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(inst))));
    }
}

/// Jet of the solution at `(x1, x2)`.
///
/// # Safety
/// `inst` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cx_instance_solution_jet(
    inst: *const CxInstance,
    x1: f64,
    x2: f64,
    out: *mut CxJet,
) -> CxStatus {
    guard(|| {
        let inst = instance(inst)?;
        let j = inst.solution.eval_jet([x1, x2])?;
        let [[h11, h12], [h21, h22]] = j.hessian;
        write_out(
            out,
            "out",
            CxJet {
                value: j.value,
                gradient: j.gradient,
                hessian: [h11, h12, h21, h22],
                on_interface: j.on_interface,
            },
        )
    })
}

/// Coefficient matrix of quadrant `quadrant` (1 to 4), row-major into `out[4]`.
///
/// # Safety
/// `inst` must be a live handle; `out` must be valid for writes of 4 doubles.
#[no_mangle]
pub unsafe extern "C" fn cx_instance_coefficients(
    inst: *const CxInstance,
    quadrant: u32,
    out: *mut f64,
) -> CxStatus {
    guard(|| {
        let inst = instance(inst)?;
        let q = match quadrant {
            1 => Quadrant::I,
            2 => Quadrant::II,
            3 => Quadrant::III,
            4 => Quadrant::IV,
            _ => {
                return Err(CxError::InvalidParameter {
                    name: "quadrant",
                    value: quadrant as f64,
                    reason: "must be 1, 2, 3 or 4",
                }
                .into())
            }
        };
        if out.is_null() {
            return Err(null("out"));
        }
        let m = inst.coefficients.get(q);
        std::slice::from_raw_parts_mut(out, 4).copy_from_slice(&[m.a11, m.a12, m.a21, m.a22]);
        Ok(())
    })
}

/// Smallest eigenvalue of the symmetric coefficient parts.
///
/// # Safety
/// `inst` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cx_instance_delta(inst: *const CxInstance, out: *mut f64) -> CxStatus {
    guard(|| write_out(out, "out", instance(inst)?.delta))
}

/// `a^{ij} D_ij u - f` at `(x1, x2)`. Divergence instances are rejected.
///
/// # Safety
/// `inst` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cx_instance_strong_residual(
    inst: *const CxInstance,
    x1: f64,
    x2: f64,
    out: *mut f64,
) -> CxStatus {
    guard(|| {
        let inst = instance(inst)?;
        if inst.kind == InstanceKind::DivFullPlane {
            return Err(CxError::WrongKind("strong residual needs a non-divergence form").into());
        }
        let x = [x1, x2];
        let (lhs, _) = apply_nondiv(&inst.coefficients, &inst.solution, x)?;
        let f = inst.source().value(x)?;
        write_out(out, "out", lhs - f)
    })
}

/// Strong-residual suite with `samples` points drawn from `seed`.
///
/// # Safety
/// `inst` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cx_instance_residual_suite(
    inst: *const CxInstance,
    samples: usize,
    seed: u64,
    out: *mut CxResidualSummary,
) -> CxStatus {
    guard(|| {
        let inst = instance(inst)?;
        let report = residual_suite(inst, samples, seed, &Tolerances::default())?;
        let stat = |k: &str| report.stats.get(k).copied().unwrap_or(f64::NAN);
        write_out(
            out,
            "out",
            CxResidualSummary {
                max: stat("residual_max"),
                p99: stat("residual_p99"),
                samples: stat("samples") as usize,
                pass: report.pass,
            },
        )
    })
}

/// Blow-up study of `||D^2 v_n||_p^p` over the `n_len` scales in `n`.
///
/// # Safety
/// `n` must be valid for reads of `n_len` values; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cx_blowup(
    p: f64,
    n: *const u32,
    n_len: usize,
    tol: f64,
    out: *mut CxBlowupSummary,
) -> CxStatus {
    guard(|| {
        if n.is_null() {
            return Err(null("n"));
        }
        let scales = std::slice::from_raw_parts(n, n_len);
        let report = blowup_study(p, scales, tol)?;
        let reg = report.regression;
        write_out(
            out,
            "out",
            CxBlowupSummary {
                slope: reg.map_or(f64::NAN, |r| r.slope),
                intercept: reg.map_or(f64::NAN, |r| r.intercept),
                r_squared: reg.map_or(f64::NAN, |r| r.r_squared),
                increment_spread: report.increment_spread.unwrap_or(f64::NAN),
                plateau_slope: report.plateau_slope,
                rows: report.rows.len(),
                converged_rows: report.rows.iter().filter(|r| r.converged).count(),
            },
        )
    })
}
