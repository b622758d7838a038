//! C ABI over the spuriousness library.
//!
//! Joints are opaque `SpurJoint` handles created by `spur_joint_new` or
//! `spur_joint_load` and released with `spur_joint_free`. Every fallible call
//! returns a `SpurStatus`; on failure the message is available from
//! `spur_last_error` on the same thread until the next failing call.
//! Panics never cross the boundary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{self, AssertUnwindSafe};

use spuriousness::blackwell::blackwell_sufficient;
use spuriousness::dist::{load_joint_pmf, Axis, JointPmf3};
use spuriousness::pid::{pid_decompose, solve_unique_information, SolverConfig};
use spuriousness::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpurStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidDistribution = 3,
    Io = 4,
    Parse = 5,
    Solver = 6,
    Panic = 7,
}

/// Which source the unique information is attributed to.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpurSource {
    /// `Uni(Y; F | B)`.
    Core = 0,
    /// `Uni(Y; B | F)`.
    Spurious = 1,
}

/// Opaque joint pmf over `(Y, F, B)`.
pub struct SpurJoint(JointPmf3);

/// Decomposition terms in bits; negative round-off is clamped to 0.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SpurPid {
    pub uni_b_given_f: f64,
    pub uni_f_given_b: f64,
    pub redundancy: f64,
    pub synergy: f64,
    pub total_mi: f64,
    /// Largest duality gap of the two solves.
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SpurBlackwell {
    pub sufficient: bool,
    /// ℓ1 residual of the best garbling found.
    pub residual: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(SpurStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidArgument(_) | Error::DimensionMismatch { .. } | Error::Unsupported(_) => {
                SpurStatus::InvalidArgument
            }
            Error::InvalidDistribution(_) | Error::DivergenceUndefined { .. } => SpurStatus::InvalidDistribution,
            Error::Io(_) => SpurStatus::Io,
            Error::Parse { .. } | Error::Csv(_) | Error::Json(_) => SpurStatus::Parse,
            _ => SpurStatus::Solver,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(SpurStatus::NullPointer, format!("{what} is null"))
}

fn set_last_error(message: String) {
    // Interior NULs would truncate the C string; replace them.
    let c = CString::new(message.replace('\0', " ")).expect("no interior NUL");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SpurStatus {
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SpurStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {message}"));
            SpurStatus::Panic
        }
    }
}

unsafe fn joint_ref<'a>(joint: *const SpurJoint) -> Result<&'a JointPmf3, Failure> {
    joint.as_ref().map(|j| &j.0).ok_or_else(|| null("joint"))
}

fn solver_config(tolerance: f64) -> Result<SolverConfig, Failure> {
    let cfg = SolverConfig::default().with_tolerance(tolerance);
    cfg.validate()?;
    Ok(cfg)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn spur_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version contains NUL"),
    };
    VERSION.as_ptr()
}

/// Message of the last failure on this thread, or null. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn spur_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Builds a joint from `mass[(y·nf + f)·nb + b]` with `dims = {ny, nf, nb}`.
/// Mass off by more than round-off from 1 is rejected.
///
/// # Safety
/// `dims` must point to 3 values, `mass` to `len` values and `out` to
/// writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn spur_joint_new(
    dims: *const usize,
    mass: *const f64,
    len: usize,
    out: *mut *mut SpurJoint,
) -> SpurStatus {
    guard(|| {
        if dims.is_null() {
            return Err(null("dims"));
        }
        if mass.is_null() {
            return Err(null("mass"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let dims: [usize; 3] = std::slice::from_raw_parts(dims, 3).try_into().expect("three dims");
        let expected = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
        if expected != Some(len) {
            return Err(Failure(
                SpurStatus::InvalidArgument,
                format!("dims {dims:?} do not match {len} mass values"),
            ));
        }
        let joint = JointPmf3::new(dims, std::slice::from_raw_parts(mass, len).to_vec())?;
        *out = Box::into_raw(Box::new(SpurJoint(joint)));
        Ok(())
    })
}

/// Loads a joint from a `y,f,b,p` CSV file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn spur_joint_load(path: *const c_char, out: *mut *mut SpurJoint) -> SpurStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Failure(SpurStatus::InvalidArgument, "path is not UTF-8".into()))?;
        *out = Box::into_raw(Box::new(SpurJoint(load_joint_pmf(path)?)));
        Ok(())
    })
}

/// Releases a joint; null is ignored.
///
/// # Safety
/// `joint` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn spur_joint_free(joint: *mut SpurJoint) {
    if !joint.is_null() {
        drop(Box::from_raw(joint));
    }
}

/// Writes `{ny, nf, nb}`.
///
/// # Safety
/// `joint` must be a live handle and `dims` writable for 3 values.
#[no_mangle]
pub unsafe extern "C" fn spur_joint_dims(joint: *const SpurJoint, dims: *mut usize) -> SpurStatus {
    guard(|| {
        let j = joint_ref(joint)?;
        if dims.is_null() {
            return Err(null("dims"));
        }
        std::slice::from_raw_parts_mut(dims, 3).copy_from_slice(&j.dims());
        Ok(())
    })
}

/// Unique information of `source` in bits. A solve that stops before the
/// gap reaches `tolerance` is reported as `SpurStatus::Solver`.
///
/// # Safety
/// `joint` must be a live handle and `bits` writable.
#[no_mangle]
pub unsafe extern "C" fn spur_unique_information(
    joint: *const SpurJoint,
    source: SpurSource,
    tolerance: f64,
    bits: *mut f64,
) -> SpurStatus {
    guard(|| {
        let j = joint_ref(joint)?;
        if bits.is_null() {
            return Err(null("bits"));
        }
        let axis = match source {
            SpurSource::Core => Axis::F,
            SpurSource::Spurious => Axis::B,
        };
        let u = solve_unique_information(j, axis, &solver_config(tolerance)?)?;
        if !u.diagnostics.converged {
            return Err(Failure(
                SpurStatus::Solver,
                format!("solver stopped with gap {} after {} iterations", u.diagnostics.gap, u.diagnostics.iterations),
            ));
        }
        *bits = u.bits;
        Ok(())
    })
}

/// Four-term decomposition in bits. Non-convergence is reported through
/// `SpurPid::converged`, not as an error.
///
/// # Safety
/// `joint` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn spur_pid_decompose(joint: *const SpurJoint, tolerance: f64, out: *mut SpurPid) -> SpurStatus {
    guard(|| {
        let j = joint_ref(joint)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let r = pid_decompose(j, &solver_config(tolerance)?)?.report();
        *out = SpurPid {
            uni_b_given_f: r.uni_b_given_f,
            uni_f_given_b: r.uni_f_given_b,
            redundancy: r.redundancy,
            synergy: r.synergy,
            total_mi: r.total_mi,
            gap: r.gap,
            iterations: r.iterations,
            converged: r.converged,
        };
        Ok(())
    })
}

/// Decides whether `F` is Blackwell sufficient for `B`. When `garbling` is
/// non-null the best channel found is written row-major as `nf × nb` values;
/// `garbling_len` must then be at least `nf·nb`.
///
/// # Safety
/// `joint` must be a live handle, `out` writable, and `garbling` either null
/// or writable for `garbling_len` values.
#[no_mangle]
pub unsafe extern "C" fn spur_blackwell_sufficient(
    joint: *const SpurJoint,
    tolerance: f64,
    out: *mut SpurBlackwell,
    garbling: *mut f64,
    garbling_len: usize,
) -> SpurStatus {
    guard(|| {
        let j = joint_ref(joint)?;
        if out.is_null() {
            return Err(null("out"));
        }
        if !(tolerance >= 0.0) {
            return Err(Failure(SpurStatus::InvalidArgument, "tolerance must be >= 0".into()));
        }
        let v = blackwell_sufficient(j, tolerance)?;
        let matrix = v.certificate.garbling.matrix();
        if !garbling.is_null() {
            if garbling_len < matrix.len() {
                return Err(Failure(
                    SpurStatus::InvalidArgument,
                    format!("garbling buffer holds {garbling_len} values, need {}", matrix.len()),
                ));
            }
            std::slice::from_raw_parts_mut(garbling, matrix.len()).copy_from_slice(matrix);
        }
        *out = SpurBlackwell {
            sufficient: v.sufficient,
            residual: v.certificate.residual,
        };
        Ok(())
    })
}
