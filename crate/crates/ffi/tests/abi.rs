use std::ffi::{CStr, CString};
use std::io::Write;
use std::ptr;

use spuriousness_ffi::*;

fn last_error() -> String {
    let p = spur_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

/// `Y = F ∧ B` with independent uniform bits.
fn and_gate_mass() -> Vec<f64> {
    let mut mass = vec![0.0; 8];
    for f in 0..2 {
        for b in 0..2 {
            mass[((f & b) * 2 + f) * 2 + b] = 0.25;
        }
    }
    mass
}

fn new_joint(dims: [usize; 3], mass: &[f64]) -> *mut SpurJoint {
    let mut handle = ptr::null_mut();
    let status = unsafe { spur_joint_new(dims.as_ptr(), mass.as_ptr(), mass.len(), &mut handle) };
    assert_eq!(status, SpurStatus::Ok, "{}", last_error());
    handle
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(spur_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn and_gate_decomposition() {
    let j = new_joint([2, 2, 2], &and_gate_mass());
    let mut out = SpurPid::default();
    assert_eq!(unsafe { spur_pid_decompose(j, 1e-9, &mut out) }, SpurStatus::Ok);
    assert!(out.converged);
    assert!(out.uni_b_given_f.abs() < 1e-6 && out.uni_f_given_b.abs() < 1e-6);
    // I(Y;F) = H(Y) − H(Y|F) = h(1/4) − 1/2 with no unique part.
    let h = |p: f64| -p * p.log2() - (1.0 - p) * (1.0 - p).log2();
    assert!((out.redundancy - (h(0.25) - 0.5)).abs() < 1e-6);
    assert!((out.total_mi - h(0.25)).abs() < 1e-12);

    let mut bits = f64::NAN;
    assert_eq!(
        unsafe { spur_unique_information(j, SpurSource::Spurious, 1e-9, &mut bits) },
        SpurStatus::Ok
    );
    assert!(bits.abs() < 1e-6);
    unsafe { spur_joint_free(j) };
}

#[test]
fn dims_round_trip() {
    let mass = vec![1.0 / 12.0; 12];
    let j = new_joint([2, 3, 2], &mass);
    let mut dims = [0usize; 3];
    assert_eq!(unsafe { spur_joint_dims(j, dims.as_mut_ptr()) }, SpurStatus::Ok);
    assert_eq!(dims, [2, 3, 2]);
    unsafe { spur_joint_free(j) };
}

#[test]
fn blackwell_writes_garbling() {
    // F = Y, B = F through a BSC(0.1).
    let mut mass = vec![0.0; 8];
    for y in 0..2 {
        for b in 0..2 {
            mass[(y * 2 + y) * 2 + b] = 0.5 * if b == y { 0.9 } else { 0.1 };
        }
    }
    let j = new_joint([2, 2, 2], &mass);
    let mut out = SpurBlackwell::default();
    let mut t = [f64::NAN; 4];
    assert_eq!(
        unsafe { spur_blackwell_sufficient(j, 1e-8, &mut out, t.as_mut_ptr(), t.len()) },
        SpurStatus::Ok
    );
    assert!(out.sufficient && out.residual < 1e-12);
    for (got, want) in t.iter().zip([0.9, 0.1, 0.1, 0.9]) {
        assert!((got - want).abs() < 1e-12);
    }

    let mut short = [0.0; 3];
    let status = unsafe { spur_blackwell_sufficient(j, 1e-8, &mut out, short.as_mut_ptr(), short.len()) };
    assert_eq!(status, SpurStatus::InvalidArgument);
    assert!(last_error().contains("need 4"));
    unsafe { spur_joint_free(j) };
}

#[test]
fn bad_inputs_map_to_status_codes() {
    let mut handle = ptr::null_mut();
    let dims = [2usize, 2, 2];
    let mass = [0.5; 8];
    let status = unsafe { spur_joint_new(dims.as_ptr(), mass.as_ptr(), mass.len(), &mut handle) };
    assert_eq!(status, SpurStatus::InvalidDistribution);
    assert!(handle.is_null());
    assert!(last_error().contains("total mass"));

    let status = unsafe { spur_joint_new(dims.as_ptr(), mass.as_ptr(), 7, &mut handle) };
    assert_eq!(status, SpurStatus::InvalidArgument);

    let status = unsafe { spur_joint_new(ptr::null(), mass.as_ptr(), 8, &mut handle) };
    assert_eq!(status, SpurStatus::NullPointer);
    assert_eq!(last_error(), "dims is null");

    let mut pid = SpurPid::default();
    assert_eq!(unsafe { spur_pid_decompose(ptr::null(), 1e-9, &mut pid) }, SpurStatus::NullPointer);

    let j = new_joint([2, 2, 2], &and_gate_mass());
    assert_eq!(unsafe { spur_pid_decompose(j, 0.0, &mut pid) }, SpurStatus::InvalidArgument);
    unsafe { spur_joint_free(j) };
    unsafe { spur_joint_free(ptr::null_mut()) };
}

#[test]
fn load_from_csv() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(file, "y,f,b,p\n0,0,0,0.5\n1,1,1,0.5").unwrap();
    let path = CString::new(file.path().to_str().unwrap()).unwrap();
    let mut handle = ptr::null_mut();
    assert_eq!(unsafe { spur_joint_load(path.as_ptr(), &mut handle) }, SpurStatus::Ok);
    let mut out = SpurPid::default();
    assert_eq!(unsafe { spur_pid_decompose(handle, 1e-9, &mut out) }, SpurStatus::Ok);
    assert!((out.redundancy - 1.0).abs() < 1e-6);
    unsafe { spur_joint_free(handle) };

    let missing = CString::new("/nonexistent/joint.csv").unwrap();
    assert_eq!(unsafe { spur_joint_load(missing.as_ptr(), &mut handle) }, SpurStatus::Io);
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/spuriousness.h")).unwrap();
    for symbol in [
        "SPURIOUSNESS_H",
        "typedef struct SpurJoint SpurJoint;",
        "SPUR_STATUS_OK = 0",
        "SPUR_STATUS_PANIC = 7",
        "spur_version(void)",
        "spur_last_error(void)",
        "spur_joint_new(",
        "spur_joint_load(",
        "spur_joint_free(",
        "spur_joint_dims(",
        "spur_unique_information(",
        "spur_pid_decompose(",
        "spur_blackwell_sufficient(",
    ] {
        assert!(header.contains(symbol), "header lacks {symbol}");
    }
}
