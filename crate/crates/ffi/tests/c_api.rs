use std::ffi::{c_char, CStr};
use std::ptr;

use cx_ffi::*;

fn last_error() -> String {
    let len = unsafe { cx_last_error_message(ptr::null_mut(), 0) };
    let mut buf = vec![0 as c_char; len + 1];
    let written = unsafe { cx_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert_eq!(written, len);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn nondiv(p: f64, n: u32, stage: i32) -> *mut CxInstance {
    let mut inst = ptr::null_mut();
    let status = unsafe { cx_nondiv_new(p, n, stage, &mut inst) };
    assert_eq!(status, CxStatus::Ok, "{}", last_error());
    assert!(!inst.is_null());
    inst
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(cx_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn nondiv_coefficients_for_p4() {
    let inst = nondiv(4.0, 16, CX_STAGE_FULL);
    let s = 1.0 / 3f64.sqrt();
    let mut m = [0.0; 4];
    assert_eq!(
        unsafe { cx_instance_coefficients(inst, 1, m.as_mut_ptr()) },
        CxStatus::Ok
    );
    for (got, want) in m.iter().zip([4.0 / 3.0, s, s, 1.0]) {
        assert!((got - want).abs() < 1e-12, "{m:?}");
    }
    assert_eq!(
        unsafe { cx_instance_coefficients(inst, 2, m.as_mut_ptr()) },
        CxStatus::Ok
    );
    assert!((m[1] + s).abs() < 1e-12 && (m[2] + s).abs() < 1e-12);
    let mut delta = 0.0;
    assert_eq!(unsafe { cx_instance_delta(inst, &mut delta) }, CxStatus::Ok);
    assert!(delta > 0.0);
    unsafe { cx_instance_free(inst) };
}

#[test]
fn strong_residual_vanishes_off_axes() {
    let inst = nondiv(3.0, 16, CX_STAGE_FULL);
    for x in [[0.3, 0.2], [-0.7, 0.05], [-0.1, -1.3], [1.9, -0.4]] {
        let mut r = f64::NAN;
        let status = unsafe { cx_instance_strong_residual(inst, x[0], x[1], &mut r) };
        assert_eq!(status, CxStatus::Ok, "{}", last_error());
        assert!(r.abs() < 1e-8, "residual {r} at {x:?}");
    }
    let mut jet = CxJet::default();
    assert_eq!(
        unsafe { cx_instance_solution_jet(inst, 0.3, 0.2, &mut jet) },
        CxStatus::Ok
    );
    assert!(jet.value.is_finite() && !jet.on_interface);
    assert_eq!(jet.hessian[1], jet.hessian[2]);
    unsafe { cx_instance_free(inst) };
}

#[test]
fn residual_suite_passes_and_is_reproducible() {
    let inst = nondiv(4.0, 16, CX_STAGE_FULL);
    let mut a = CxResidualSummary {
        max: 0.0,
        p99: 0.0,
        samples: 0,
        pass: false,
    };
    let mut b = a;
    unsafe {
        assert_eq!(cx_instance_residual_suite(inst, 500, 7, &mut a), CxStatus::Ok);
        assert_eq!(cx_instance_residual_suite(inst, 500, 7, &mut b), CxStatus::Ok);
        cx_instance_free(inst);
    }
    assert!(a.pass && a.max < 1e-8);
    assert_eq!(a.samples, 500);
    assert_eq!(a, b);
}

#[test]
fn blowup_slope_is_positive() {
    let n = [16u32, 64, 256, 1024];
    let mut out = CxBlowupSummary {
        slope: 0.0,
        intercept: 0.0,
        r_squared: 0.0,
        increment_spread: 0.0,
        plateau_slope: 0.0,
        rows: 0,
        converged_rows: 0,
    };
    let status = unsafe { cx_blowup(4.0, n.as_ptr(), n.len(), 1e-8, &mut out) };
    assert_eq!(status, CxStatus::Ok, "{}", last_error());
    assert_eq!(out.rows, 4);
    assert_eq!(out.converged_rows, 4);
    assert!(out.r_squared >= 0.999);
    assert!((out.slope / out.plateau_slope - 1.0).abs() < 1e-6);
}

#[test]
fn errors_report_status_and_message() {
    let mut inst = ptr::null_mut();
    assert_eq!(
        unsafe { cx_nondiv_new(2.0, 16, CX_STAGE_FULL, &mut inst) },
        CxStatus::InvalidArgument
    );
    assert!(inst.is_null());
    assert!(last_error().contains("p = 2"));

    assert_eq!(
        unsafe { cx_nondiv_new(4.0, 16, 9, &mut inst) },
        CxStatus::InvalidArgument
    );
    assert!(last_error().contains("stage"));

    assert_eq!(
        unsafe { cx_div_new(4.0, 16, ptr::null_mut()) },
        CxStatus::NullPointer
    );
    assert_eq!(
        unsafe { cx_instance_delta(ptr::null(), &mut 0.0) },
        CxStatus::NullPointer
    );

    let inst = nondiv(4.0, 16, CX_STAGE_FULL);
    let mut r = 0.0;
    assert_eq!(
        unsafe { cx_instance_strong_residual(inst, f64::NAN, 0.0, &mut r) },
        CxStatus::Singular
    );
    let mut m = [0.0; 4];
    assert_eq!(
        unsafe { cx_instance_coefficients(inst, 5, m.as_mut_ptr()) },
        CxStatus::InvalidArgument
    );
    unsafe { cx_instance_free(inst) };

    let mut div = ptr::null_mut();
    assert_eq!(unsafe { cx_div_new(4.0, 16, &mut div) }, CxStatus::Ok);
    assert_eq!(
        unsafe { cx_instance_strong_residual(div, 0.3, 0.2, &mut r) },
        CxStatus::InvalidArgument
    );
    unsafe { cx_instance_free(div) };
    unsafe { cx_instance_free(ptr::null_mut()) };
}

#[test]
fn error_message_truncates_to_buffer() {
    let mut inst = ptr::null_mut();
    unsafe { cx_ps_new(-1.0, 1.0, &mut inst) };
    let full = last_error();
    let mut buf = [0x7f as c_char; 8];
    let len = unsafe { cx_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert_eq!(len, full.len());
    let short = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap();
    assert_eq!(short, &full[..7]);
}

#[test]
fn ps_instance_is_harmonic_per_sector() {
    let mut inst = ptr::null_mut();
    assert_eq!(
        unsafe { cx_ps_new(std::f64::consts::FRAC_PI_6, 1.0, &mut inst) },
        CxStatus::Ok
    );
    let mut r = f64::NAN;
    assert_eq!(
        unsafe { cx_instance_strong_residual(inst, 0.4, 0.3, &mut r) },
        CxStatus::Ok
    );
    assert!(r.abs() < 1e-10);
    unsafe { cx_instance_free(inst) };
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/cx.h");
    let source = include_str!("../src/lib.rs");
    let exports: Vec<&str> = source
        .split("extern \"C\" fn ")
        .skip(1)
        .map(|s| s.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 10);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    for name in ["CX_STATUS_PANIC", "CX_STAGE_FULL", "typedef struct CxInstance CxInstance"] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
