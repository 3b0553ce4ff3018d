use std::ffi::{CStr, CString};
use std::ptr;

use snmono_ffi::*;

fn last_error() -> String {
    let p = snmono_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn product_space_forms() {
    unsafe {
        let mut sp = ptr::null_mut();
        assert_eq!(snmono_space_product(2, SnmonoNorm::Euclidean, &mut sp), SnmonoStatus::Ok);
        let mut dim = 0;
        assert_eq!(snmono_space_dim(sp, &mut dim), SnmonoStatus::Ok);
        assert_eq!(dim, 4);
        let mut ok = 0;
        assert_eq!(snmono_space_validate(sp, &mut ok), SnmonoStatus::Ok);
        assert_eq!(ok, 1);
        let b = [1.0, 2.0, 3.0, -1.0];
        let (mut q, mut r) = (0.0, 0.0);
        assert_eq!(snmono_space_q(sp, b.as_ptr(), 4, &mut q), SnmonoStatus::Ok);
        assert_eq!(snmono_space_r(sp, b.as_ptr(), 4, &mut r), SnmonoStatus::Ok);
        assert!((q - 1.0).abs() < 1e-12);
        assert!((r - (0.5 * 15.0 + 1.0)).abs() < 1e-12);
        assert_eq!(snmono_space_q(sp, b.as_ptr(), 3, &mut q), SnmonoStatus::DimensionMismatch);
        assert!(!last_error().is_empty());
        snmono_space_free(sp);
    }
}

#[test]
fn space_json_roundtrip_and_parse_error() {
    unsafe {
        let good = CString::new(r#"{"dim":2,"norm":{"product":["euclidean","euclidean"]},"L":[[0,1],[1,0]]}"#).unwrap();
        let mut sp = ptr::null_mut();
        assert_eq!(snmono_space_from_json(good.as_ptr(), &mut sp), SnmonoStatus::Ok);
        let mut dim = 0;
        snmono_space_dim(sp, &mut dim);
        assert_eq!(dim, 2);
        snmono_space_free(sp);
        let bad = CString::new("{not json").unwrap();
        let mut sp2 = ptr::null_mut();
        assert_eq!(snmono_space_from_json(bad.as_ptr(), &mut sp2), SnmonoStatus::Parse);
        assert!(sp2.is_null());
    }
}

#[test]
fn null_arguments_are_rejected() {
    unsafe {
        let mut dim = 0;
        assert_eq!(snmono_space_dim(ptr::null(), &mut dim), SnmonoStatus::NullPointer);
        assert_eq!(snmono_space_from_json(ptr::null(), ptr::null_mut()), SnmonoStatus::NullPointer);
        assert_eq!(snmono_set_identity_graph(0, ptr::null_mut()), SnmonoStatus::InvalidArgument);
        snmono_space_free(ptr::null_mut());
        snmono_set_free(ptr::null_mut());
        snmono_string_free(ptr::null_mut());
    }
}

#[test]
fn identity_graph_gap_phi_and_certificate() {
    unsafe {
        let mut set = ptr::null_mut();
        assert_eq!(snmono_set_identity_graph(1, &mut set), SnmonoStatus::Ok);
        let c = [1.0, -1.0];
        let mut gap = f64::NAN;
        let mut m = [0.0; 2];
        assert_eq!(snmono_set_density_gap(set, c.as_ptr(), 2, 3, &mut gap, m.as_mut_ptr()), SnmonoStatus::Ok);
        assert!(gap.abs() < 1e-8, "{gap}");
        let mut v = 0.0;
        let b = [1.0, 3.0];
        assert_eq!(snmono_set_phi(set, b.as_ptr(), 2, &mut v), SnmonoStatus::Ok);
        assert!((v - 4.0).abs() < 1e-6, "{v}");
        let probes = [1.0, -1.0, 0.5, 2.0, -3.0, 0.0];
        let (mut qd, mut worst) = (0, f64::NAN);
        assert_eq!(
            snmono_set_certify(set, probes.as_ptr(), 3, 2, 1e-8, 0, &mut qd, &mut worst),
            SnmonoStatus::Ok
        );
        assert_eq!(qd, 1);
        let mut s = ptr::null_mut();
        assert_eq!(snmono_set_to_json(set, &mut s), SnmonoStatus::Ok);
        let text = CStr::from_ptr(s).to_str().unwrap().to_owned();
        snmono_string_free(s);
        let cj = CString::new(text).unwrap();
        let mut back = ptr::null_mut();
        assert_eq!(snmono_set_from_json(cj.as_ptr(), ptr::null(), &mut back), SnmonoStatus::Ok);
        let mut dim = 0;
        snmono_set_dim(back, &mut dim);
        assert_eq!(dim, 2);
        snmono_set_free(back);
        snmono_set_free(set);
    }
}

#[test]
fn cli_exit_codes() {
    let args: Vec<CString> = ["snmono", "--bogus"].iter().map(|s| CString::new(*s).unwrap()).collect();
    let ptrs: Vec<_> = args.iter().map(|a| a.as_ptr()).collect();
    let mut code = -1;
    assert_eq!(unsafe { snmono_cli_run(ptrs.len(), ptrs.as_ptr(), &mut code) }, SnmonoStatus::Ok);
    assert_eq!(code, 2);
}

#[test]
fn version_is_set() {
    let v = unsafe { CStr::from_ptr(snmono_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_entry_point() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/snmono.h")).unwrap();
    for f in ["snmono_space_product", "snmono_set_density_gap", "snmono_set_certify", "snmono_last_error", "SNMONO_STATUS_PANIC"] {
        assert!(h.contains(f), "{f}");
    }
}
