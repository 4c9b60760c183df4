use bfexact_ffi::*;
use std::ffi::{CStr, CString};
use std::ptr;

fn last_error() -> String {
    let p = bf_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn solved(n1: u32, n2: u32, alpha: f64) -> *mut BfTable {
    let mut t = ptr::null_mut();
    let s = unsafe { bf_solve_ideal(n1, n2, alpha, 0.0, &mut t) };
    assert_eq!(s, BfStatus::Ok);
    assert!(!t.is_null());
    t
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(bf_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn ideal_table_is_similar_through_the_abi() {
    let t = solved(6, 6, 0.05);
    let mut info = BfTableInfo::default();
    assert_eq!(unsafe { bf_table_info(t, &mut info) }, BfStatus::Ok);
    assert_eq!((info.n1, info.n2, info.family), (6, 6, 0));
    assert!(info.converged && info.len == 91);
    for g in [0.0, 0.3, 0.77, 1.0] {
        let mut p = 0.0;
        assert_eq!(unsafe { bf_prob_v_below(t, g, &mut p) }, BfStatus::Ok);
        assert!((p - 0.95).abs() < 2e-4, "gamma {g}: {p}");
    }
    let mut vals = vec![0.0; info.len];
    assert_eq!(unsafe { bf_table_values(t, ptr::null_mut(), vals.as_mut_ptr(), info.len) }, BfStatus::Ok);
    let mut mid = 0.0;
    assert_eq!(unsafe { bf_table_value_at_c(t, 0.5, &mut mid) }, BfStatus::Ok);
    assert!(vals.iter().all(|v| v.is_finite() && *v > 1.5));
    let (mut pt, mut pv) = (0.0, 0.0);
    assert_eq!(unsafe { bf_power(t, 1.0, 0.0, &mut pt, &mut pv) }, BfStatus::Ok);
    assert!((pt - 0.1).abs() < 1e-12 && (pv - 0.1).abs() < 1e-3);
    unsafe { bf_table_free(t) };
}

#[test]
fn table_file_round_trip() {
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { bf_solve_fb(4, 5, 0.025, &mut t) }, BfStatus::Ok);
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("fb.csv").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { bf_table_write(t, path.as_ptr()) }, BfStatus::Ok);
    let mut back = ptr::null_mut();
    assert_eq!(unsafe { bf_table_read(path.as_ptr(), &mut back) }, BfStatus::Ok);
    let (mut a, mut b) = (vec![0.0; 91], vec![0.0; 91]);
    unsafe {
        assert_eq!(bf_table_values(t, ptr::null_mut(), a.as_mut_ptr(), 91), BfStatus::Ok);
        assert_eq!(bf_table_values(back, ptr::null_mut(), b.as_mut_ptr(), 91), BfStatus::Ok);
        let mut info = BfTableInfo::default();
        bf_table_info(back, &mut info);
        assert_eq!(info.family, 1);
        bf_table_free(t);
        bf_table_free(back);
    }
    assert_eq!(a, b);
}

#[test]
fn fb_probability_limits() {
    let mut p = 0.0;
    assert_eq!(unsafe { bf_fb_prob(5, 5, 40.0, 0.0, &mut p) }, BfStatus::Ok);
    assert!((p - 0.5).abs() < 1e-10);
    assert_eq!(unsafe { bf_fb_prob(BF_N_INFINITE, 5, 90.0, 1.959963984540054, &mut p) }, BfStatus::Ok);
    assert!((p - 0.975).abs() < 1e-8);
}

#[test]
fn errors_map_to_codes_and_messages() {
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { bf_solve_ideal(1, 5, 0.05, 0.0, &mut t) }, BfStatus::InvalidArgument);
    assert!(t.is_null());
    assert!(last_error().contains("design"));
    assert_eq!(unsafe { bf_solve_fb(4, 4, 0.05, ptr::null_mut()) }, BfStatus::NullPointer);
    assert!(last_error().contains("null"));
    let mut p = 0.0;
    assert_eq!(unsafe { bf_prob_v_below(ptr::null(), 0.5, &mut p) }, BfStatus::NullPointer);
    let missing = CString::new("/nonexistent/dir/t.csv").unwrap();
    assert_eq!(unsafe { bf_table_read(missing.as_ptr(), &mut t) }, BfStatus::Io);
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "# bfexact-table v9\n").unwrap();
    let bad = CString::new(bad.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { bf_table_read(bad.as_ptr(), &mut t) }, BfStatus::Format);
    assert_eq!(unsafe { bf_fb_prob(4, 4, 91.0, 0.0, &mut p) }, BfStatus::InvalidArgument);
    assert_eq!(unsafe { bf_fb_prob(4, 4, 45.0, 0.0, &mut p) }, BfStatus::Ok);
    assert!(bf_last_error().is_null());
    unsafe { bf_table_free(ptr::null_mut()) };
}

#[test]
fn wrong_buffer_length_is_rejected() {
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { bf_solve_fb(3, 3, 0.05, &mut t) }, BfStatus::Ok);
    let mut buf = vec![0.0; 10];
    assert_eq!(unsafe { bf_table_values(t, buf.as_mut_ptr(), ptr::null_mut(), 10) }, BfStatus::InvalidArgument);
    assert!(last_error().contains("length"));
    unsafe { bf_table_free(t) };
}

#[test]
fn header_compiles_and_links_from_c() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if std::process::Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("no C compiler, skipping");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(
        &src,
        r#"#include "bfexact.h"
#include <stdio.h>
int main(void) {
    BfTable *t = NULL;
    if (bf_solve_fb(4, 4, 0.05, &t) != BF_STATUS_OK) return 1;
    BfTableInfo info;
    if (bf_table_info(t, &info) != BF_STATUS_OK || info.len != 91) return 2;
    double v = 0.0;
    if (bf_table_value_at_c(t, 0.5, &v) != BF_STATUS_OK || !(v > 1.0)) return 3;
    bf_table_free(t);
    if (bf_solve_ideal(1, 4, 0.05, 0.0, &t) != BF_STATUS_INVALID_ARGUMENT) return 4;
    printf("%s\n", bf_last_error());
    return 0;
}
"#,
    )
    .unwrap();
    let include = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let status = std::process::Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I", include])
        .arg(&src)
        .status()
        .unwrap();
    assert!(status.success(), "header does not compile");
    let lib_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let so = lib_dir.join("libbfexact_ffi.so");
    if !so.exists() {
        eprintln!("shared library not built at {}, link step skipped", so.display());
        return;
    }
    let exe = dir.path().join("main");
    let status = std::process::Command::new(&cc)
        .args(["-std=c99", "-I", include])
        .arg(&src)
        .arg("-o")
        .arg(&exe)
        .arg(format!("-L{}", lib_dir.display()))
        .arg("-lbfexact_ffi")
        .arg(format!("-Wl,-rpath,{}", lib_dir.display()))
        .status()
        .unwrap();
    assert!(status.success(), "link failed");
    let out = std::process::Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "C program exit {:?}", out.status);
    assert!(String::from_utf8_lossy(&out.stdout).contains("design"));
}
