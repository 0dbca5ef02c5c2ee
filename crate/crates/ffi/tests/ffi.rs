use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use circ_manova_ffi::*;

fn last_error() -> String {
    let p = cm_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

fn sample(p: usize, sizes: &[usize], data: &[f64]) -> Result<*mut CmSample, CmStatus> {
    let mut out = ptr::null_mut();
    let st = unsafe { cm_sample_new(p, sizes.len(), sizes.as_ptr(), data.as_ptr(), &mut out) };
    if st == CmStatus::Ok {
        Ok(out)
    } else {
        Err(st)
    }
}

#[test]
fn worked_example_through_handles() {
    let s = sample(1, &[2, 2], &[0.0, 2.0, 1.0, 3.0]).unwrap();
    let (mut lambda, mut w, mut pv) = (0.0, 0.0, 0.0);
    assert_eq!(unsafe { cm_lrt(s, &mut lambda, &mut w) }, CmStatus::Ok);
    assert!((lambda - 0.8).abs() < 1e-15);
    assert!((w + 0.8f64.ln()).abs() < 1e-15);
    assert_eq!(unsafe { cm_lrt_test(s, CmMethod::Exact, &mut lambda, &mut pv) }, CmStatus::Ok);
    assert!(pv > 0.0 && pv < 1.0);
    unsafe { cm_sample_free(s) };
}

#[test]
fn error_codes_and_messages() {
    assert_eq!(sample(1, &[1, 1], &[0.0, 1.0]).unwrap_err(), CmStatus::InvalidInput);
    assert!(last_error().contains("must exceed"));

    let mut law = ptr::null_mut();
    let st = unsafe { cm_null_law_new(10, 3, 6, CmMethod::Egig, &mut law) };
    assert_eq!(st, CmStatus::Ok);
    let mut z = 0.0;
    assert_eq!(unsafe { cm_null_law_quantile(law, 1.5, &mut z) }, CmStatus::InvalidParameters);
    unsafe { cm_null_law_free(law) };

    let st = unsafe { cm_null_law_new(10, 2, 6, CmMethod::Egig, &mut law) };
    assert_eq!(st, CmStatus::Unsupported);

    let st = unsafe { cm_lrt(ptr::null(), &mut z, &mut z) };
    assert_eq!(st, CmStatus::NullPointer);
    assert!(last_error().contains("sample"));

    let s = sample(2, &[2, 2, 2], &[0.0, 1.0, 2.0, 0.5, 1.0, 1.0, 3.0, 2.0, 0.2, 0.1, 0.4, 4.0]).unwrap();
    let (mut t, mut pv) = (0.0, 0.0);
    assert_eq!(unsafe { cm_competitor(s, CmCompetitor::ChenQin, &mut t, &mut pv) }, CmStatus::Unsupported);
    unsafe { cm_sample_free(s) };
    unsafe { cm_sample_free(ptr::null_mut()) };
}

#[test]
fn quantile_and_cdf_round_trip() {
    let mut law = ptr::null_mut();
    assert_eq!(unsafe { cm_null_law_new(12, 4, 7, CmMethod::Exact, &mut law) }, CmStatus::Ok);
    let (mut z, mut f) = (0.0, 0.0);
    assert_eq!(unsafe { cm_null_law_quantile(law, 0.05, &mut z) }, CmStatus::Ok);
    assert_eq!(unsafe { cm_null_law_cdf(law, z, &mut f) }, CmStatus::Ok);
    assert!((f - 0.05).abs() < 1e-8);
    unsafe { cm_null_law_free(law) };
}

#[test]
fn simulate_returns_table() {
    let cfg = CString::new("p = 4\nnk = 3,3\nsigma = 1,0.2,0.1\nreps = 50\ntests = lrt,schott\n").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { cm_simulate(cfg.as_ptr(), 7, &mut out) }, CmStatus::Ok);
    let table = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_string();
    unsafe { cm_string_free(out) };
    assert!(table.starts_with("scenario,test,source,alpha,rate,se,R,seed\n"));
    assert_eq!(table.lines().count(), 1 + 2 * (3 + 2));

    let bad = CString::new("p = 4\nbogus = 1\n").unwrap();
    assert_eq!(unsafe { cm_simulate(bad.as_ptr(), 7, &mut out) }, CmStatus::Config);
    assert!(last_error().contains("bogus"));
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/circ_manova.h")
}

#[test]
fn header_declares_every_entry_point() {
    let h = std::fs::read_to_string(header()).unwrap();
    for f in [
        "cm_last_error_message",
        "cm_sample_new",
        "cm_sample_free",
        "cm_lrt",
        "cm_lrt_test",
        "cm_null_law_new",
        "cm_null_law_free",
        "cm_null_law_cdf",
        "cm_null_law_quantile",
        "cm_competitor",
        "cm_simulate",
        "cm_string_free",
        "typedef struct CmSample CmSample",
        "CM_STATUS_OK = 0",
    ] {
        assert!(h.contains(f), "header lacks {f}");
    }
}

/// Newest static library produced for this crate.
fn static_lib() -> Option<PathBuf> {
    let target = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../target");
    let mut found: Vec<PathBuf> = Vec::new();
    for dir in ["debug", "debug/deps", "release", "release/deps"] {
        if let Ok(rd) = std::fs::read_dir(target.join(dir)) {
            for e in rd.flatten() {
                let name = e.file_name().to_string_lossy().to_string();
                if name.starts_with("libcirc_manova_ffi") && name.ends_with(".a") {
                    found.push(e.path());
                }
            }
        }
    }
    found.sort_by_key(|p| std::fs::metadata(p).and_then(|m| m.modified()).ok());
    found.pop()
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include <math.h>
#include "circ_manova.h"

int main(void) {
    size_t sizes[2] = {2, 2};
    double data[4] = {0.0, 2.0, 1.0, 3.0};
    CmSample *s = NULL;
    if (cm_sample_new(1, 2, sizes, data, &s) != CM_STATUS_OK) return 10;
    double lambda = 0.0, w = 0.0;
    if (cm_lrt(s, &lambda, &w) != CM_STATUS_OK) return 11;
    cm_sample_free(s);
    if (fabs(lambda - 0.8) > 1e-12) return 12;
    size_t one[1] = {3};
    if (cm_sample_new(1, 1, one, data, &s) != CM_STATUS_INVALID_INPUT) return 13;
    if (cm_last_error_message() == NULL) return 14;
    printf("lambda=%.3f\n", lambda);
    return 0;
}
"#;

#[test]
fn c_program_links_against_static_library() {
    let lib = static_lib().expect("static library is built alongside the rlib");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    let exe = dir.path().join("smoke");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(&cc)
        .arg(&src)
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler available");
    assert!(status.success(), "compilation failed");
    let out = Command::new(&exe).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "lambda=0.800\n");
}
