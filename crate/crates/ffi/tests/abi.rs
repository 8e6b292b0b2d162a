use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use serde_json::Value;
use skewstab_ffi::*;

fn new_system(name: &str, params: Option<&str>) -> *mut SkewSystem {
    let name = CString::new(name).unwrap();
    let params = params.map(|p| CString::new(p).unwrap());
    let mut out = ptr::null_mut();
    let status = unsafe {
        skewstab_system_new(name.as_ptr(), params.as_ref().map_or(ptr::null(), |p| p.as_ptr()), &mut out)
    };
    assert_eq!(status, SkewStatus::Ok, "{}", last_error());
    out
}

fn last_error() -> String {
    let p = skewstab_last_error();
    if p.is_null() {
        String::new()
    } else {
        unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
    }
}

#[test]
fn cocycle_and_adjoint_through_the_abi() {
    let sys = new_system("diag3", None);
    let mut dim = 0usize;
    assert_eq!(unsafe { skewstab_system_dimension(sys, &mut dim) }, SkewStatus::Ok);
    assert_eq!(dim, 3);

    let v = [1.0, -2.0, 0.5];
    let w = [0.3, 0.7, -1.1];
    let mut pv = [0.0; 3];
    let mut aw = [0.0; 3];
    unsafe {
        assert_eq!(skewstab_apply_cocycle(sys, 2.0, 0.5, 0.0, v.as_ptr(), 3, pv.as_mut_ptr()), SkewStatus::Ok);
        assert_eq!(skewstab_apply_adjoint(sys, 2.0, 0.5, 0.0, w.as_ptr(), 3, aw.as_mut_ptr()), SkewStatus::Ok);
    }
    let lhs: f64 = aw.iter().zip(&v).map(|(a, b)| a * b).sum();
    let rhs: f64 = w.iter().zip(&pv).map(|(a, b)| a * b).sum();
    assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));

    let mut norm = 0.0;
    assert_eq!(unsafe { skewstab_operator_norm(sys, 2.0, 0.5, 0.0, &mut norm) }, SkewStatus::Ok);
    let image: f64 = pv.iter().map(|x| x.abs()).sum();
    let len: f64 = v.iter().map(|x| x.abs()).sum();
    assert!(image <= norm * len * (1.0 + 1e-12));
    unsafe { skewstab_system_free(sys) };
}

#[test]
fn shifted_handle_scales_by_the_exponential() {
    let sys = new_system("scalar_decay", None);
    let mut shifted = ptr::null_mut();
    assert_eq!(unsafe { skewstab_shift_cocycle(sys, 0.5, &mut shifted) }, SkewStatus::Ok);
    let (mut a, mut b) = (0.0, 0.0);
    unsafe {
        skewstab_operator_norm(sys, 3.0, 1.0, 0.0, &mut a);
        skewstab_operator_norm(shifted, 3.0, 1.0, 0.0, &mut b);
        skewstab_system_free(shifted);
        skewstab_system_free(sys);
    }
    assert!((b - (-1.0f64).exp() * a).abs() <= 1e-12 * a);
}

#[test]
fn errors_map_to_codes() {
    let sys = new_system("tsint", None);
    let v = [1.0; 4];
    let mut out = [0.0; 4];
    unsafe {
        let mut dim = 0usize;
        skewstab_system_dimension(sys, &mut dim);
        let wrong = dim + 1;
        assert_eq!(skewstab_apply_cocycle(sys, 1.0, 0.0, 0.0, v.as_ptr(), wrong, out.as_mut_ptr()), SkewStatus::Dimension);
        assert!(last_error().contains("dimension"), "{}", last_error());
        assert_eq!(skewstab_apply_cocycle(sys, 1.0, 0.0, 0.0, v.as_ptr(), dim, ptr::null_mut()), SkewStatus::NullPointer);
        assert_eq!(skewstab_apply_cocycle(sys, 0.0, 1.0, 0.0, v.as_ptr(), dim, out.as_mut_ptr()), SkewStatus::TimeOrder);
        assert_eq!(skewstab_operator_norm(sys, 0.0, 1.0, 0.0, &mut out[0]), SkewStatus::TimeOrder);
        assert_eq!(skewstab_operator_norm(sys, f64::NAN, 0.0, 0.0, &mut out[0]), SkewStatus::NonFinite);
        assert_eq!(skewstab_operator_norm(ptr::null(), 1.0, 0.0, 0.0, &mut out[0]), SkewStatus::NullPointer);
        let mut shifted = ptr::null_mut();
        assert_eq!(skewstab_shift_cocycle(sys, f64::INFINITY, &mut shifted), SkewStatus::NonFinite);
        assert!(shifted.is_null());

        // A success clears the previous message.
        assert_eq!(skewstab_operator_norm(sys, 1.0, 0.0, 0.0, &mut out[0]), SkewStatus::Ok);
        assert!(skewstab_last_error().is_null());
        skewstab_system_free(sys);
    }

    let mut out = ptr::null_mut();
    let bad_name = CString::new("nowhere").unwrap();
    let bad_json = CString::new("{not json").unwrap();
    let slow = CString::new(r#"{"mu": 0.5}"#).unwrap();
    let scalar = CString::new("scalar_decay").unwrap();
    let invalid_utf8 = [0xffu8, 0xfe, 0];
    unsafe {
        assert_eq!(skewstab_system_new(bad_name.as_ptr(), ptr::null(), &mut out), SkewStatus::InvalidParams);
        assert_eq!(skewstab_system_new(scalar.as_ptr(), bad_json.as_ptr(), &mut out), SkewStatus::InvalidParams);
        assert_eq!(skewstab_system_new(scalar.as_ptr(), slow.as_ptr(), &mut out), SkewStatus::InvalidParams);
        assert_eq!(
            skewstab_system_new(invalid_utf8.as_ptr().cast(), ptr::null(), &mut out),
            SkewStatus::InvalidUtf8
        );
        assert_eq!(skewstab_system_new(ptr::null(), ptr::null(), &mut out), SkewStatus::NullPointer);
        assert_eq!(skewstab_system_new(scalar.as_ptr(), ptr::null(), ptr::null_mut()), SkewStatus::NullPointer);
    }
    assert!(out.is_null());
}

#[test]
fn classify_json_matches_the_library() {
    let sys = new_system("bounded_ratio", None);
    let cfg = CString::new(r#"{"seed": 5}"#).unwrap();
    let mut json = ptr::null_mut();
    let mut code = -1;
    assert_eq!(unsafe { skewstab_classify_json(sys, cfg.as_ptr(), &mut json, &mut code) }, SkewStatus::Ok);
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    unsafe {
        skewstab_string_free(json);
        skewstab_system_free(sys);
    }
    let report: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(report["verdict"], "US-not-UES");
    assert_eq!(report["config"]["seed"], 5);
    assert_eq!(code, 0);
}

#[test]
fn custom_system_from_json() {
    let spec = CString::new(
        r#"{"name": "decay", "semiflow": "translation",
            "entries": [[{"kind": "linear", "rate": -2.0}]],
            "states": [{"kind": "real", "value": 0.0}]}"#,
    )
    .unwrap();
    let mut sys = ptr::null_mut();
    assert_eq!(unsafe { skewstab_custom_system_new(spec.as_ptr(), &mut sys) }, SkewStatus::Ok, "{}", last_error());
    let mut n = 0.0;
    assert_eq!(unsafe { skewstab_operator_norm(sys, 1.0, 0.0, 0.0, &mut n) }, SkewStatus::Ok);
    assert!((n - (-2.0f64).exp()).abs() < 1e-12);
    unsafe { skewstab_system_free(sys) };
}

#[test]
fn null_frees_are_harmless() {
    unsafe {
        skewstab_system_free(ptr::null_mut());
        skewstab_string_free(ptr::null_mut());
    }
    let v = unsafe { CStr::from_ptr(skewstab_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn staticlib() -> Option<PathBuf> {
    // target/<profile>/deps/<test binary>
    let exe = std::env::current_exe().ok()?;
    let lib = exe.parent()?.parent()?.join("libskewstab_ffi.a");
    lib.exists().then_some(lib)
}

#[test]
fn header_compiles_and_links_from_c() {
    let Some(lib) = staticlib() else {
        eprintln!("static library not built; skipping C link test");
        return;
    };
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("no C compiler; skipping C link test");
        return;
    }
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(root.join("include"))
        .arg(root.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
}
