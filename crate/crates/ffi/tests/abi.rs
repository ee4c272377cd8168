use pwt_ffi::*;
use std::ffi::{CStr, CString};
use std::path::Path;
use std::ptr;

fn config(name: &str) -> CString {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> Option<String> {
    let p = pwt_last_error_message();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
}

#[test]
fn solve_constant_profile_from_toml() {
    let toml = CString::new("[model]\nv = { kind = \"constant\", value = 1.0 }\n[numeric]\nsolver = \"shooting\"\n").unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { pwt_config_from_toml(toml.as_ptr(), &mut cfg) }, PwtStatus::Ok);
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { pwt_solve(cfg, 10, &mut s) }, PwtStatus::Ok);
    assert!(last_error().is_none());
    let n = unsafe { pwt_spectrum_len(s) };
    assert_eq!(n, 11);
    let mut e = vec![0.0; n];
    assert_eq!(unsafe { pwt_spectrum_energies(s, e.as_mut_ptr(), n) }, PwtStatus::Ok);
    // v = K = 1 on L = 1: E_n = pi n.
    for (i, x) in e.iter().enumerate() {
        assert!((x - std::f64::consts::PI * i as f64).abs() <= 1e-8 * (1.0 + x), "n = {i}: {x}");
    }
    let mut l = vec![0.0; n];
    assert_eq!(unsafe { pwt_spectrum_lambdas(s, l.as_mut_ptr(), n) }, PwtStatus::Ok);
    assert!((l[3] - e[3] * e[3]).abs() < 1e-9);
    assert!((unsafe { pwt_spectrum_v0(s) } - 1.0).abs() < 1e-12);

    let mut small = vec![0.0; 3];
    assert_eq!(unsafe { pwt_spectrum_energies(s, small.as_mut_ptr(), 3) }, PwtStatus::BufferTooSmall);
    assert!(last_error().unwrap().contains("11 needed"));
    unsafe {
        pwt_spectrum_free(s);
        pwt_config_free(cfg);
    }
}

#[test]
fn check_matches_closed_form_verdicts() {
    for (file, pwt) in [("chebyshev.toml", true), ("legendre.toml", false)] {
        let mut cfg = ptr::null_mut();
        assert_eq!(unsafe { pwt_config_load(config(file).as_ptr(), &mut cfg) }, PwtStatus::Ok);
        let mut v = PwtVerdict { is_pwt: -1, period: 0.0, c_shift: -1 };
        assert_eq!(unsafe { pwt_check(cfg, &mut v) }, PwtStatus::Ok);
        assert_eq!(v.is_pwt == 1, pwt, "{file}");
        if pwt {
            assert!((v.period - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
            assert_eq!(v.c_shift, 0);
        } else {
            assert!(v.period.is_nan());
        }
        unsafe { pwt_config_free(cfg) };
    }
}

#[test]
fn errors_set_status_and_message() {
    let mut cfg = ptr::null_mut();
    let bad = CString::new("[model]\nv = 3\n").unwrap();
    assert_eq!(unsafe { pwt_config_from_toml(bad.as_ptr(), &mut cfg) }, PwtStatus::InvalidInput);
    assert!(cfg.is_null());
    assert!(last_error().is_some());

    assert_eq!(unsafe { pwt_config_from_toml(ptr::null(), &mut cfg) }, PwtStatus::NullPointer);
    assert_eq!(last_error().unwrap(), "toml is null");
    assert_eq!(unsafe { pwt_solve(ptr::null(), 4, &mut ptr::null_mut()) }, PwtStatus::NullPointer);

    // 1/v is not integrable: a numerical failure.
    let div = CString::new("[model]\nv = { kind = \"power\", amplitude = 1.0, alpha = 1.0 }\n").unwrap();
    assert_eq!(unsafe { pwt_config_from_toml(div.as_ptr(), &mut cfg) }, PwtStatus::Ok);
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { pwt_solve(cfg, 4, &mut s) }, PwtStatus::Numerical);
    assert!(s.is_null());
    assert!(last_error().unwrap().contains("diverges"));

    let cmd = CString::new("nonsense").unwrap();
    assert_eq!(unsafe { pwt_run(cfg, cmd.as_ptr(), ptr::null()) }, PwtStatus::InvalidInput);
    unsafe { pwt_config_free(cfg) };

    // Freeing null is a no-op.
    unsafe {
        pwt_config_free(ptr::null_mut());
        pwt_spectrum_free(ptr::null_mut());
    }
    assert_eq!(unsafe { pwt_spectrum_len(ptr::null()) }, 0);
}

#[test]
fn run_writes_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { pwt_config_load(config("chebyshev.toml").as_ptr(), &mut cfg) }, PwtStatus::Ok);
    let cmd = CString::new("check-pwt").unwrap();
    let dir = CString::new(tmp.path().to_str().unwrap()).unwrap();
    assert_eq!(unsafe { pwt_run(cfg, cmd.as_ptr(), dir.as_ptr()) }, PwtStatus::Ok);
    assert!(tmp.path().join("verdict.json").exists());
    unsafe { pwt_config_free(cfg) };
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(pwt_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/pwt.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in ["pwt_solve", "pwt_check", "pwt_run", "pwt_last_error_message", "typedef struct PwtConfig PwtConfig"] {
        assert!(text.contains(f), "{f}");
    }
    for (compiler, lang) in [("cc", "c"), ("c++", "c++")] {
        let Ok(out) = std::process::Command::new(compiler).args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang]).arg(&header).output() else {
            eprintln!("{compiler} unavailable; skipping");
            continue;
        };
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}
