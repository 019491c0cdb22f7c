use std::ffi::CStr;
use std::ptr;

use permstat_ffi::*;

fn default_cfg() -> PsConfig {
    let mut cfg = std::mem::MaybeUninit::<PsConfig>::uninit();
    assert_eq!(unsafe { ps_config_default(cfg.as_mut_ptr()) }, PsStatus::Ok);
    unsafe { cfg.assume_init() }
}

fn last_error() -> String {
    let p = ps_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

const X: [f64; 8] = [1.2, 2.1, 0.3, 1.9, 3.0, 4.5, 2.0, 5.0];
const Y: [f64; 8] = [0.2, 0.1, -0.3, 0.9, 1.0, 1.5, 0.5, 2.0];

#[test]
fn ttest2_matches_the_rust_api() {
    let cfg = default_cfg();
    let mut r = ptr::null_mut();
    let st = unsafe { ps_ttest2(X.as_ptr(), 4, Y.as_ptr(), 4, 2, &cfg, &mut r) };
    assert_eq!(st, PsStatus::Ok);
    assert_eq!(unsafe { ps_result_len(r) }, 2);

    let x = permstat::DataMatrix::from_columns(X.chunks(4).map(<[f64]>::to_vec).collect()).unwrap();
    let y = permstat::DataMatrix::from_columns(Y.chunks(4).map(<[f64]>::to_vec).collect()).unwrap();
    let direct = permstat::permuttest2(&x, &y, &permstat::TestConfig::default()).unwrap();
    for v in 0..2 {
        let mut s = std::mem::MaybeUninit::<PsVarStat>::uninit();
        assert_eq!(unsafe { ps_result_get(r, v, s.as_mut_ptr()) }, PsStatus::Ok);
        let s = unsafe { s.assume_init() };
        let d = direct.tested(v);
        assert!(s.tested);
        assert_eq!(s.p, d.p);
        assert_eq!(s.statistic, d.statistic);
        assert_eq!((s.ci_lower, s.ci_upper), (d.ci.lower, d.ci.upper));
    }
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { ps_result_to_json(r, &mut json) }, PsStatus::Ok);
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["command"], "ttest2");
    assert_eq!(v["results"].as_array().unwrap().len(), 2);
    unsafe {
        ps_string_free(json);
        ps_result_free(r);
    }
}

#[test]
fn status_codes() {
    let mut cfg = default_cfg();
    let mut r = ptr::null_mut();
    let st = unsafe { ps_ttest2(ptr::null(), 4, Y.as_ptr(), 4, 2, &cfg, &mut r) };
    assert_eq!(st, PsStatus::NullPointer);
    assert!(r.is_null());

    cfg.n_perm = 5;
    cfg.exact_threshold = 0;
    let st = unsafe { ps_ttest2(X.as_ptr(), 4, Y.as_ptr(), 4, 2, &cfg, &mut r) };
    assert_eq!(st, PsStatus::InvalidArgument);
    assert!(last_error().contains('5'), "{}", last_error());

    let cfg = default_cfg();
    let st = unsafe { ps_ttest2(X.as_ptr(), 1, Y.as_ptr(), 1, 2, &cfg, &mut r) };
    assert_eq!(st, PsStatus::DataError);

    let mut buf = [0 as std::ffi::c_char; 8];
    let n = unsafe { ps_last_error_copy(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 7);
    assert_eq!(buf[7], 0);
}

#[test]
fn failed_variable_is_reported_not_fatal() {
    let x = [1.0, 1.0, 1.0, 1.0, 1.0, 2.0, 3.0, 4.0];
    let y = [1.0, 1.0, 1.0, 1.0, 0.0, 1.0, 0.5, 2.0];
    let cfg = default_cfg();
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { ps_ttest2(x.as_ptr(), 4, y.as_ptr(), 4, 2, &cfg, &mut r) }, PsStatus::Ok);
    let mut s = std::mem::MaybeUninit::<PsVarStat>::uninit();
    assert_eq!(unsafe { ps_result_get(r, 0, s.as_mut_ptr()) }, PsStatus::Ok);
    let s = unsafe { s.assume_init() };
    assert!(!s.tested && s.p.is_nan());
    unsafe { ps_result_free(r) };
}

#[test]
fn anova_and_effect_sizes() {
    let values = [1.0, 2.0, 1.5, 3.0, 3.5, 4.0, 2.0, 2.2, 2.9];
    let groups = [0u32, 0, 0, 1, 1, 1, 2, 2, 2];
    let cfg = default_cfg();
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { ps_anova1(values.as_ptr(), groups.as_ptr(), 9, &cfg, &mut r) }, PsStatus::Ok);
    let mut s = std::mem::MaybeUninit::<PsVarStat>::uninit();
    assert_eq!(unsafe { ps_result_get(r, 0, s.as_mut_ptr()) }, PsStatus::Ok);
    let s = unsafe { s.assume_init() };
    assert!((s.statistic - 12.516129032258066).abs() < 1e-9);
    unsafe { ps_result_free(r) };

    let mut boot = std::mem::MaybeUninit::<PsBootConfig>::uninit();
    assert_eq!(unsafe { ps_boot_config_default(boot.as_mut_ptr()) }, PsStatus::Ok);
    let mut boot = unsafe { boot.assume_init() };
    boot.n_boot = 500;
    let mut e = ptr::null_mut();
    let st = unsafe { ps_effectsize(X.as_ptr(), 4, Y.as_ptr(), 4, 2, PsEffectKind::Cliff, &boot, &mut e) };
    assert_eq!(st, PsStatus::Ok);
    assert_eq!(unsafe { ps_effect_len(e) }, 2);
    let mut es = std::mem::MaybeUninit::<PsEffectStat>::uninit();
    assert_eq!(unsafe { ps_effect_get(e, 0, es.as_mut_ptr()) }, PsStatus::Ok);
    let es = unsafe { es.assume_init() };
    assert_eq!(es.effect, 0.875);
    assert!(es.ci_lower <= es.effect && es.effect <= es.ci_upper);
    unsafe { ps_effect_free(e) };
}

#[test]
fn null_handles_are_harmless() {
    unsafe {
        ps_result_free(ptr::null_mut());
        ps_effect_free(ptr::null_mut());
        ps_string_free(ptr::null_mut());
        assert_eq!(ps_result_len(ptr::null()), 0);
    }
    let v = unsafe { CStr::from_ptr(ps_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/permstat.h");
    let src = include_str!("../src/lib.rs");
    for line in src.lines().filter(|l| l.contains("extern \"C\" fn ps_")) {
        let name = line.split("fn ").nth(1).unwrap().split('(').next().unwrap();
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
}

/// Compiles and runs a C program against the header and the static library.
#[test]
fn c_program_links_and_runs() {
    let manifest = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    let target_tmp = std::path::Path::new(env!("CARGO_TARGET_TMPDIR"));
    let lib_dir = target_tmp.parent().unwrap().join(if cfg!(debug_assertions) { "debug" } else { "release" });
    let lib = lib_dir.join("libpermstat_ffi.a");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if !lib.exists() || std::process::Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or static library at {}", lib.display());
        return;
    }
    let exe = target_tmp.join("permstat_smoke");
    let status = std::process::Command::new(&cc)
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = std::process::Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{:?} {}", out.status, String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
