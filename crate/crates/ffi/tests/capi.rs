use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use andor_mpe_ffi::*;

const CHAIN: &str = "BAYES\n2\n2 2\n2\n1 0\n2 0 1\n\n2\n0.4 0.6\n\n4\n0.8 0.2 0.1 0.9\n";

fn parse(text: &str) -> Result<*mut AompNetwork, AompError> {
    let c = CString::new(text).unwrap();
    let mut net = ptr::null_mut();
    match unsafe { aomp_network_parse(c.as_ptr(), &mut net) } {
        AompError::Ok => Ok(net),
        e => Err(e),
    }
}

fn last_error() -> String {
    let p = aomp_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn options(algorithm: AompAlgorithm) -> AompOptions {
    let mut o = std::mem::MaybeUninit::<AompOptions>::uninit();
    unsafe {
        assert_eq!(aomp_options_default(o.as_mut_ptr()), AompError::Ok);
        let mut o = o.assume_init();
        o.algorithm = algorithm;
        o
    }
}

fn solve(net: *const AompNetwork, opts: &AompOptions) -> *mut AompResult {
    let mut res = ptr::null_mut();
    assert_eq!(unsafe { aomp_solve(net, opts, &mut res) }, AompError::Ok);
    res
}

fn assignment(res: *const AompResult) -> Vec<usize> {
    unsafe {
        let n = aomp_result_assignment(res, ptr::null_mut(), 0);
        let mut buf = vec![usize::MAX; n];
        assert_eq!(aomp_result_assignment(res, buf.as_mut_ptr(), n), n);
        buf
    }
}

#[test]
fn chain_through_every_algorithm() {
    let net = parse(CHAIN).unwrap();
    assert_eq!(unsafe { aomp_network_num_variables(net) }, 2);
    for alg in [
        AompAlgorithm::Aobf,
        AompAlgorithm::Aobb,
        AompAlgorithm::Brute,
        AompAlgorithm::BucketElimination,
    ] {
        let res = solve(net, &options(alg));
        unsafe {
            assert_eq!(aomp_result_status(res), AompStatus::Solved);
            let mut v = 0.0;
            assert_eq!(aomp_result_log_value(res, &mut v), AompError::Ok);
            assert!((v - 0.54f64.ln()).abs() < 1e-12);
            assert_eq!(assignment(res), vec![1, 1]);
            aomp_result_free(res);
        }
    }
    unsafe { aomp_network_free(net) };
}

#[test]
fn default_options_when_null() {
    let net = parse(CHAIN).unwrap();
    let mut res = ptr::null_mut();
    unsafe {
        assert_eq!(aomp_solve(net, ptr::null(), &mut res), AompError::Ok);
        assert!(aomp_result_nodes(res) > 0);
        aomp_result_free(res);
        aomp_network_free(net);
    }
}

#[test]
fn observed_values_appear_in_the_assignment() {
    let net = parse(CHAIN).unwrap();
    let (vars, values) = ([1usize], [0usize]);
    let mut reduced = ptr::null_mut();
    unsafe {
        assert_eq!(
            aomp_network_observe(net, vars.as_ptr(), values.as_ptr(), 1, &mut reduced),
            AompError::Ok
        );
        assert_eq!(aomp_network_num_variables(reduced), 1);
        let res = solve(reduced, &options(AompAlgorithm::Aobb));
        let mut v = 0.0;
        aomp_result_log_value(res, &mut v);
        assert!((v - 0.32f64.ln()).abs() < 1e-12);
        assert_eq!(assignment(res), vec![0, 0]);
        aomp_result_free(res);
        aomp_network_free(reduced);
        aomp_network_free(net);
    }
}

#[test]
fn files_load_with_evidence() {
    let dir = tempfile::tempdir().unwrap();
    let uai = dir.path().join("chain.uai");
    let ev = dir.path().join("chain.evid");
    std::fs::write(&uai, CHAIN).unwrap();
    std::fs::write(&ev, "1\n0 0\n").unwrap();
    let (u, e) = (cstr(&uai), cstr(&ev));
    let mut net = ptr::null_mut();
    unsafe {
        assert_eq!(aomp_network_load(u.as_ptr(), e.as_ptr(), &mut net), AompError::Ok);
        let res = solve(net, &options(AompAlgorithm::Aobf));
        assert_eq!(assignment(res), vec![0, 0]);
        aomp_result_free(res);
        aomp_network_free(net);
        let missing = cstr(&dir.path().join("missing.uai"));
        assert_eq!(aomp_network_load(missing.as_ptr(), ptr::null(), &mut net), AompError::Io);
    }
}

fn cstr(p: &Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

#[test]
fn errors_carry_codes_and_messages() {
    assert_eq!(parse("BAYES\n1\n2\n1\n1 0\n\n3\n0.5 0.5 0.5\n").unwrap_err(), AompError::Parse);
    assert!(last_error().contains("line"));
    assert_eq!(parse("BAYES\n1\n2\n1\n1 0\n\n2\n0.5 -1\n").unwrap_err(), AompError::Parse);
    unsafe {
        assert_eq!(aomp_network_parse(ptr::null(), &mut ptr::null_mut()), AompError::NullPointer);
        let bad = [0xffu8, 0];
        assert_eq!(
            aomp_network_parse(bad.as_ptr().cast(), &mut ptr::null_mut()),
            AompError::InvalidUtf8
        );
        assert_eq!(aomp_solve(ptr::null(), ptr::null(), &mut ptr::null_mut()), AompError::NullPointer);
        let net = parse(CHAIN).unwrap();
        let (vars, values) = ([0usize], [5usize]);
        let mut out = ptr::null_mut();
        assert_eq!(
            aomp_network_observe(net, vars.as_ptr(), values.as_ptr(), 1, &mut out),
            AompError::InvalidArgument
        );
        let mut o = options(AompAlgorithm::Aobf);
        o.time_limit = f64::NAN;
        assert_eq!(aomp_solve(net, &o, &mut out.cast()), AompError::InvalidArgument);
        aomp_network_free(net);
        aomp_network_free(ptr::null_mut());
        aomp_result_free(ptr::null_mut());
    }
}

#[test]
fn limits_are_statuses_not_errors() {
    let net = parse(CHAIN).unwrap();
    unsafe {
        let mut o = options(AompAlgorithm::Aobf);
        o.time_limit = 0.0;
        let res = solve(net, &o);
        assert_eq!(aomp_result_status(res), AompStatus::Timeout);
        let mut v = 0.0;
        assert_eq!(aomp_result_log_value(res, &mut v), AompError::NotSolved);
        assert_eq!(aomp_result_assignment(res, ptr::null_mut(), 0), 0);
        aomp_result_free(res);
        let mut o = options(AompAlgorithm::Aobb);
        o.memory_limit = 0;
        let res = solve(net, &o);
        assert_eq!(aomp_result_status(res), AompStatus::Memout);
        aomp_result_free(res);
        aomp_network_free(net);
    }
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(aomp_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/andor_mpe.h")
}

fn have_cc() -> bool {
    Command::new("cc").arg("--version").output().is_ok_and(|o| o.status.success())
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let h = header();
    let text = std::fs::read_to_string(&h).unwrap();
    for name in ["aomp_solve", "aomp_last_error", "AOMP_ERROR_OK", "typedef struct AompNetwork AompNetwork"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    if !have_cc() {
        eprintln!("cc not found; skipping compile check");
        return;
    }
    for lang in ["c", "c++"] {
        let o = Command::new("cc")
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang])
            .arg(&h)
            .output()
            .unwrap();
        assert!(o.status.success(), "{lang}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

const C_PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "andor_mpe.h"

int main(void) {
    const char *uai = "BAYES\n2\n2 2\n2\n1 0\n2 0 1\n\n2\n0.4 0.6\n\n4\n0.8 0.2 0.1 0.9\n";
    AompNetwork *net = NULL;
    if (aomp_network_parse(uai, &net) != AOMP_ERROR_OK) return 1;
    AompOptions opts;
    aomp_options_default(&opts);
    opts.algorithm = AOMP_ALGORITHM_AOBB;
    AompResult *res = NULL;
    if (aomp_solve(net, &opts, &res) != AOMP_ERROR_OK) return 2;
    double v;
    if (aomp_result_log_value(res, &v) != AOMP_ERROR_OK) return 3;
    size_t x[2];
    size_t n = aomp_result_assignment(res, x, 2);
    printf("%.6f %zu %zu %zu\n", exp(v), n, x[0], x[1]);
    aomp_result_free(res);
    aomp_network_free(net);
    if (aomp_network_parse("nonsense", &net) != AOMP_ERROR_PARSE) return 4;
    return aomp_last_error() == NULL;
}
"#;

#[test]
fn c_program_links_against_static_library() {
    if !have_cc() {
        eprintln!("cc not found; skipping link check");
        return;
    }
    // target/<profile>/deps/<test binary> -> target/<profile>
    let exe = std::env::current_exe().unwrap();
    let lib = exe.parent().and_then(Path::parent).unwrap().join("libandor_mpe_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping link check", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let bin = dir.path().join("main");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let o = Command::new("cc")
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let run = Command::new(&bin).output().unwrap();
    assert_eq!(run.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "0.540000 2 1 1");
}
