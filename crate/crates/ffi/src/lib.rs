//! C ABI over the `andor-mpe` solver.
//!
//! Networks and results are opaque handles owned by the caller and released
//! with the matching `_free` function. Every fallible call returns an
//! [`AompError`] code; on failure a message for the calling thread is
//! available from [`aomp_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::time::Duration;

use andor_mpe::heuristics::HeuristicMode;
use andor_mpe::model::{parse_evidence, parse_uai, Assignment, BeliefNetwork};
use andor_mpe::search::{Limits, SolveResult, Status, TipPolicy};
use andor_mpe::{solve, Algorithm, Error, SolveConfig};

/// Opaque network handle.
pub struct AompNetwork {
    net: BeliefNetwork,
}

/// Opaque solve result handle.
pub struct AompResult {
    result: SolveResult,
    external: Option<Vec<(usize, usize)>>,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AompError {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    InvalidNetwork = 5,
    InvalidArgument = 6,
    NotSolved = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AompAlgorithm {
    Aobf = 0,
    Aobb = 1,
    Brute = 2,
    BucketElimination = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AompHeuristic {
    Static = 0,
    Dynamic = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AompStatus {
    Solved = 0,
    Timeout = 1,
    Memout = 2,
}

/// Solver settings. Fill with [`aomp_options_default`] before changing
/// fields.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct AompOptions {
    pub algorithm: AompAlgorithm,
    pub heuristic: AompHeuristic,
    pub i_bound: u32,
    pub seed: u64,
    /// Seconds; negative means no limit.
    pub time_limit: f64,
    /// Bytes; negative means no limit.
    pub memory_limit: i64,
    pub caching: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(code: AompError, msg: impl Into<String>) -> AompError {
    set_error(msg.into());
    code
}

fn from_error(e: Error) -> AompError {
    let code = match &e {
        Error::Parse { .. } => AompError::Parse,
        Error::InvalidNetwork(_) => AompError::InvalidNetwork,
        Error::Io(_) => AompError::Io,
        _ => AompError::InvalidArgument,
    };
    fail(code, e.to_string())
}

/// Runs `f`, turning panics into `AompError::Panic`.
fn guard(f: impl FnOnce() -> AompError) -> AompError {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(code) => code,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(AompError::Panic, format!("internal panic: {msg}"))
        }
    }
}

unsafe fn str_arg<'a>(s: *const c_char) -> Result<&'a str, AompError> {
    if s.is_null() {
        return Err(fail(AompError::NullPointer, "string argument is null"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(AompError::InvalidUtf8, "string argument is not UTF-8"))
}

unsafe fn store<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn aomp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn aomp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a network in UAI `BAYES` text format.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn aomp_network_parse(text: *const c_char, out: *mut *mut AompNetwork) -> AompError {
    guard(|| {
        if out.is_null() {
            return fail(AompError::NullPointer, "out is null");
        }
        let text = match str_arg(text) {
            Ok(t) => t,
            Err(c) => return c,
        };
        match parse_uai(text) {
            Ok(net) => {
                store(out, AompNetwork { net });
                AompError::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Reads a UAI file and, when `evidence_path` is not null, applies the
/// evidence file to it.
///
/// # Safety
/// `path` and (if not null) `evidence_path` must be NUL-terminated strings;
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn aomp_network_load(
    path: *const c_char,
    evidence_path: *const c_char,
    out: *mut *mut AompNetwork,
) -> AompError {
    guard(|| {
        if out.is_null() {
            return fail(AompError::NullPointer, "out is null");
        }
        let path = match str_arg(path) {
            Ok(p) => p,
            Err(c) => return c,
        };
        let evidence = if evidence_path.is_null() {
            None
        } else {
            match str_arg(evidence_path) {
                Ok(p) => Some(p),
                Err(c) => return c,
            }
        };
        let load = || -> Result<BeliefNetwork, Error> {
            let net = parse_uai(&std::fs::read_to_string(path)?)?;
            match evidence {
                Some(p) => net.apply_evidence(&parse_evidence(&std::fs::read_to_string(p)?)?),
                None => Ok(net),
            }
        };
        match load() {
            Ok(net) => {
                store(out, AompNetwork { net });
                AompError::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Returns a new network with `vars[k] = values[k]` observed. Variable ids
/// refer to the original file.
///
/// # Safety
/// `net` must be a live handle, `vars` and `values` must point to `len`
/// elements each (or be null when `len` is 0), and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn aomp_network_observe(
    net: *const AompNetwork,
    vars: *const usize,
    values: *const usize,
    len: usize,
    out: *mut *mut AompNetwork,
) -> AompError {
    guard(|| {
        if net.is_null() || out.is_null() || (len > 0 && (vars.is_null() || values.is_null())) {
            return fail(AompError::NullPointer, "null argument");
        }
        let mut e = Assignment::new();
        for k in 0..len {
            e.insert(*vars.add(k), *values.add(k));
        }
        match (*net).net.apply_evidence(&e) {
            Ok(reduced) => {
                store(out, AompNetwork { net: reduced });
                AompError::Ok
            }
            Err(err) => from_error(err),
        }
    })
}

/// Number of unobserved variables; 0 for a null handle.
///
/// # Safety
/// `net` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn aomp_network_num_variables(net: *const AompNetwork) -> usize {
    net.as_ref().map_or(0, |n| n.net.num_variables())
}

/// # Safety
/// `net` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn aomp_network_free(net: *mut AompNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// # Safety
/// `opts` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn aomp_options_default(opts: *mut AompOptions) -> AompError {
    if opts.is_null() {
        return fail(AompError::NullPointer, "opts is null");
    }
    let d = SolveConfig::default();
    *opts = AompOptions {
        algorithm: AompAlgorithm::Aobf,
        heuristic: AompHeuristic::Static,
        i_bound: d.i_bound as u32,
        seed: d.seed,
        time_limit: -1.0,
        memory_limit: -1,
        caching: d.caching,
    };
    AompError::Ok
}

fn config(o: &AompOptions) -> Result<SolveConfig, AompError> {
    if o.time_limit.is_nan() || o.time_limit == f64::INFINITY {
        return Err(fail(AompError::InvalidArgument, "time_limit must be finite"));
    }
    Ok(SolveConfig {
        algorithm: match o.algorithm {
            AompAlgorithm::Aobf => Algorithm::Aobf,
            AompAlgorithm::Aobb => Algorithm::Aobb,
            AompAlgorithm::Brute => Algorithm::Brute,
            AompAlgorithm::BucketElimination => Algorithm::Be,
        },
        heuristic: match o.heuristic {
            AompHeuristic::Static => HeuristicMode::Static,
            AompHeuristic::Dynamic => HeuristicMode::Dynamic,
        },
        i_bound: o.i_bound as usize,
        seed: o.seed,
        limits: Limits {
            time_limit: (o.time_limit >= 0.0).then(|| Duration::from_secs_f64(o.time_limit)),
            memory_limit: usize::try_from(o.memory_limit).ok(),
        },
        caching: o.caching,
        dead_cache_elimination: false,
        tip_policy: TipPolicy::Deepest,
        instrument: false,
    })
}

/// Solves `net`. A null `opts` uses the defaults. Running out of time or
/// memory is not an error: check [`aomp_result_status`].
///
/// # Safety
/// `net` must be a live handle, `opts` null or valid, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn aomp_solve(
    net: *const AompNetwork,
    opts: *const AompOptions,
    out: *mut *mut AompResult,
) -> AompError {
    guard(|| {
        if net.is_null() || out.is_null() {
            return fail(AompError::NullPointer, "null argument");
        }
        let cfg = match opts.as_ref() {
            Some(o) => match config(o) {
                Ok(c) => c,
                Err(code) => return code,
            },
            None => SolveConfig::default(),
        };
        let net = &(*net).net;
        match solve(net, &cfg) {
            Ok(result) => {
                let external = result
                    .assignment
                    .as_ref()
                    .map(|x| net.to_external(x).iter().collect());
                store(out, AompResult { result, external });
                AompError::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `res` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn aomp_result_status(res: *const AompResult) -> AompStatus {
    match (*res).result.status {
        Status::Solved => AompStatus::Solved,
        Status::Timeout => AompStatus::Timeout,
        Status::Memout => AompStatus::Memout,
    }
}

/// Natural log of the MPE probability, including observed evidence.
/// Zero-probability networks give negative infinity.
///
/// # Safety
/// `res` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn aomp_result_log_value(res: *const AompResult, out: *mut f64) -> AompError {
    if res.is_null() || out.is_null() {
        return fail(AompError::NullPointer, "null argument");
    }
    match (*res).result.mpe_log_value {
        Some(v) => {
            *out = v;
            AompError::Ok
        }
        None => fail(AompError::NotSolved, "no solution: search was aborted"),
    }
}

/// Writes the MPE assignment as values indexed by original variable id,
/// evidence included. Returns the number of variables, copying at most
/// `len` values; 0 when there is no solution. Call with `len = 0` to size
/// the buffer.
///
/// # Safety
/// `res` must be a live handle; `buf` must hold `len` elements or be null
/// when `len` is 0.
#[no_mangle]
pub unsafe extern "C" fn aomp_result_assignment(res: *const AompResult, buf: *mut usize, len: usize) -> usize {
    let Some(pairs) = res.as_ref().and_then(|r| r.external.as_ref()) else {
        return 0;
    };
    let n = pairs.last().map_or(0, |&(id, _)| id + 1);
    if !buf.is_null() {
        for &(id, value) in pairs {
            if id < len {
                *buf.add(id) = value;
            }
        }
    }
    n
}

/// Search nodes expanded (0 for the non-search algorithms).
///
/// # Safety
/// `res` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn aomp_result_nodes(res: *const AompResult) -> u64 {
    (*res).result.stats.expansions
}

/// # Safety
/// `res` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn aomp_result_free(res: *mut AompResult) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}
