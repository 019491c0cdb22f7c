//! C interface to the permstat engine.
//!
//! Data are passed as column-major `double` arrays: variable `v`,
//! observation `i` lives at `data[v * n_obs + i]`. Every entry point returns
//! a [`PsStatus`]; on failure `ps_last_error_message` describes the problem
//! for the calling thread. Results come back as opaque handles which must be
//! released with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use permstat::cli::output::{effect_envelope, test_envelope};
use permstat::{
    booteffectsize, permuanova1, permucorr, permuttest, permuttest2, permuvartest2, permuztest,
    BootConfig, Control, CorrectionMethod, CorrelationKind, DataMatrix, EffectKind,
    EffectSizeResult, Error, PermutationResult, Tail, TestConfig, VarAssumption,
};

/// Status code returned by every function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsStatus {
    Ok = 0,
    /// A required pointer was null.
    NullPointer = 1,
    /// Invalid configuration or argument (bad alpha, too few permutations, ...).
    InvalidArgument = 2,
    /// The data cannot be tested (too few observations, zero variance, ...).
    DataError = 3,
    /// An index was outside the result.
    OutOfRange = 4,
    /// Internal failure; the message has details.
    Internal = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsTail {
    Two = 0,
    Right = 1,
    Left = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsCorrection {
    Max = 0,
    Bonferroni = 1,
    Holm = 2,
    None = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsVar {
    Equal = 0,
    Unequal = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsEffectKind {
    Cohen = 0,
    Glass = 1,
    Cliff = 2,
    MeanDiff = 3,
    MedianDiff = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsCorrKind {
    Pearson = 0,
    Spearman = 1,
    Rankit = 2,
}

/// Test settings. Fill with `ps_config_default` and adjust.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PsConfig {
    pub n_perm: usize,
    pub seed: u64,
    pub tail: PsTail,
    pub correction: PsCorrection,
    pub var_assumption: PsVar,
    pub alpha: f64,
    pub exact_threshold: u64,
}

/// Bootstrap settings. Fill with `ps_boot_config_default` and adjust.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PsBootConfig {
    pub n_boot: usize,
    pub seed: u64,
    pub alpha: f64,
    pub paired: bool,
    pub bias_correct: bool,
    pub var_assumption: PsVar,
    /// True scales Glass' delta by X's standard deviation instead of Y's.
    pub control_is_x: bool,
}

/// One variable of a test result. When `tested` is false every number is NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PsVarStat {
    pub tested: bool,
    pub statistic: f64,
    pub p: f64,
    pub p_uncorrected: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub estimate: f64,
    /// NaN when the statistic has no standard error.
    pub se: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PsEffectStat {
    pub estimated: bool,
    pub effect: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub correction_factor: f64,
}

/// Opaque test result.
pub struct PsResult {
    inner: Vec<PermutationResult>,
    command: &'static str,
}

/// Opaque effect-size result.
pub struct PsEffect {
    inner: EffectSizeResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn fail(status: PsStatus, msg: impl Into<String>) -> PsStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> PsStatus {
    let status = if e.is_data_error() {
        PsStatus::DataError
    } else {
        PsStatus::InvalidArgument
    };
    fail(status, e.to_string())
}

/// Runs `f`, turning panics into `PsStatus::Internal`.
fn guard(f: impl FnOnce() -> PsStatus) -> PsStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(PsStatus::Internal, format!("internal error: {msg}"))
        }
    }
}

impl From<PsTail> for Tail {
    fn from(t: PsTail) -> Self {
        match t {
            PsTail::Two => Tail::TwoTailed,
            PsTail::Right => Tail::Right,
            PsTail::Left => Tail::Left,
        }
    }
}

impl From<PsVar> for VarAssumption {
    fn from(v: PsVar) -> Self {
        match v {
            PsVar::Equal => VarAssumption::Equal,
            PsVar::Unequal => VarAssumption::Unequal,
        }
    }
}

impl From<&PsConfig> for TestConfig {
    fn from(c: &PsConfig) -> Self {
        TestConfig {
            n_perm: c.n_perm,
            seed: c.seed,
            tail: c.tail.into(),
            alpha: c.alpha,
            correction: match c.correction {
                PsCorrection::Max => CorrectionMethod::Max,
                PsCorrection::Bonferroni => CorrectionMethod::Bonferroni,
                PsCorrection::Holm => CorrectionMethod::Holm,
                PsCorrection::None => CorrectionMethod::None,
            },
            var_assumption: c.var_assumption.into(),
            exact_threshold: c.exact_threshold,
        }
    }
}

unsafe fn matrix(data: *const f64, n_obs: usize, n_vars: usize, what: &str) -> Result<DataMatrix, PsStatus> {
    if data.is_null() {
        return Err(fail(PsStatus::NullPointer, format!("{what} is null")));
    }
    let Some(len) = n_obs.checked_mul(n_vars) else {
        return Err(fail(PsStatus::InvalidArgument, format!("{what} is too large")));
    };
    if len == 0 {
        return Err(fail(PsStatus::DataError, format!("{what} is empty")));
    }
    let flat = std::slice::from_raw_parts(data, len);
    DataMatrix::from_columns(flat.chunks(n_obs).map(<[f64]>::to_vec).collect()).map_err(from_error)
}

unsafe fn optional_slice<'a>(p: *const f64, len: usize) -> &'a [f64] {
    if p.is_null() || len == 0 {
        &[]
    } else {
        std::slice::from_raw_parts(p, len)
    }
}

unsafe fn config(cfg: *const PsConfig) -> Result<TestConfig, PsStatus> {
    if cfg.is_null() {
        Ok(TestConfig::default())
    } else {
        Ok(TestConfig::from(&*cfg))
    }
}

unsafe fn store(out: *mut *mut PsResult, inner: Vec<PermutationResult>, command: &'static str) -> PsStatus {
    *out = Box::into_raw(Box::new(PsResult { inner, command }));
    PsStatus::Ok
}

macro_rules! try_ps {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ps_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failure on this thread, or NULL. The pointer stays
/// valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn ps_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Writes the library defaults into `*cfg`.
///
/// # Safety
/// `cfg` must be null or point to writable memory for one `PsConfig`.
#[no_mangle]
pub unsafe extern "C" fn ps_config_default(cfg: *mut PsConfig) -> PsStatus {
    if cfg.is_null() {
        return fail(PsStatus::NullPointer, "cfg is null");
    }
    let d = TestConfig::default();
    *cfg = PsConfig {
        n_perm: d.n_perm,
        seed: d.seed,
        tail: PsTail::Two,
        correction: PsCorrection::Max,
        var_assumption: PsVar::Equal,
        alpha: d.alpha,
        exact_threshold: d.exact_threshold,
    };
    PsStatus::Ok
}

/// # Safety
/// `cfg` must be null or point to writable memory for one `PsBootConfig`.
#[no_mangle]
pub unsafe extern "C" fn ps_boot_config_default(cfg: *mut PsBootConfig) -> PsStatus {
    if cfg.is_null() {
        return fail(PsStatus::NullPointer, "cfg is null");
    }
    let d = BootConfig::default();
    *cfg = PsBootConfig {
        n_boot: d.n_boot,
        seed: d.seed,
        alpha: d.alpha,
        paired: d.paired,
        bias_correct: d.bias_correct,
        var_assumption: PsVar::Equal,
        control_is_x: matches!(d.control, Control::X),
    };
    PsStatus::Ok
}

/// One-sample t-test of `x` against `mu`, or the paired test of `x - y`
/// when `y` is non-null. `mu` holds 0, 1 or `n_vars` values.
///
/// # Safety
/// `x` (and `y` if non-null) must hold `n_obs * n_vars` doubles, `mu` must
/// hold `n_mu` doubles, `cfg` must be null or valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ps_ttest(
    x: *const f64,
    y: *const f64,
    n_obs: usize,
    n_vars: usize,
    mu: *const f64,
    n_mu: usize,
    cfg: *const PsConfig,
    out: *mut *mut PsResult,
) -> PsStatus {
    guard(|| {
        if out.is_null() {
            return fail(PsStatus::NullPointer, "out is null");
        }
        let x = try_ps!(matrix(x, n_obs, n_vars, "x"));
        let y = if y.is_null() {
            None
        } else {
            Some(try_ps!(matrix(y, n_obs, n_vars, "y")))
        };
        let cfg = try_ps!(config(cfg));
        match permuttest(&x, y.as_ref(), optional_slice(mu, n_mu), &cfg) {
            Ok(r) => store(out, vec![r], "ttest"),
            Err(e) => from_error(e),
        }
    })
}

/// One-sample z-test with known `sigma` (1 or `n_vars` values).
///
/// # Safety
/// As for `ps_ttest`; `sigma` must hold `n_sigma` doubles.
#[no_mangle]
pub unsafe extern "C" fn ps_ztest(
    x: *const f64,
    n_obs: usize,
    n_vars: usize,
    mu: *const f64,
    n_mu: usize,
    sigma: *const f64,
    n_sigma: usize,
    cfg: *const PsConfig,
    out: *mut *mut PsResult,
) -> PsStatus {
    guard(|| {
        if out.is_null() || sigma.is_null() {
            return fail(PsStatus::NullPointer, "out or sigma is null");
        }
        let x = try_ps!(matrix(x, n_obs, n_vars, "x"));
        let cfg = try_ps!(config(cfg));
        match permuztest(&x, optional_slice(mu, n_mu), optional_slice(sigma, n_sigma), &cfg) {
            Ok(r) => store(out, vec![r], "ztest"),
            Err(e) => from_error(e),
        }
    })
}

type TwoSampleFn = fn(&DataMatrix, &DataMatrix, &TestConfig) -> permstat::Result<PermutationResult>;

unsafe fn two_sample(
    f: TwoSampleFn,
    command: &'static str,
    x: *const f64,
    nx: usize,
    y: *const f64,
    ny: usize,
    n_vars: usize,
    cfg: *const PsConfig,
    out: *mut *mut PsResult,
) -> PsStatus {
    guard(|| {
        if out.is_null() {
            return fail(PsStatus::NullPointer, "out is null");
        }
        let x = try_ps!(matrix(x, nx, n_vars, "x"));
        let y = try_ps!(matrix(y, ny, n_vars, "y"));
        let cfg = try_ps!(config(cfg));
        match f(&x, &y, &cfg) {
            Ok(r) => store(out, vec![r], command),
            Err(e) => from_error(e),
        }
    })
}

/// Two-sample t-test; `x` is `nx` by `n_vars`, `y` is `ny` by `n_vars`.
///
/// # Safety
/// Pointers must be valid for the stated sizes; `cfg` may be null.
#[no_mangle]
pub unsafe extern "C" fn ps_ttest2(
    x: *const f64,
    nx: usize,
    y: *const f64,
    ny: usize,
    n_vars: usize,
    cfg: *const PsConfig,
    out: *mut *mut PsResult,
) -> PsStatus {
    two_sample(permuttest2, "ttest2", x, nx, y, ny, n_vars, cfg, out)
}

/// Two-sample variance-ratio test.
///
/// # Safety
/// As for `ps_ttest2`.
#[no_mangle]
pub unsafe extern "C" fn ps_vartest2(
    x: *const f64,
    nx: usize,
    y: *const f64,
    ny: usize,
    n_vars: usize,
    cfg: *const PsConfig,
    out: *mut *mut PsResult,
) -> PsStatus {
    two_sample(permuvartest2, "vartest2", x, nx, y, ny, n_vars, cfg, out)
}

/// Correlation test: column `v` of `x` against column `v` of `y`, or every
/// pair of `x`'s columns when `y` is null.
///
/// # Safety
/// `x` (and `y` if non-null) must hold `n_obs * n_vars` doubles.
#[no_mangle]
pub unsafe extern "C" fn ps_corr(
    x: *const f64,
    y: *const f64,
    n_obs: usize,
    n_vars: usize,
    kind: PsCorrKind,
    cfg: *const PsConfig,
    out: *mut *mut PsResult,
) -> PsStatus {
    guard(|| {
        if out.is_null() {
            return fail(PsStatus::NullPointer, "out is null");
        }
        let x = try_ps!(matrix(x, n_obs, n_vars, "x"));
        let y = if y.is_null() {
            None
        } else {
            Some(try_ps!(matrix(y, n_obs, n_vars, "y")))
        };
        let cfg = try_ps!(config(cfg));
        let kind = match kind {
            PsCorrKind::Pearson => CorrelationKind::Pearson,
            PsCorrKind::Spearman => CorrelationKind::Spearman,
            PsCorrKind::Rankit => CorrelationKind::Rankit,
        };
        match permucorr(&x, y.as_ref(), kind, &cfg) {
            Ok(r) => store(out, vec![r], "corr"),
            Err(e) => from_error(e),
        }
    })
}

/// One-way ANOVA; `groups[i]` is the group id of `values[i]`.
///
/// # Safety
/// `values` and `groups` must each hold `n` elements.
#[no_mangle]
pub unsafe extern "C" fn ps_anova1(
    values: *const f64,
    groups: *const u32,
    n: usize,
    cfg: *const PsConfig,
    out: *mut *mut PsResult,
) -> PsStatus {
    guard(|| {
        if out.is_null() || values.is_null() || groups.is_null() {
            return fail(PsStatus::NullPointer, "out, values or groups is null");
        }
        let values = std::slice::from_raw_parts(values, n);
        let groups = std::slice::from_raw_parts(groups, n);
        let mut cfg = try_ps!(config(cfg));
        if cfg.tail == Tail::TwoTailed {
            cfg.tail = Tail::Right;
        }
        match permuanova1(values, groups, &cfg) {
            Ok(r) => store(out, vec![r], "anova1"),
            Err(e) => from_error(e),
        }
    })
}

/// Number of reported variables (or variable pairs).
///
/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ps_result_len(r: *const PsResult) -> usize {
    r.as_ref().map_or(0, |r| r.inner.iter().map(|p| p.n_vars()).sum())
}

/// Copies variable `index` into `*out`.
///
/// # Safety
/// `r` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ps_result_get(r: *const PsResult, index: usize, out: *mut PsVarStat) -> PsStatus {
    guard(|| {
        let (Some(r), false) = (r.as_ref(), out.is_null()) else {
            return fail(PsStatus::NullPointer, "result or out is null");
        };
        let mut i = index;
        for res in &r.inner {
            if i < res.n_vars() {
                *out = match res.stat(i) {
                    Some(s) => PsVarStat {
                        tested: true,
                        statistic: s.statistic,
                        p: s.p,
                        p_uncorrected: s.p_uncorrected,
                        ci_lower: s.ci.lower,
                        ci_upper: s.ci.upper,
                        estimate: s.estimate,
                        se: s.se.unwrap_or(f64::NAN),
                    },
                    None => PsVarStat {
                        tested: false,
                        statistic: f64::NAN,
                        p: f64::NAN,
                        p_uncorrected: f64::NAN,
                        ci_lower: f64::NAN,
                        ci_upper: f64::NAN,
                        estimate: f64::NAN,
                        se: f64::NAN,
                    },
                };
                return PsStatus::Ok;
            }
            i -= res.n_vars();
        }
        fail(PsStatus::OutOfRange, format!("index {index} is out of range"))
    })
}

fn to_c_string(text: String) -> *mut c_char {
    CString::new(text).map_or(ptr::null_mut(), CString::into_raw)
}

/// The result as a JSON document. Free it with `ps_string_free`.
///
/// # Safety
/// `r` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ps_result_to_json(r: *const PsResult, out: *mut *mut c_char) -> PsStatus {
    guard(|| {
        let (Some(r), false) = (r.as_ref(), out.is_null()) else {
            return fail(PsStatus::NullPointer, "result or out is null");
        };
        let refs: Vec<&PermutationResult> = r.inner.iter().collect();
        match serde_json::to_string(&test_envelope(r.command, &refs)) {
            Ok(s) => {
                *out = to_c_string(s);
                PsStatus::Ok
            }
            Err(e) => fail(PsStatus::Internal, e.to_string()),
        }
    })
}

/// # Safety
/// `r` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ps_result_free(r: *mut PsResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Bootstrapped effect sizes. `y` may be null for one-sample measures.
///
/// # Safety
/// `x` must hold `nx * n_vars` doubles, `y` (if non-null) `ny * n_vars`;
/// `cfg` may be null; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_effectsize(
    x: *const f64,
    nx: usize,
    y: *const f64,
    ny: usize,
    n_vars: usize,
    kind: PsEffectKind,
    cfg: *const PsBootConfig,
    out: *mut *mut PsEffect,
) -> PsStatus {
    guard(|| {
        if out.is_null() {
            return fail(PsStatus::NullPointer, "out is null");
        }
        let x = try_ps!(matrix(x, nx, n_vars, "x"));
        let y = if y.is_null() {
            None
        } else {
            Some(try_ps!(matrix(y, ny, n_vars, "y")))
        };
        let boot = match cfg.as_ref() {
            None => BootConfig::default(),
            Some(c) => BootConfig {
                n_boot: c.n_boot,
                seed: c.seed,
                alpha: c.alpha,
                paired: c.paired,
                var_assumption: c.var_assumption.into(),
                bias_correct: c.bias_correct,
                control: if c.control_is_x { Control::X } else { Control::Y },
            },
        };
        let kind = match kind {
            PsEffectKind::Cohen => EffectKind::Cohen,
            PsEffectKind::Glass => EffectKind::Glass,
            PsEffectKind::Cliff => EffectKind::Cliff,
            PsEffectKind::MeanDiff => EffectKind::MeanDiff,
            PsEffectKind::MedianDiff => EffectKind::MedianDiff,
        };
        match booteffectsize(&x, y.as_ref(), kind, &boot) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(PsEffect { inner }));
                PsStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ps_effect_len(r: *const PsEffect) -> usize {
    r.as_ref().map_or(0, |r| r.inner.outcomes.len())
}

/// # Safety
/// `r` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ps_effect_get(r: *const PsEffect, index: usize, out: *mut PsEffectStat) -> PsStatus {
    guard(|| {
        let (Some(r), false) = (r.as_ref(), out.is_null()) else {
            return fail(PsStatus::NullPointer, "result or out is null");
        };
        let Some(o) = r.inner.outcomes.get(index) else {
            return fail(PsStatus::OutOfRange, format!("index {index} is out of range"));
        };
        *out = match o.estimate() {
            Some(e) => PsEffectStat {
                estimated: true,
                effect: e.effect,
                ci_lower: e.ci.lower,
                ci_upper: e.ci.upper,
                correction_factor: e.correction_factor,
            },
            None => PsEffectStat {
                estimated: false,
                effect: f64::NAN,
                ci_lower: f64::NAN,
                ci_upper: f64::NAN,
                correction_factor: f64::NAN,
            },
        };
        PsStatus::Ok
    })
}

/// # Safety
/// `r` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ps_effect_to_json(r: *const PsEffect, out: *mut *mut c_char) -> PsStatus {
    guard(|| {
        let (Some(r), false) = (r.as_ref(), out.is_null()) else {
            return fail(PsStatus::NullPointer, "result or out is null");
        };
        match serde_json::to_string(&effect_envelope(&r.inner)) {
            Ok(s) => {
                *out = to_c_string(s);
                PsStatus::Ok
            }
            Err(e) => fail(PsStatus::Internal, e.to_string()),
        }
    })
}

/// # Safety
/// `r` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ps_effect_free(r: *mut PsEffect) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Frees a string returned by this library.
///
/// # Safety
/// `s` must be null or a string from `ps_*_to_json` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ps_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Copies the last error into `buf` (always NUL-terminated when `len > 0`)
/// and returns the full message length, or 0 when there is none.
///
/// # Safety
/// `buf` must be null or writable for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn ps_last_error_copy(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_deref().map(CStr::to_bytes) else {
            return 0;
        };
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}
