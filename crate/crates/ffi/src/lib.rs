//! C ABI for the binauth library.
//!
//! Handles are opaque pointers created and freed by paired functions; all
//! fallible calls return a [`BinauthStatus`] and write results through out
//! pointers. The header `include/binauth.h` is generated by cbindgen at
//! build time.

use std::ffi::{c_char, CStr};

use binauth::codec::{self, BinningCode, RatePair};
use binauth::decoders::DecodingMetric;
use binauth::exponents::{
    fa_exponent_gallager, fa_exponent_types, fr_expurgated_exponent, fr_map_exponent,
    fr_random_exponent, secrecy_exponent, ExponentResult, GridOpts,
};
use binauth::measures::{CondPmf, JointPmf, Pmf};
use binauth::montecarlo::{estimate_fa, estimate_fr, exact_fr, exact_leakage, SourceModel};
use binauth::rng::SplitMix64;
use binauth::Error;

/// Status codes of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinauthStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    GuardExceeded = 3,
    EmptyBin = 4,
    IoError = 5,
}

fn status_of(err: &Error) -> BinauthStatus {
    match err {
        Error::GuardExceeded { .. } => BinauthStatus::GuardExceeded,
        Error::EmptyBin { .. } => BinauthStatus::EmptyBin,
        Error::Io(_) | Error::MalformedCodeFile(_) => BinauthStatus::IoError,
        _ => BinauthStatus::InvalidArgument,
    }
}

/// Opaque source model handle.
pub struct BinauthModel {
    inner: SourceModel,
}

/// Opaque decoding metric handle.
pub struct BinauthMetric {
    inner: DecodingMetric,
}

/// Opaque enrollment code handle.
pub struct BinauthCode {
    inner: BinningCode,
}

/// Exponent value plus grid metadata (C-layout mirror of the library's
/// result type; `value` is `+inf`-capable).
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BinauthExponent {
    pub value: f64,
    pub grid_resolution: u32,
    pub refined: bool,
    pub converged: bool,
}

impl From<&ExponentResult> for BinauthExponent {
    fn from(r: &ExponentResult) -> Self {
        Self {
            value: r.value,
            grid_resolution: r.grid_resolution,
            refined: r.refined,
            converged: r.converged,
        }
    }
}

/// Estimate triple: point estimate and Wilson 95% bounds.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BinauthEstimate {
    pub p_hat: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Human-readable name of a status code (static storage).
#[no_mangle]
pub extern "C" fn binauth_status_name(status: BinauthStatus) -> *const c_char {
    let name: &'static [u8] = match status {
        BinauthStatus::Ok => b"ok\0",
        BinauthStatus::NullPointer => b"null pointer\0",
        BinauthStatus::InvalidArgument => b"invalid argument\0",
        BinauthStatus::GuardExceeded => b"enumeration guard exceeded\0",
        BinauthStatus::EmptyBin => b"empty helper bin\0",
        BinauthStatus::IoError => b"i/o error\0",
    };
    name.as_ptr() as *const c_char
}

macro_rules! nonnull {
    ($ptr:expr) => {
        match unsafe { $ptr.as_ref() } {
            Some(r) => r,
            None => return BinauthStatus::NullPointer,
        }
    };
}

macro_rules! out_slot {
    ($ptr:expr) => {
        match unsafe { $ptr.as_mut() } {
            Some(r) => r,
            None => return BinauthStatus::NullPointer,
        }
    };
}

/// Create a doubly-symmetric-binary-source model.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn binauth_model_dsbs(
    crossover: f64,
    out: *mut *mut BinauthModel,
) -> BinauthStatus {
    let slot = out_slot!(out);
    match SourceModel::dsbs(crossover) {
        Ok(inner) => {
            *slot = Box::into_raw(Box::new(BinauthModel { inner }));
            BinauthStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Create a model from a row-major joint table of `x_alphabet * y_alphabet`
/// probabilities.
///
/// # Safety
/// `probs` must point to `x_alphabet * y_alphabet` readable doubles and
/// `out` to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn binauth_model_from_joint(
    x_alphabet: usize,
    y_alphabet: usize,
    probs: *const f64,
    out: *mut *mut BinauthModel,
) -> BinauthStatus {
    let slot = out_slot!(out);
    if probs.is_null() || x_alphabet == 0 || y_alphabet == 0 {
        return BinauthStatus::NullPointer;
    }
    let table = std::slice::from_raw_parts(probs, x_alphabet * y_alphabet).to_vec();
    let joint = match JointPmf::new(x_alphabet, y_alphabet, table) {
        Ok(j) => j,
        Err(e) => return status_of(&e),
    };
    match SourceModel::new(joint) {
        Ok(inner) => {
            *slot = Box::into_raw(Box::new(BinauthModel { inner }));
            BinauthStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// # Safety
/// `model` must be a handle from a `binauth_model_*` constructor, not yet
/// freed; NULL is a no-op.
#[no_mangle]
pub unsafe extern "C" fn binauth_model_free(model: *mut BinauthModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Matched tempered-likelihood metric with the model's own channel.
///
/// # Safety
/// `model` must be a live model handle, `out` a handle slot.
#[no_mangle]
pub unsafe extern "C" fn binauth_metric_tempered(
    model: *const BinauthModel,
    beta: f64,
    out: *mut *mut BinauthMetric,
) -> BinauthStatus {
    let model = nonnull!(model);
    let slot = out_slot!(out);
    match DecodingMetric::tempered(beta, model.inner.p_x_given_y().clone()) {
        Ok(inner) => {
            *slot = Box::into_raw(Box::new(BinauthMetric { inner }));
            BinauthStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Mismatched metric with an explicit channel: `channel` holds
/// `y_alphabet` rows of `x_alphabet` probabilities `P'(x|y)`.
///
/// # Safety
/// `channel` must point to `x_alphabet * y_alphabet` readable doubles and
/// `out` to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn binauth_metric_mismatched(
    x_alphabet: usize,
    y_alphabet: usize,
    channel: *const f64,
    beta: f64,
    out: *mut *mut BinauthMetric,
) -> BinauthStatus {
    let slot = out_slot!(out);
    if channel.is_null() || x_alphabet == 0 || y_alphabet == 0 {
        return BinauthStatus::NullPointer;
    }
    let flat = std::slice::from_raw_parts(channel, x_alphabet * y_alphabet);
    let rows: Result<Vec<Pmf>, _> = (0..y_alphabet)
        .map(|y| Pmf::new(flat[y * x_alphabet..(y + 1) * x_alphabet].to_vec()))
        .collect();
    let cond = match rows.and_then(CondPmf::new) {
        Ok(c) => c,
        Err(e) => return status_of(&e),
    };
    match DecodingMetric::mismatched(beta, cond) {
        Ok(inner) => {
            *slot = Box::into_raw(Box::new(BinauthMetric { inner }));
            BinauthStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Minimum-entropy metric.
///
/// # Safety
/// `out` must be a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn binauth_metric_min_entropy(
    beta: f64,
    out: *mut *mut BinauthMetric,
) -> BinauthStatus {
    let slot = out_slot!(out);
    match DecodingMetric::min_entropy(beta) {
        Ok(inner) => {
            *slot = Box::into_raw(Box::new(BinauthMetric { inner }));
            BinauthStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// β → ∞ limit of an existing metric (the base handle is copied, not
/// consumed).
///
/// # Safety
/// `base` must be a live metric handle, `out` a handle slot.
#[no_mangle]
pub unsafe extern "C" fn binauth_metric_map_limit(
    base: *const BinauthMetric,
    out: *mut *mut BinauthMetric,
) -> BinauthStatus {
    let base = nonnull!(base);
    let slot = out_slot!(out);
    match DecodingMetric::map_limit(base.inner.clone()) {
        Ok(inner) => {
            *slot = Box::into_raw(Box::new(BinauthMetric { inner }));
            BinauthStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// # Safety
/// `metric` must be a live metric handle; NULL is a no-op.
#[no_mangle]
pub unsafe extern "C" fn binauth_metric_free(metric: *mut BinauthMetric) {
    if !metric.is_null() {
        drop(Box::from_raw(metric));
    }
}

/// Draw a random-binning enrollment code.
///
/// # Safety
/// `out` must be a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn binauth_code_sample(
    n: u32,
    x_alphabet: u32,
    r_s: f64,
    r_w: f64,
    seed: u64,
    out: *mut *mut BinauthCode,
) -> BinauthStatus {
    let slot = out_slot!(out);
    let rates = match RatePair::new(r_s, r_w) {
        Ok(r) => r,
        Err(e) => return status_of(&e),
    };
    match codec::sample_code(n, x_alphabet, rates, seed) {
        Ok(inner) => {
            *slot = Box::into_raw(Box::new(BinauthCode { inner }));
            BinauthStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// # Safety
/// `code` must be a live code handle; NULL is a no-op.
#[no_mangle]
pub unsafe extern "C" fn binauth_code_free(code: *mut BinauthCode) {
    if !code.is_null() {
        drop(Box::from_raw(code));
    }
}

/// Number of key values of a code (0 on NULL).
///
/// # Safety
/// `code` must be a live code handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn binauth_code_num_keys(code: *const BinauthCode) -> u64 {
    code.as_ref().map_or(0, |c| c.inner.num_keys())
}

/// Number of helper values of a code (0 on NULL).
///
/// # Safety
/// `code` must be a live code handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn binauth_code_num_helpers(code: *const BinauthCode) -> u64 {
    code.as_ref().map_or(0, |c| c.inner.num_helpers())
}

/// Enroll a source vector of `n` symbols; writes the key and helper
/// indices.
///
/// # Safety
/// `symbols` must point to `len` readable bytes; `key_out` and
/// `helper_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn binauth_code_enroll(
    code: *const BinauthCode,
    symbols: *const u8,
    len: usize,
    key_out: *mut u32,
    helper_out: *mut u32,
) -> BinauthStatus {
    let code = nonnull!(code);
    let key_out = out_slot!(key_out);
    let helper_out = out_slot!(helper_out);
    if symbols.is_null() {
        return BinauthStatus::NullPointer;
    }
    let x: Vec<usize> = std::slice::from_raw_parts(symbols, len)
        .iter()
        .map(|&b| b as usize)
        .collect();
    match codec::enroll(&code.inner, &x) {
        Ok((s, w)) => {
            *key_out = s;
            *helper_out = w;
            BinauthStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Write a code to the binary dump format at `path` (NUL-terminated UTF-8).
///
/// # Safety
/// `code` must be live and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn binauth_code_write(
    code: *const BinauthCode,
    path: *const c_char,
) -> BinauthStatus {
    let code = nonnull!(code);
    let path = match path_str(path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    match codec::write_code_file(&code.inner, path) {
        Ok(()) => BinauthStatus::Ok,
        Err(e) => status_of(&e),
    }
}

/// Read a code from the binary dump format.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a handle slot.
#[no_mangle]
pub unsafe extern "C" fn binauth_code_read(
    path: *const c_char,
    out: *mut *mut BinauthCode,
) -> BinauthStatus {
    let slot = out_slot!(out);
    let path = match path_str(path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    match codec::read_code_file(path) {
        Ok(inner) => {
            *slot = Box::into_raw(Box::new(BinauthCode { inner }));
            BinauthStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

unsafe fn path_str(path: *const c_char) -> Result<String, BinauthStatus> {
    if path.is_null() {
        return Err(BinauthStatus::NullPointer);
    }
    CStr::from_ptr(path)
        .to_str()
        .map(String::from)
        .map_err(|_| BinauthStatus::InvalidArgument)
}

/// Sample the stochastic decoder once for `(y, w)`.
///
/// # Safety
/// All handles must be live; `y` must point to `y_len` readable bytes and
/// `key_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn binauth_stochastic_decode(
    code: *const BinauthCode,
    model: *const BinauthModel,
    metric: *const BinauthMetric,
    y: *const u8,
    y_len: usize,
    helper: u32,
    stream_seed: u64,
    key_out: *mut u32,
) -> BinauthStatus {
    let code = nonnull!(code);
    let model = nonnull!(model);
    let metric = nonnull!(metric);
    let key_out = out_slot!(key_out);
    if y.is_null() {
        return BinauthStatus::NullPointer;
    }
    let y: Vec<usize> = std::slice::from_raw_parts(y, y_len)
        .iter()
        .map(|&b| b as usize)
        .collect();
    let mut rng = SplitMix64::new(stream_seed);
    match binauth::decoders::stochastic_decode(
        &code.inner,
        &metric.inner,
        &y,
        model.inner.y_size(),
        helper,
        &mut rng,
    ) {
        Ok(s) => {
            *key_out = s;
            BinauthStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Exact false-reject probability of one code.
///
/// # Safety
/// All handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn binauth_exact_fr(
    code: *const BinauthCode,
    model: *const BinauthModel,
    metric: *const BinauthMetric,
    out: *mut f64,
) -> BinauthStatus {
    let code = nonnull!(code);
    let model = nonnull!(model);
    let metric = nonnull!(metric);
    let out = out_slot!(out);
    match exact_fr(&code.inner, &model.inner, &metric.inner) {
        Ok(v) => {
            *out = v;
            BinauthStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Exact key–helper leakage `I(S;W)` of one code, in nats.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn binauth_exact_leakage(
    code: *const BinauthCode,
    model: *const BinauthModel,
    out: *mut f64,
) -> BinauthStatus {
    let code = nonnull!(code);
    let model = nonnull!(model);
    let out = out_slot!(out);
    match exact_leakage(&code.inner, model.inner.p_x()) {
        Ok(v) => {
            *out = v;
            BinauthStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

fn opts(grid_resolution: u32) -> GridOpts {
    GridOpts::with_resolution(grid_resolution.max(2))
}

/// Random-coding false-reject exponent at helper rate `r_w`.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn binauth_fr_random_exponent(
    model: *const BinauthModel,
    metric: *const BinauthMetric,
    r_w: f64,
    grid_resolution: u32,
    out: *mut BinauthExponent,
) -> BinauthStatus {
    let model = nonnull!(model);
    let metric = nonnull!(metric);
    let out = out_slot!(out);
    match fr_random_exponent(model.inner.joint(), r_w, &metric.inner, &opts(grid_resolution)) {
        Ok(r) => {
            *out = BinauthExponent::from(&r);
            BinauthStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// MAP-decoder false-reject exponent.
///
/// # Safety
/// `model` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn binauth_fr_map_exponent(
    model: *const BinauthModel,
    r_w: f64,
    grid_resolution: u32,
    out: *mut BinauthExponent,
) -> BinauthStatus {
    let model = nonnull!(model);
    let out = out_slot!(out);
    match fr_map_exponent(model.inner.joint(), r_w, &opts(grid_resolution)) {
        Ok(r) => {
            *out = BinauthExponent::from(&r);
            BinauthStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// False-accept exponent, types form.
///
/// # Safety
/// `model` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn binauth_fa_exponent_types(
    model: *const BinauthModel,
    r_w: f64,
    r_s: f64,
    grid_resolution: u32,
    out: *mut BinauthExponent,
) -> BinauthStatus {
    let model = nonnull!(model);
    let out = out_slot!(out);
    match fa_exponent_types(model.inner.p_x(), r_w, r_s, &opts(grid_resolution)) {
        Ok(r) => {
            *out = BinauthExponent::from(&r);
            BinauthStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// False-accept exponent, Gallager form.
///
/// # Safety
/// `model` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn binauth_fa_exponent_gallager(
    model: *const BinauthModel,
    r_w: f64,
    r_s: f64,
    grid_resolution: u32,
    out: *mut BinauthExponent,
) -> BinauthStatus {
    let model = nonnull!(model);
    let out = out_slot!(out);
    match fa_exponent_gallager(model.inner.p_x(), r_w, r_s, &opts(grid_resolution)) {
        Ok(r) => {
            *out = BinauthExponent::from(&r);
            BinauthStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Secrecy exponent at total rate `rate = r_s + r_w`.
///
/// # Safety
/// `model` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn binauth_secrecy_exponent(
    model: *const BinauthModel,
    rate: f64,
    grid_resolution: u32,
    out: *mut BinauthExponent,
) -> BinauthStatus {
    let model = nonnull!(model);
    let out = out_slot!(out);
    match secrecy_exponent(model.inner.p_x(), rate, &opts(grid_resolution)) {
        Ok(r) => {
            *out = BinauthExponent::from(&r);
            BinauthStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Expurgated false-reject exponent for the model's source type.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn binauth_fr_expurgated_exponent(
    model: *const BinauthModel,
    metric: *const BinauthMetric,
    r_w: f64,
    grid_resolution: u32,
    out: *mut BinauthExponent,
) -> BinauthStatus {
    let model = nonnull!(model);
    let metric = nonnull!(metric);
    let out = out_slot!(out);
    match fr_expurgated_exponent(
        model.inner.p_x(),
        model.inner.p_y_given_x(),
        r_w,
        &metric.inner,
        &opts(grid_resolution),
    ) {
        Ok(r) => {
            *out = BinauthExponent::from(&r);
            BinauthStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Monte Carlo false-reject estimate (Wilson 95% interval).
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn binauth_estimate_fr(
    model: *const BinauthModel,
    metric: *const BinauthMetric,
    n: u32,
    r_s: f64,
    r_w: f64,
    num_codes: u32,
    trials_per_code: u64,
    master_seed: u64,
    out: *mut BinauthEstimate,
) -> BinauthStatus {
    let model = nonnull!(model);
    let metric = nonnull!(metric);
    let out = out_slot!(out);
    let rates = match RatePair::new(r_s, r_w) {
        Ok(r) => r,
        Err(e) => return status_of(&e),
    };
    match estimate_fr(
        &model.inner,
        rates,
        &metric.inner,
        n,
        num_codes,
        trials_per_code,
        master_seed,
    ) {
        Ok(rep) => {
            let e = rep.fr.expect("fr estimate present");
            *out = BinauthEstimate {
                p_hat: e.p_hat,
                lo: e.lo,
                hi: e.hi,
            };
            BinauthStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Monte Carlo attack-success (false-accept) estimate.
///
/// # Safety
/// `model` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn binauth_estimate_fa(
    model: *const BinauthModel,
    n: u32,
    r_s: f64,
    r_w: f64,
    num_codes: u32,
    trials_per_code: u64,
    master_seed: u64,
    out: *mut BinauthEstimate,
) -> BinauthStatus {
    let model = nonnull!(model);
    let out = out_slot!(out);
    let rates = match RatePair::new(r_s, r_w) {
        Ok(r) => r,
        Err(e) => return status_of(&e),
    };
    match estimate_fa(
        &model.inner,
        rates,
        n,
        num_codes,
        trials_per_code,
        master_seed,
    ) {
        Ok(rep) => {
            let e = rep.fa.expect("fa estimate present");
            *out = BinauthEstimate {
                p_hat: e.p_hat,
                lo: e.lo,
                hi: e.hi,
            };
            BinauthStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}
