//! C ABI over `expweight`.
//!
//! Families and priors are opaque handles created by `ew_*_new`/`ew_family_*`
//! constructors and released with the matching `_free`. Every fallible call
//! returns an [`EwStatus`]; on failure `ew_last_error` gives a message that
//! stays valid until the next failing call on the same thread.
//!
//! Array arguments are `(pointer, length)` pairs. Null pointers with a zero
//! length are accepted as empty arrays.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use expweight::estimators::{aggregate, exp_weights, ure_minimizer};
use expweight::experiments::{run_scenario, Scenario};
use expweight::families::{
    build_cutoff, build_landweber, build_pinsker, build_tikhonov, check_prior_identity, prior_weights, MultiplierFamily,
    PriorWeights, Spectrum,
};
use expweight::model::{exact_risk, oracle_risk, ure, MeanVector, Multiplier, Observation};
use expweight::Error;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Dimension = 3,
    NotOrdered = 4,
    Config = 5,
    Io = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Opaque ordered multiplier family.
pub struct EwFamily(MultiplierFamily);

/// Opaque prior weights for one family and one beta.
pub struct EwPriors(PriorWeights);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> EwStatus {
    match err {
        Error::Dimension { .. } => EwStatus::Dimension,
        Error::NotOrdered(_) => EwStatus::NotOrdered,
        Error::Config(_) => EwStatus::Config,
        Error::Io(_) => EwStatus::Io,
        _ => EwStatus::InvalidArgument,
    }
}

struct Fail(EwStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(EwStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> EwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EwStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            EwStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn family<'a>(p: *const EwFamily) -> Result<&'a MultiplierFamily, Fail> {
    p.as_ref().map(|f| &f.0).ok_or_else(|| null("family"))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

fn copy_into(dst: &mut [f64], src: &[f64]) -> Result<(), Fail> {
    if dst.len() < src.len() {
        return Err(Fail(EwStatus::BufferTooSmall, format!("buffer holds {} values, need {}", dst.len(), src.len())));
    }
    dst[..src.len()].copy_from_slice(src);
    Ok(())
}

unsafe fn emit_family(out: *mut *mut EwFamily, fam: MultiplierFamily) -> Result<(), Fail> {
    write(out, Box::into_raw(Box::new(EwFamily(fam))), "out")
}

/// Message for the last failing call on this thread; empty if none.
#[no_mangle]
pub extern "C" fn ew_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ew_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Tikhonov family `h_k = 1 / (1 + alpha lambda_k)` over an ascending spectrum.
///
/// # Safety
/// `eigenvalues` and `alphas` must point to `n` and `m` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ew_family_tikhonov(
    eigenvalues: *const f64,
    n: usize,
    alphas: *const f64,
    m: usize,
    out: *mut *mut EwFamily,
) -> EwStatus {
    guard(|| {
        let spectrum = Spectrum::new(slice(eigenvalues, n, "eigenvalues")?.to_vec(), "ffi")?;
        emit_family(out, build_tikhonov(&spectrum, slice(alphas, m, "alphas")?)?)
    })
}

/// Pinsker family `h_k = (1 - alpha lambda_k)_+`.
///
/// # Safety
/// As for [`ew_family_tikhonov`].
#[no_mangle]
pub unsafe extern "C" fn ew_family_pinsker(
    eigenvalues: *const f64,
    n: usize,
    alphas: *const f64,
    m: usize,
    out: *mut *mut EwFamily,
) -> EwStatus {
    guard(|| {
        let spectrum = Spectrum::new(slice(eigenvalues, n, "eigenvalues")?.to_vec(), "ffi")?;
        emit_family(out, build_pinsker(&spectrum, slice(alphas, m, "alphas")?)?)
    })
}

/// Spectral cut-off family with strictly ascending cut points in `[0, n]`.
///
/// # Safety
/// `cuts` must point to `m` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ew_family_cutoff(n: usize, cuts: *const usize, m: usize, out: *mut *mut EwFamily) -> EwStatus {
    guard(|| emit_family(out, build_cutoff(n, slice(cuts, m, "cuts")?)?))
}

/// Landweber family after `counts[j]` iterations of size `step`.
///
/// # Safety
/// `eigenvalues` and `counts` must point to `n` and `m` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ew_family_landweber(
    eigenvalues: *const f64,
    n: usize,
    step: f64,
    counts: *const u32,
    m: usize,
    out: *mut *mut EwFamily,
) -> EwStatus {
    guard(|| {
        let spectrum = Spectrum::new(slice(eigenvalues, n, "eigenvalues")?.to_vec(), "ffi")?;
        emit_family(out, build_landweber(&spectrum, step, slice(counts, m, "counts")?)?)
    })
}

/// Custom family from `m` members of dimension `n`, row-major.
///
/// # Safety
/// `values` must point to `m * n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ew_family_custom(values: *const f64, m: usize, n: usize, out: *mut *mut EwFamily) -> EwStatus {
    guard(|| {
        let len = m.checked_mul(n).ok_or_else(|| Fail(EwStatus::InvalidArgument, "m * n overflows".into()))?;
        let flat = slice(values, len, "values")?;
        let members = if n == 0 { vec![Vec::new(); m] } else { flat.chunks(n).map(<[f64]>::to_vec).collect() };
        emit_family(out, MultiplierFamily::custom(members)?)
    })
}

/// Releases a family. Null is ignored.
///
/// # Safety
/// `family` must come from an `ew_family_*` constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ew_family_free(family: *mut EwFamily) {
    if !family.is_null() {
        drop(Box::from_raw(family));
    }
}

/// Number of members, or 0 for a null handle.
///
/// # Safety
/// `family` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ew_family_len(family: *const EwFamily) -> usize {
    family.as_ref().map_or(0, |f| f.0.len())
}

/// Dimension `n`, or 0 for a null handle.
///
/// # Safety
/// `family` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ew_family_dim(family: *const EwFamily) -> usize {
    family.as_ref().map_or(0, |f| f.0.dim())
}

/// Copies member `index` (0-based, family order) into `out[0..n]`.
///
/// # Safety
/// `family` must be live; `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ew_family_member(family: *const EwFamily, index: usize, out: *mut f64, len: usize) -> EwStatus {
    guard(|| {
        let fam = self::family(family)?;
        if index >= fam.len() {
            return Err(Fail(EwStatus::InvalidArgument, format!("member {index} of {}", fam.len())));
        }
        copy_into(slice_mut(out, len, "out")?, fam.member(index).values())
    })
}

/// Prior weights of `family` at temperature `beta`.
///
/// # Safety
/// `family` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ew_priors_new(family: *const EwFamily, beta: f64, out: *mut *mut EwPriors) -> EwStatus {
    guard(|| {
        let priors = prior_weights(self::family(family)?, beta)?;
        write(out, Box::into_raw(Box::new(EwPriors(priors))), "out")
    })
}

/// Releases priors. Null is ignored.
///
/// # Safety
/// `priors` must come from [`ew_priors_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ew_priors_free(priors: *mut EwPriors) {
    if !priors.is_null() {
        drop(Box::from_raw(priors));
    }
}

/// Copies the prior weights into `out[0..|H|]`.
///
/// # Safety
/// `priors` must be live; `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ew_priors_weights(priors: *const EwPriors, out: *mut f64, len: usize) -> EwStatus {
    guard(|| {
        let p = priors.as_ref().ok_or_else(|| null("priors"))?;
        copy_into(slice_mut(out, len, "out")?, p.0.weights())
    })
}

/// Largest relative residual of the prior telescoping identity.
///
/// # Safety
/// Both handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ew_prior_identity_residual(
    priors: *const EwPriors,
    family: *const EwFamily,
    out: *mut f64,
) -> EwStatus {
    guard(|| {
        let p = priors.as_ref().ok_or_else(|| null("priors"))?;
        write(out, check_prior_identity(&p.0, self::family(family)?)?, "out")
    })
}

/// Unbiased risk estimate of the linear estimate `h Y`.
///
/// # Safety
/// `y` and `h` must point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ew_ure(y: *const f64, h: *const f64, n: usize, sigma: f64, out: *mut f64) -> EwStatus {
    guard(|| {
        let obs = Observation::new(slice(y, n, "y")?.to_vec(), sigma)?;
        let h = Multiplier::new(slice(h, n, "h")?.to_vec())?;
        write(out, ure(&obs, &h)?, "out")
    })
}

/// Exact risk `||(1 - h) mu||^2 + sigma^2 ||h||^2`.
///
/// # Safety
/// `h` and `mu` must point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ew_exact_risk(h: *const f64, mu: *const f64, n: usize, sigma: f64, out: *mut f64) -> EwStatus {
    guard(|| {
        let h = Multiplier::new(slice(h, n, "h")?.to_vec())?;
        let mu = MeanVector::new(slice(mu, n, "mu")?.to_vec())?;
        write(out, exact_risk(&h, &mu, sigma)?, "out")
    })
}

/// Oracle risk over the family and the index attaining it.
///
/// # Safety
/// `family` must be live; `mu` must point to `n` readable doubles; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ew_oracle(
    family: *const EwFamily,
    mu: *const f64,
    n: usize,
    sigma: f64,
    out_risk: *mut f64,
    out_index: *mut usize,
) -> EwStatus {
    guard(|| {
        let mu = MeanVector::new(slice(mu, n, "mu")?.to_vec())?;
        let (risk, index) = oracle_risk(self::family(family)?, &mu, sigma)?;
        write(out_risk, risk, "out_risk")?;
        write(out_index, index, "out_index")
    })
}

/// Index of the URE-minimizing member.
///
/// # Safety
/// `family` must be live; `y` must point to `n` readable doubles; `out_index` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ew_ure_minimizer(
    family: *const EwFamily,
    y: *const f64,
    n: usize,
    sigma: f64,
    out_index: *mut usize,
) -> EwStatus {
    guard(|| {
        let obs = Observation::new(slice(y, n, "y")?.to_vec(), sigma)?;
        let (_, index) = ure_minimizer(&obs, self::family(family)?)?;
        write(out_index, index, "out_index")
    })
}

/// Exponentially weighted aggregate at `y`.
///
/// Writes the estimate into `out_estimate[0..n]`. `out_weights` (length
/// `weights_len >= |H|`), `out_divergence` and `out_weighted_ure` may be null.
///
/// # Safety
/// Handles must be live and built for the same family; pointers must be valid for their lengths.
#[no_mangle]
pub unsafe extern "C" fn ew_aggregate(
    family: *const EwFamily,
    priors: *const EwPriors,
    y: *const f64,
    n: usize,
    sigma: f64,
    out_estimate: *mut f64,
    out_weights: *mut f64,
    weights_len: usize,
    out_divergence: *mut f64,
    out_weighted_ure: *mut f64,
) -> EwStatus {
    guard(|| {
        let fam = self::family(family)?;
        let p = priors.as_ref().ok_or_else(|| null("priors"))?;
        let obs = Observation::new(slice(y, n, "y")?.to_vec(), sigma)?;
        let profile = exp_weights(&obs, fam, &p.0, p.0.beta())?;
        let result = aggregate(&obs, fam, &profile)?;
        copy_into(slice_mut(out_estimate, n, "out_estimate")?, &result.estimate)?;
        if !out_weights.is_null() {
            copy_into(slice_mut(out_weights, weights_len, "out_weights")?, profile.weights())?;
        }
        if !out_divergence.is_null() {
            out_divergence.write(result.divergence);
        }
        if !out_weighted_ure.is_null() {
            out_weighted_ure.write(result.weighted_ure);
        }
        Ok(())
    })
}

/// Runs a Monte Carlo scenario given as JSON (the same fields as a
/// `[[scenario]]` config block) and returns the risk report as JSON.
///
/// The report string is owned by the caller and released with [`ew_string_free`].
///
/// # Safety
/// `scenario_json` must be a NUL-terminated string; `out_report` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ew_run_scenario_json(scenario_json: *const c_char, out_report: *mut *mut c_char) -> EwStatus {
    guard(|| {
        if scenario_json.is_null() {
            return Err(null("scenario_json"));
        }
        if out_report.is_null() {
            return Err(null("out_report"));
        }
        out_report.write(ptr::null_mut());
        let text = CStr::from_ptr(scenario_json)
            .to_str()
            .map_err(|e| Fail(EwStatus::InvalidArgument, format!("scenario is not UTF-8: {e}")))?;
        let scenario: Scenario =
            serde_json::from_str(text).map_err(|e| Fail(EwStatus::Config, format!("scenario: {e}")))?;
        let report = run_scenario(&scenario)?;
        let json = serde_json::to_string(&report).map_err(|e| Fail(EwStatus::Io, e.to_string()))?;
        out_report.write(CString::new(json).map_err(|e| Fail(EwStatus::Io, e.to_string()))?.into_raw());
        Ok(())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ew_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
