//! C ABI over `adsgamma`.
//!
//! Every entry point returns an [`AdsgStatus`]; results go through out-pointers.
//! On failure the message is available from [`adsg_last_error`] on the same thread.
//! Strings handed out by the library are released with [`adsg_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use adsgamma::family::{check_assumptions, load_family, Preset, SequenceFamily};
use adsgamma::hyperbolic::{pseudo_norm, AdSCoords, Mobius};
use adsgamma::orbit::{count_orbit, lower_bound_witness_count, tuple_count_bruteforce, CountLimits, PseudoBallQuery};
use adsgamma::spectral::{psi, EigenFunctionSpec};
use adsgamma::words::estimate_epsilon;
use adsgamma::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdsgStatus {
    Ok = 0,
    Domain = 1,
    Internal = 2,
    UnsupportedRange = 3,
    Chart = 4,
    Pole = 5,
    Assumption = 6,
    Io = 7,
    Parse = 8,
    NullPointer = 9,
    Utf8 = 10,
    Panic = 11,
}

impl From<&Error> for AdsgStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Domain(_) => AdsgStatus::Domain,
            Error::Internal(_) => AdsgStatus::Internal,
            Error::UnsupportedRange(_) => AdsgStatus::UnsupportedRange,
            Error::Chart(_) => AdsgStatus::Chart,
            Error::Pole(_) => AdsgStatus::Pole,
            Error::Assumption(_) => AdsgStatus::Assumption,
            Error::Io(_) => AdsgStatus::Io,
            Error::Parse(_) => AdsgStatus::Parse,
        }
    }
}

/// Opaque sequence family.
pub struct AdsgFamily {
    inner: SequenceFamily,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = CString::new(msg.into().replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(s));
}

struct Fail(AdsgStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(AdsgStatus::from(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> AdsgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AdsgStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("panic inside adsgamma");
            AdsgStatus::Panic
        }
    }
}

fn null() -> Fail {
    Fail(AdsgStatus::NullPointer, "null pointer argument".into())
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null());
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(AdsgStatus::Utf8, "argument is not UTF-8".into()))
}

unsafe fn family<'a>(p: *const AdsgFamily) -> Result<&'a SequenceFamily, Fail> {
    p.as_ref().map(|f| &f.inner).ok_or_else(null)
}

unsafe fn put<T>(out: *mut T, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null());
    }
    out.write(v);
    Ok(())
}

/// Message of the last failed call on this thread, or null. Owned by the library.
#[no_mangle]
pub extern "C" fn adsg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by the library.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn adsg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a preset family by name (`double_exp`, `gueritaud_kassel`, `log_slow`).
///
/// # Safety
/// `name` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn adsg_family_preset(name: *const c_char, out: *mut *mut AdsgFamily) -> AdsgStatus {
    guard(|| {
        let p = Preset::from_name(text(name)?)?;
        put(out, Box::into_raw(Box::new(AdsgFamily { inner: SequenceFamily::preset(p) })))
    })
}

/// Loads a family definition file.
///
/// # Safety
/// `path` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn adsg_family_load(path: *const c_char, out: *mut *mut AdsgFamily) -> AdsgStatus {
    guard(|| {
        let fam = load_family(Path::new(text(path)?))?;
        put(out, Box::into_raw(Box::new(AdsgFamily { inner: fam })))
    })
}

/// # Safety
/// `fam` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn adsg_family_free(fam: *mut AdsgFamily) {
    if !fam.is_null() {
        drop(Box::from_raw(fam));
    }
}

/// Default `ν` of the family.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn adsg_family_nu(fam: *const AdsgFamily, out: *mut u64) -> AdsgStatus {
    guard(|| put(out, family(fam)?.nu))
}

/// `(a1, a2, r, R)` at `k` as signs and natural logs of magnitudes.
///
/// # Safety
/// `signs` and `logmags` must each point to four writable elements.
#[no_mangle]
pub unsafe extern "C" fn adsg_family_values(fam: *const AdsgFamily, k: u64, signs: *mut i8, logmags: *mut f64) -> AdsgStatus {
    guard(|| {
        let v = family(fam)?.values(k)?;
        if signs.is_null() || logmags.is_null() {
            return Err(null());
        }
        for (i, x) in [v.a1, v.a2, v.r, v.big_r].into_iter().enumerate() {
            signs.add(i).write(x.sign());
            logmags.add(i).write(x.logmag());
        }
        Ok(())
    })
}

/// Whether the ping-pong assumptions hold on `[nu, k_max]`; the first bad index or 0.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn adsg_check_assumptions(
    fam: *const AdsgFamily,
    nu: u64,
    k_max: u64,
    ok: *mut bool,
    first_violation: *mut u64,
) -> AdsgStatus {
    guard(|| {
        let f = family(fam)?.clone().with_nu(nu);
        let rep = check_assumptions(&f, k_max)?;
        put(ok, rep.assumption1_ok)?;
        put(first_violation, rep.first_violation.unwrap_or(0))
    })
}

/// Empirical `ε̂` over the box `[nu, k_max]`, lengths up to `max_len`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn adsg_estimate_epsilon(fam: *const AdsgFamily, nu: u64, k_max: u64, max_len: u32, out: *mut f64) -> AdsgStatus {
    guard(|| put(out, estimate_epsilon(family(fam)?, nu, k_max, max_len as usize)?))
}

/// Orbit count `N(x, R)` for the base point `x = (a, b; c, d)`.
///
/// `max_len = 0` with `k_max = 0` selects the certified limits. `report_json`
/// may be null; otherwise it receives the full report, freed with [`adsg_string_free`].
///
/// # Safety
/// `base` must point to four elements; other pointers must be valid or null where allowed.
#[no_mangle]
pub unsafe extern "C" fn adsg_count_orbit(
    fam: *const AdsgFamily,
    nu: u64,
    base: *const f64,
    radius: f64,
    k_max: u64,
    max_len: u32,
    prune: bool,
    count: *mut u64,
    certified: *mut bool,
    report_json: *mut *mut c_char,
) -> AdsgStatus {
    guard(|| {
        let f = family(fam)?;
        if base.is_null() {
            return Err(null());
        }
        let b = std::slice::from_raw_parts(base, 4);
        let x = Mobius::from_f64(b[0], b[1], b[2], b[3])?;
        let limits = if k_max == 0 && max_len == 0 {
            CountLimits::Auto
        } else {
            CountLimits::Box { k_max, max_len: max_len as usize }
        };
        let rep = count_orbit(f, nu, &PseudoBallQuery::new(x, radius)?, limits, prune)?;
        put(count, rep.count)?;
        put(certified, rep.truncation.certified)?;
        if !report_json.is_null() {
            let s = serde_json::to_string(&rep).map_err(|e| Fail(AdsgStatus::Internal, e.to_string()))?;
            report_json.write(CString::new(s).expect("json has no nul").into_raw());
        }
        Ok(())
    })
}

/// Number of single-generator witnesses `k ≥ nu` with `‖(α_k⁻¹, β_k⁻¹)E‖ ≤ R`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn adsg_witness_count(fam: *const AdsgFamily, nu: u64, radius: f64, out: *mut u64) -> AdsgStatus {
    guard(|| put(out, lower_bound_witness_count(family(fam)?, nu, radius)?.count))
}

/// Tuples of positive integers with sum at most `r`, `1 ≤ r ≤ 24`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn adsg_tuple_count(r: u32, out: *mut u64) -> AdsgStatus {
    guard(|| put(out, tuple_count_bruteforce(r)?))
}

/// `‖g‖` for `g = (a, b; c, d)`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn adsg_pseudo_norm(a: f64, b: f64, c: f64, d: f64, out: *mut f64) -> AdsgStatus {
    guard(|| put(out, pseudo_norm(&Mobius::from_f64(a, b, c, d)?)))
}

/// `ψ_m(x) = (x1 + i x2)^{−m}`.
///
/// # Safety
/// `re` and `im` must be valid.
#[no_mangle]
pub unsafe extern "C" fn adsg_psi(m: u32, x1: f64, x2: f64, x3: f64, x4: f64, re: *mut f64, im: *mut f64) -> AdsgStatus {
    guard(|| {
        let v = psi(&EigenFunctionSpec::new(m)?, &AdSCoords::new(x1, x2, x3, x4))?;
        put(re, v.re)?;
        put(im, v.im)
    })
}
