//! C ABI for `snmono`: opaque space and set handles, integer status codes and
//! a per-thread last-error message.
//!
//! Every function returns [`SnmonoStatus`]; results travel through out
//! pointers. `+inf` is reported as `INFINITY`. Handles are released with the
//! matching `_free` function and strings with [`snmono_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use nalgebra::DVector;
use snmono::error::Error;
use snmono::fitzpatrick::phi;
use snmono::norm::BaseNorm;
use snmono::optim::Budget;
use snmono::sets::{certify_quasidense, density_gap, LPositiveSet};
use snmono::space::SnSpace;

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SnmonoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    DimensionMismatch = 4,
    Numeric = 5,
    Panic = 6,
}

/// Block norm selector for [`snmono_space_product`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SnmonoNorm {
    Euclidean = 0,
    Ell1 = 1,
    EllInf = 2,
}

/// Opaque SN space.
pub struct SnmonoSpace {
    inner: Arc<SnSpace>,
}

/// Opaque subset of an SN space.
pub struct SnmonoSet {
    inner: LPositiveSet,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = CString::new(msg.into().replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(s));
}

fn status_of(e: &Error) -> SnmonoStatus {
    match e {
        Error::Json(_) => SnmonoStatus::Parse,
        Error::DimensionMismatch { .. } => SnmonoStatus::DimensionMismatch,
        Error::InvalidArgument(_) | Error::InvalidNorm(_) | Error::NotProductSpace | Error::EmptyGrid | Error::Io(_) => {
            SnmonoStatus::InvalidArgument
        }
        _ => SnmonoStatus::Numeric,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (SnmonoStatus, String)>) -> SnmonoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SnmonoStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            SnmonoStatus::Panic
        }
    }
}

fn lift<T>(r: snmono::error::Result<T>) -> Result<T, (SnmonoStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null() -> (SnmonoStatus, String) {
    (SnmonoStatus::NullPointer, "null pointer argument".into())
}

unsafe fn str_arg<'a>(s: *const c_char) -> Result<&'a str, (SnmonoStatus, String)> {
    if s.is_null() {
        return Err(null());
    }
    CStr::from_ptr(s).to_str().map_err(|_| (SnmonoStatus::InvalidArgument, "string is not UTF-8".into()))
}

unsafe fn vec_arg(p: *const f64, len: usize) -> Result<DVector<f64>, (SnmonoStatus, String)> {
    if p.is_null() && len > 0 {
        return Err(null());
    }
    if len == 0 {
        return Ok(DVector::zeros(0));
    }
    Ok(DVector::from_column_slice(std::slice::from_raw_parts(p, len)))
}

unsafe fn write<T>(out: *mut T, v: T) -> Result<(), (SnmonoStatus, String)> {
    if out.is_null() {
        return Err(null());
    }
    *out = v;
    Ok(())
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn snmono_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn snmono_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a space from JSON `{"dim", "norm", "L"}`.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn snmono_space_from_json(json: *const c_char, out: *mut *mut SnmonoSpace) -> SnmonoStatus {
    guard(|| {
        let s = str_arg(json)?;
        let space: SnSpace = lift(serde_json::from_str(s).map_err(Error::from))?;
        write(out, Box::into_raw(Box::new(SnmonoSpace { inner: Arc::new(space) })))
    })
}

/// `E × E*` over `R^n` with the given block norm.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn snmono_space_product(n: usize, norm: SnmonoNorm, out: *mut *mut SnmonoSpace) -> SnmonoStatus {
    guard(|| {
        if n == 0 {
            return Err((SnmonoStatus::InvalidArgument, "n must be positive".into()));
        }
        let base = match norm {
            SnmonoNorm::Euclidean => BaseNorm::Euclidean,
            SnmonoNorm::Ell1 => BaseNorm::Ell1,
            SnmonoNorm::EllInf => BaseNorm::EllInf,
        };
        write(out, Box::into_raw(Box::new(SnmonoSpace { inner: Arc::new(SnSpace::product(n, base)) })))
    })
}

/// # Safety
/// `space` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn snmono_space_free(space: *mut SnmonoSpace) {
    if !space.is_null() {
        drop(Box::from_raw(space));
    }
}

/// # Safety
/// `space` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn snmono_space_dim(space: *const SnmonoSpace, out: *mut usize) -> SnmonoStatus {
    guard(|| {
        let s = space.as_ref().ok_or_else(null)?;
        write(out, s.inner.dim())
    })
}

/// Writes 1 to `ok` when `L` is symmetric and nonexpansive, else 0.
///
/// # Safety
/// `space` and `ok` must be valid.
#[no_mangle]
pub unsafe extern "C" fn snmono_space_validate(space: *const SnmonoSpace, ok: *mut i32) -> SnmonoStatus {
    guard(|| {
        let s = space.as_ref().ok_or_else(null)?;
        write(ok, i32::from(s.inner.validate_sn().ok))
    })
}

/// `q_L(b)`.
///
/// # Safety
/// `b` must point to `len` doubles; `space` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn snmono_space_q(space: *const SnmonoSpace, b: *const f64, len: usize, out: *mut f64) -> SnmonoStatus {
    guard(|| {
        let s = space.as_ref().ok_or_else(null)?;
        let v = vec_arg(b, len)?;
        write(out, lift(s.inner.try_q_l(&v))?)
    })
}

/// `r_L(b)`.
///
/// # Safety
/// `b` must point to `len` doubles; `space` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn snmono_space_r(space: *const SnmonoSpace, b: *const f64, len: usize, out: *mut f64) -> SnmonoStatus {
    guard(|| {
        let s = space.as_ref().ok_or_else(null)?;
        let v = vec_arg(b, len)?;
        write(out, lift(s.inner.try_r_l(&v))?)
    })
}

/// Parses a set from JSON; `space` is used when the JSON has no `space` key
/// and may be null otherwise.
///
/// # Safety
/// `json` must be nul-terminated; `space` valid or null; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn snmono_set_from_json(json: *const c_char, space: *const SnmonoSpace, out: *mut *mut SnmonoSet) -> SnmonoStatus {
    guard(|| {
        let s = str_arg(json)?;
        let value: serde_json::Value = lift(serde_json::from_str(s).map_err(Error::from))?;
        let fallback = space.as_ref().map(|sp| sp.inner.clone());
        let set = lift(LPositiveSet::from_json(value, fallback))?;
        write(out, Box::into_raw(Box::new(SnmonoSet { inner: set })))
    })
}

/// Graph of the identity on `R^n`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn snmono_set_identity_graph(n: usize, out: *mut *mut SnmonoSet) -> SnmonoStatus {
    guard(|| {
        if n == 0 {
            return Err((SnmonoStatus::InvalidArgument, "n must be positive".into()));
        }
        write(out, Box::into_raw(Box::new(SnmonoSet { inner: LPositiveSet::identity_graph(n) })))
    })
}

/// # Safety
/// `set` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn snmono_set_free(set: *mut SnmonoSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Dimension of the ambient space.
///
/// # Safety
/// `set` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn snmono_set_dim(set: *const SnmonoSet, out: *mut usize) -> SnmonoStatus {
    guard(|| {
        let s = set.as_ref().ok_or_else(null)?;
        write(out, s.inner.space().dim())
    })
}

/// `inf_{a∈A} r_L(a - c)` (best value found); the minimizer is written to
/// `minimizer` (length `len`) when it is not null.
///
/// # Safety
/// `c` must point to `len` doubles, `minimizer` to `len` writable doubles or be null.
#[no_mangle]
pub unsafe extern "C" fn snmono_set_density_gap(
    set: *const SnmonoSet,
    c: *const f64,
    len: usize,
    seed: u64,
    gap: *mut f64,
    minimizer: *mut f64,
) -> SnmonoStatus {
    guard(|| {
        let s = set.as_ref().ok_or_else(null)?;
        let v = vec_arg(c, len)?;
        let r = lift(density_gap(&s.inner, &v, &Budget::default().with_seed(seed)))?;
        if !minimizer.is_null() {
            std::slice::from_raw_parts_mut(minimizer, len).copy_from_slice(r.minimizer.as_slice());
        }
        write(gap, r.gap)
    })
}

/// Density gaps at `count` probes stored row by row (`count × dim`). Writes
/// 1 to `quasidense` when every gap is at most `tol`, and the largest gap.
///
/// # Safety
/// `probes` must point to `count * dim` doubles; out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn snmono_set_certify(
    set: *const SnmonoSet,
    probes: *const f64,
    count: usize,
    dim: usize,
    tol: f64,
    seed: u64,
    quasidense: *mut i32,
    max_gap: *mut f64,
) -> SnmonoStatus {
    guard(|| {
        let s = set.as_ref().ok_or_else(null)?;
        if !(tol > 0.0) {
            return Err((SnmonoStatus::InvalidArgument, "tol must be positive".into()));
        }
        let flat = vec_arg(probes, count * dim)?;
        let pts: Vec<DVector<f64>> = (0..count).map(|i| flat.rows(i * dim, dim).into_owned()).collect();
        let budget = Budget::default().with_seed(seed).with_tol(tol);
        let cert = lift(certify_quasidense(&s.inner, &pts, &budget))?;
        write(quasidense, i32::from(cert.is_quasidense()))?;
        write(max_gap, cert.max_gap())
    })
}

/// `Φ_A(b)`.
///
/// # Safety
/// `b` must point to `len` doubles; `set` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn snmono_set_phi(set: *const SnmonoSet, b: *const f64, len: usize, out: *mut f64) -> SnmonoStatus {
    guard(|| {
        let s = set.as_ref().ok_or_else(null)?;
        let v = vec_arg(b, len)?;
        write(out, lift(phi(&s.inner, &v, &Budget::default()))?.as_f64())
    })
}

/// Runs the command line with `argc` arguments (the first is the program
/// name) and writes its exit code. Output goes to stdout or `--out`.
///
/// # Safety
/// `argv` must point to `argc` nul-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn snmono_cli_run(argc: usize, argv: *const *const c_char, code: *mut i32) -> SnmonoStatus {
    guard(|| {
        if argv.is_null() && argc > 0 {
            return Err(null());
        }
        let args = (0..argc)
            .map(|i| str_arg(*argv.add(i)).map(str::to_owned))
            .collect::<Result<Vec<_>, _>>()?;
        write(code, snmono::cli::run(args))
    })
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn snmono_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Serializes a set to JSON; release with [`snmono_string_free`].
///
/// # Safety
/// `set` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn snmono_set_to_json(set: *const SnmonoSet, out: *mut *mut c_char) -> SnmonoStatus {
    guard(|| {
        let s = set.as_ref().ok_or_else(null)?;
        let text = lift(serde_json::to_string(&s.inner).map_err(Error::from))?;
        write(out, CString::new(text).expect("json has no nul").into_raw())
    })
}
