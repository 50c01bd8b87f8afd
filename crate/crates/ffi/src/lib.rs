//! C ABI over `proxthresh`.
//!
//! Every function returns a [`PtStatus`]; outputs go through caller-provided
//! pointers. On failure the message is kept per thread and can be read with
//! [`pt_last_error_message`]. Regularizers are opaque handles owned by the
//! caller and released with [`pt_regularizer_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use ndarray::{Array1, Array2};
use proxthresh::glm::{fit, Dataset, Design, FitOptions, PrecomputedFeatures};
use proxthresh::prox::{
    prox_power, prox_scalar_exact, prox_separable_exact, soft_threshold, validate_family, FamilyConfig, Interval,
    ScalarRegularizer, SeparableRegularizer,
};
use proxthresh::Error;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidConfig = 2,
    DimensionMismatch = 3,
    Numerical = 4,
    Panic = 5,
}

/// Opaque separable regularizer.
pub struct PtRegularizer {
    inner: SeparableRegularizer,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: PtStatus, msg: impl Into<String>) -> PtStatus {
    set_error(msg.into());
    status
}

fn status_of(err: &Error) -> PtStatus {
    match err {
        Error::DimensionMismatch { .. } => PtStatus::DimensionMismatch,
        e if e.is_config_error() => PtStatus::InvalidConfig,
        _ => PtStatus::Numerical,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), PtStatus>) -> PtStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PtStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(PtStatus::Panic, format!("internal panic: {msg}"))
        }
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, PtStatus>;
}

impl<T> OrStatus<T> for proxthresh::Result<T> {
    fn or_status(self) -> Result<T, PtStatus> {
        self.map_err(|e| fail(status_of(&e), e.to_string()))
    }
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), PtStatus> {
    if p.is_null() {
        Err(fail(PtStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn pt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Soft thresholding of `x` with respect to `gamma [d_lower, d_upper]`.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn pt_soft_threshold(d_lower: f64, d_upper: f64, gamma: f64, x: f64, out: *mut f64) -> PtStatus {
    guard(|| {
        non_null(out, "out")?;
        let d = Interval::new(d_lower, d_upper).or_status()?;
        *out = soft_threshold(&d, gamma, x).or_status()?;
        Ok(())
    })
}

/// `prox_{gamma eta |.|^r}(mu)`.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn pt_prox_power(gamma: f64, eta: f64, r: f64, mu: f64, out: *mut f64) -> PtStatus {
    guard(|| {
        non_null(out, "out")?;
        if !(gamma > 0.0 && eta > 0.0 && r > 1.0 && r <= 2.0) {
            return Err(fail(PtStatus::InvalidConfig, "need gamma > 0, eta > 0 and r in (1, 2]"));
        }
        *out = prox_power(gamma, eta, r, mu).or_status()?;
        Ok(())
    })
}

fn boxed(reg: SeparableRegularizer, out: *mut *mut PtRegularizer) -> Result<(), PtStatus> {
    validate_family(&reg).map_err(Error::InvalidFamily).or_status()?;
    unsafe { *out = Box::into_raw(Box::new(PtRegularizer { inner: reg })) };
    Ok(())
}

/// Builds a regularizer from the TOML family format.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn pt_regularizer_from_toml(toml: *const c_char, out: *mut *mut PtRegularizer) -> PtStatus {
    guard(|| {
        non_null(toml, "toml")?;
        non_null(out, "out")?;
        let text = CStr::from_ptr(toml).to_str().map_err(|_| fail(PtStatus::InvalidConfig, "toml is not UTF-8"))?;
        let reg = FamilyConfig::from_toml(text).and_then(|c| c.build()).or_status()?;
        boxed(reg, out)
    })
}

/// `dimension` copies of `omega |.| + eta |.|^r`.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn pt_regularizer_elastic_net(
    dimension: usize,
    omega: f64,
    eta: f64,
    r: f64,
    out: *mut *mut PtRegularizer,
) -> PtStatus {
    guard(|| {
        non_null(out, "out")?;
        let coord = ScalarRegularizer::elastic_net(omega, eta, r).or_status()?;
        boxed(SeparableRegularizer::uniform(coord, dimension).or_status()?, out)
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `reg` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pt_regularizer_free(reg: *mut PtRegularizer) {
    if !reg.is_null() {
        drop(Box::from_raw(reg));
    }
}

/// Number of coordinates, or 0 for a null handle.
///
/// # Safety
/// `reg` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pt_regularizer_dim(reg: *const PtRegularizer) -> usize {
    reg.as_ref().map_or(0, |r| r.inner.dim())
}

/// Exact prox of `gamma g_k` at `x`.
///
/// # Safety
/// `reg` must be a live handle; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn pt_prox_scalar(
    reg: *const PtRegularizer,
    coordinate: usize,
    gamma: f64,
    x: f64,
    out: *mut f64,
) -> PtStatus {
    guard(|| {
        non_null(reg, "reg")?;
        non_null(out, "out")?;
        let coords = (*reg).inner.coords();
        let g = coords.get(coordinate).ok_or_else(|| {
            fail(PtStatus::DimensionMismatch, format!("coordinate {coordinate} out of range 0..{}", coords.len()))
        })?;
        *out = prox_scalar_exact(g, gamma, x).or_status()?;
        Ok(())
    })
}

/// Exact componentwise prox of `gamma G` at `w`, written to `out`.
///
/// # Safety
/// `w` and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pt_prox_separable(
    reg: *const PtRegularizer,
    gamma: f64,
    w: *const f64,
    len: usize,
    out: *mut f64,
) -> PtStatus {
    guard(|| {
        non_null(reg, "reg")?;
        non_null(w, "w")?;
        non_null(out, "out")?;
        let w = Array1::from(slice::from_raw_parts(w, len).to_vec());
        let p = prox_separable_exact(&(*reg).inner, gamma, &w).or_status()?;
        slice::from_raw_parts_mut(out, len).copy_from_slice(p.as_slice().expect("contiguous"));
        Ok(())
    })
}

/// Fits `(1/n) sum_i (<u, x_i> - y_i)^2 + lambda G(u)` on row-major
/// features `x` (`n x dim`) and outputs `y`. A `tolerance` of 0 runs all
/// `max_iters` steps. `objective` may be null.
///
/// # Safety
/// `x` must hold `n * dim` doubles, `y` must hold `n`, and `coefficients`
/// must hold `dim`.
#[no_mangle]
pub unsafe extern "C" fn pt_fit_precomputed(
    reg: *const PtRegularizer,
    x: *const f64,
    y: *const f64,
    n: usize,
    dim: usize,
    lambda: f64,
    max_iters: usize,
    tolerance: f64,
    coefficients: *mut f64,
    objective: *mut f64,
) -> PtStatus {
    guard(|| {
        non_null(reg, "reg")?;
        non_null(x, "x")?;
        non_null(y, "y")?;
        non_null(coefficients, "coefficients")?;
        let len = n.checked_mul(dim).ok_or_else(|| fail(PtStatus::InvalidConfig, "n * dim overflows"))?;
        let inputs = Array2::from_shape_vec((n, dim), slice::from_raw_parts(x, len).to_vec())
            .map_err(|e| fail(PtStatus::DimensionMismatch, e.to_string()))?;
        let outputs = Array1::from(slice::from_raw_parts(y, n).to_vec());
        let data = Dataset::new(inputs, outputs, None).or_status()?;
        let design = Design::new(&PrecomputedFeatures { dimension: dim }, &data).or_status()?;
        let options = FitOptions { max_iters, tolerance, ..Default::default() };
        let res = fit(&design, lambda, &(*reg).inner, &options, None).or_status()?;
        slice::from_raw_parts_mut(coefficients, dim).copy_from_slice(res.coefficients.as_slice().expect("contiguous"));
        if !objective.is_null() {
            *objective = res.objective;
        }
        Ok(())
    })
}
