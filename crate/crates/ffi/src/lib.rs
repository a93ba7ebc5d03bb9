//! C ABI over the `covcp` detector.
//!
//! Every fallible function returns a [`CovcpStatus`]. On failure the
//! human-readable cause is available from [`covcp_last_error_message`] on
//! the calling thread until the next failing call on that thread. Handles
//! are opaque and must be released with their matching `*_free` function.
//! Panics never cross the boundary; they surface as `COVCP_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use covcp::cli::DetectJson;
use covcp::detector::{detect, DetectConfig, DetectionReport};
use covcp::nullsim::{build_kernel_grid, kernel_sigma, simulate_min_quantile};
use covcp::{DataMatrix, Error};

/// Result codes shared by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovcpStatus {
    Ok = 0,
    NullPointer = 1,
    /// Bad shape, trimming, level or replication count.
    InvalidArgument = 2,
    NonFinite = 3,
    /// A segment covariance or the kernel matrix is not positive definite.
    Singular = 4,
    /// A split lies outside the domain of the centering or scale terms.
    Inadmissible = 5,
    DegenerateData = 6,
    IndexOutOfRange = 7,
    Io = 8,
    Panic = 9,
}

/// Input observations, `n` rows of dimension `p`.
pub struct CovcpData(DataMatrix);

/// Outcome of one detection run.
pub struct CovcpReport(DetectionReport);

/// Tuning of a detection run. Obtain defaults from [`covcp_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CovcpConfig {
    pub t0: f64,
    pub alpha: f64,
    pub mc_reps: usize,
    pub seed: u64,
}

/// Scalar summary of a [`CovcpReport`].
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CovcpSummary {
    pub n: usize,
    pub p: usize,
    pub statistic: f64,
    pub quantile: f64,
    pub reject: bool,
    pub tau_hat: f64,
    pub kappa_hat: f64,
    pub quantile_std_error: f64,
    pub profile_len: usize,
}

/// One split of the standardized profile.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CovcpProfileEntry {
    pub m: usize,
    pub t: f64,
    pub two_log_lambda_cen: f64,
    pub mu_tilde: f64,
    pub sigma_nt: f64,
    pub standardized: f64,
    pub centered_over_n: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

fn status_of(err: &Error) -> CovcpStatus {
    match err.root() {
        Error::NonFinite { .. } => CovcpStatus::NonFinite,
        Error::NotPositiveDefinite { .. } | Error::SingularSplit { .. } | Error::NumericalDegeneracy { .. } => {
            CovcpStatus::Singular
        }
        Error::Inadmissible { .. } | Error::KernelDomain(_) => CovcpStatus::Inadmissible,
        Error::DegenerateData(_) => CovcpStatus::DegenerateData,
        Error::Io { .. } => CovcpStatus::Io,
        _ => CovcpStatus::InvalidArgument,
    }
}

/// Runs `body`, converting errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), (CovcpStatus, String)>) -> CovcpStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => CovcpStatus::Ok,
        Ok(Err((status, message))) => {
            set_last_error(&message);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            CovcpStatus::Panic
        }
    }
}

fn fail(err: Error) -> (CovcpStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(name: &str) -> (CovcpStatus, String) {
    (CovcpStatus::NullPointer, format!("{name} is null"))
}

impl From<&CovcpConfig> for DetectConfig {
    fn from(c: &CovcpConfig) -> Self {
        DetectConfig {
            t0: c.t0,
            alpha: c.alpha,
            mc_reps: c.mc_reps,
            seed: c.seed,
        }
    }
}

/// Default configuration: `t0 = 0.2`, `alpha = 0.05`, 100000 paths, seed 0.
#[no_mangle]
pub extern "C" fn covcp_config_default() -> CovcpConfig {
    let d = DetectConfig::default();
    CovcpConfig {
        t0: d.t0,
        alpha: d.alpha,
        mc_reps: d.mc_reps,
        seed: d.seed,
    }
}

/// Message describing the most recent failure on this thread, or an empty
/// string. The pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn covcp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Copies `n * p` row-major values into a new data handle.
///
/// # Safety
/// `values` must point to `n * p` readable doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn covcp_data_new(
    values: *const f64,
    n: usize,
    p: usize,
    out: *mut *mut CovcpData,
) -> CovcpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if values.is_null() {
            return Err(null("values"));
        }
        let len = n.checked_mul(p).ok_or_else(|| {
            (CovcpStatus::InvalidArgument, format!("n*p overflows for n={n}, p={p}"))
        })?;
        let copy = std::slice::from_raw_parts(values, len).to_vec();
        let data = DataMatrix::new(n, p, copy).map_err(fail)?;
        *out = Box::into_raw(Box::new(CovcpData(data)));
        Ok(())
    })
}

/// Releases a data handle. Null is ignored.
///
/// # Safety
/// `data` must come from [`covcp_data_new`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn covcp_data_free(data: *mut CovcpData) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// Runs the full test. A null `config` means the defaults.
///
/// # Safety
/// `data` must be a live handle, `config` null or readable, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn covcp_detect(
    data: *const CovcpData,
    config: *const CovcpConfig,
    out: *mut *mut CovcpReport,
) -> CovcpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let data = data.as_ref().ok_or_else(|| null("data"))?;
        let config = config
            .as_ref()
            .map(DetectConfig::from)
            .unwrap_or_default();
        let report = detect(&data.0, &config).map_err(fail)?;
        *out = Box::into_raw(Box::new(CovcpReport(report)));
        Ok(())
    })
}

/// # Safety
/// `report` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn covcp_report_summary(report: *const CovcpReport, out: *mut CovcpSummary) -> CovcpStatus {
    guard(|| {
        let r = &report.as_ref().ok_or_else(|| null("report"))?.0;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = CovcpSummary {
            n: r.n,
            p: r.p,
            statistic: r.statistic,
            quantile: r.quantile,
            reject: r.reject,
            tau_hat: r.tau_hat,
            kappa_hat: r.kappa.kappa_hat,
            quantile_std_error: r.mc.std_error,
            profile_len: r.profile.entries.len(),
        };
        Ok(())
    })
}

/// Copies profile entry `index` (0-based, ascending split) into `out`.
///
/// # Safety
/// `report` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn covcp_report_profile_entry(
    report: *const CovcpReport,
    index: usize,
    out: *mut CovcpProfileEntry,
) -> CovcpStatus {
    guard(|| {
        let r = &report.as_ref().ok_or_else(|| null("report"))?.0;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let e = r.profile.entries.get(index).ok_or_else(|| {
            (
                CovcpStatus::IndexOutOfRange,
                format!("profile index {index} out of range 0..{}", r.profile.entries.len()),
            )
        })?;
        *out = CovcpProfileEntry {
            m: e.m,
            t: e.t,
            two_log_lambda_cen: e.two_log_lambda_cen,
            mu_tilde: e.mu_tilde,
            sigma_nt: e.sigma_nt,
            standardized: e.standardized,
            centered_over_n: e.centered_over_n,
        };
        Ok(())
    })
}

/// Serializes the report in the same JSON layout as `covcp detect`.
/// Returns null on failure; free the string with [`covcp_string_free`].
///
/// # Safety
/// `report` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn covcp_report_to_json(report: *const CovcpReport) -> *mut c_char {
    let mut result = ptr::null_mut();
    guard(|| {
        let r = &report.as_ref().ok_or_else(|| null("report"))?.0;
        let text = serde_json::to_string(&DetectJson::from(r))
            .map_err(|e| (CovcpStatus::InvalidArgument, e.to_string()))?;
        result = CString::new(text)
            .map_err(|e| (CovcpStatus::InvalidArgument, e.to_string()))?
            .into_raw();
        Ok(())
    });
    result
}

/// # Safety
/// `s` must come from this library and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn covcp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `report` must come from [`covcp_detect`] and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn covcp_report_free(report: *mut CovcpReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Simulated null critical value for shape `(n, p)`. A null `config`
/// means the defaults. `std_error` may be null.
///
/// # Safety
/// `config` null or readable; `q_alpha` writable; `std_error` null or writable.
#[no_mangle]
pub unsafe extern "C" fn covcp_quantile(
    n: usize,
    p: usize,
    config: *const CovcpConfig,
    q_alpha: *mut f64,
    std_error: *mut f64,
) -> CovcpStatus {
    guard(|| {
        let q_out = q_alpha.as_mut().ok_or_else(|| null("q_alpha"))?;
        let c = config
            .as_ref()
            .map(DetectConfig::from)
            .unwrap_or_default();
        let kg = build_kernel_grid(n, p, c.t0).map_err(fail)?;
        let q = simulate_min_quantile(&kg, c.alpha, c.mc_reps, c.seed).map_err(fail)?;
        *q_out = q.q_alpha;
        if let Some(se) = std_error.as_mut() {
            *se = q.std_error;
        }
        Ok(())
    })
}

/// Covariance kernel of the limiting process at `(t1, t2)` for ratio `y`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn covcp_kernel_sigma(t1: f64, t2: f64, y: f64, out: *mut f64) -> CovcpStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = kernel_sigma(t1, t2, y).map_err(fail)?;
        Ok(())
    })
}
