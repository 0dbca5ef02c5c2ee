//! C ABI over the circ-manova library.
//!
//! Every entry point returns a `CmStatus`; results come back through out
//! pointers. On failure the message is kept per thread and can be read with
//! `cm_last_error_message` until the next failing call on that thread.
//! Objects are opaque handles released with their matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use circ_manova::cli::{parse_simulation_config, run_simulation};
use circ_manova::competitors::CompetitorName;
use circ_manova::error::Error;
use circ_manova::harness::{emit_table, TableFormat};
use circ_manova::nulldist::{beta_product_model, NullCdf, NullMethod};
use circ_manova::statistic::{lrt_statistic, GroupedSample};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmStatus {
    Ok = 0,
    NullPointer = 1,
    /// Bad data: dimensions, sample sizes, non-finite values.
    InvalidInput = 2,
    InvalidParameters = 3,
    /// Design or parity the requested routine does not handle.
    Unsupported = 4,
    /// Singular scatter or degenerate estimates.
    Degenerate = 5,
    Config = 6,
    /// Loss of precision or an internal numerical failure.
    Numeric = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmMethod {
    /// Closed form for odd q, inversion otherwise.
    Exact = 0,
    Egig = 1,
    CfInversion = 2,
    Asymptotic = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmCompetitor {
    Fujikoshi = 0,
    Schott = 1,
    ChenQin = 2,
    Zhang = 3,
}

/// Grouped p-variate observations.
pub struct CmSample {
    inner: GroupedSample,
}

/// Null law of Λ for fixed (n, q, p).
pub struct CmNullLaw {
    inner: NullCdf,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CmStatus {
    match e {
        Error::InvalidDimension(_)
        | Error::InsufficientSample(_)
        | Error::InvalidInput(_)
        | Error::EmptyRequest(_) => CmStatus::InvalidInput,
        Error::Domain(_) | Error::InvalidParameters(_) | Error::DegenerateWeights(_) => {
            CmStatus::InvalidParameters
        }
        Error::UnsupportedParity(_) | Error::UnsupportedDesign(_) => CmStatus::Unsupported,
        Error::DegenerateScatter(_) | Error::EstimationDegenerate(_) => CmStatus::Degenerate,
        Error::Config(_) | Error::Pairing(_) | Error::EmptyTable => CmStatus::Config,
        Error::Representation(_) | Error::Precision(_) | Error::Internal(_) => CmStatus::Numeric,
    }
}

/// Runs `f`, converting errors and panics into a status code.
fn guard<F: FnOnce() -> Result<(), Error>>(f: F) -> CmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CmStatus::Ok,
        Ok(Err(e)) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            CmStatus::Panic
        }
    }
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            set_error(format!("{} is null", stringify!($p)));
            return CmStatus::NullPointer;
        })+
    };
}

/// Message of the last failing call on this thread, or NULL.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a sample from `n_groups` groups; group k has `sizes[k]` rows of
/// `p` values, stored row-major and concatenated in `data`.
///
/// # Safety
/// `sizes` must point to `n_groups` values, `data` to Σ sizes[k]·p values,
/// and `out` to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn cm_sample_new(
    p: usize,
    n_groups: usize,
    sizes: *const usize,
    data: *const f64,
    out: *mut *mut CmSample,
) -> CmStatus {
    non_null!(sizes, data, out);
    guard(|| {
        let sizes = std::slice::from_raw_parts(sizes, n_groups);
        let total: usize = sizes.iter().sum();
        let values = std::slice::from_raw_parts(data, total * p);
        let mut offset = 0;
        let rows: Vec<Vec<f64>> = sizes
            .iter()
            .map(|&n| {
                let g = values[offset..offset + n * p].to_vec();
                offset += n * p;
                g
            })
            .collect();
        let inner = GroupedSample::from_rows(p, &rows)?;
        *out = Box::into_raw(Box::new(CmSample { inner }));
        Ok(())
    })
}

/// # Safety
/// `sample` must come from `cm_sample_new` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn cm_sample_free(sample: *mut CmSample) {
    if !sample.is_null() {
        drop(Box::from_raw(sample));
    }
}

/// Λ and W = −log Λ.
///
/// # Safety
/// `sample` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn cm_lrt(
    sample: *const CmSample,
    out_lambda: *mut f64,
    out_w: *mut f64,
) -> CmStatus {
    non_null!(sample, out_lambda, out_w);
    guard(|| {
        let r = lrt_statistic(&(*sample).inner)?;
        *out_lambda = r.lambda;
        *out_w = r.w;
        Ok(())
    })
}

/// LRT statistic and p-value under the given null representation.
///
/// # Safety
/// As for `cm_lrt`.
#[no_mangle]
pub unsafe extern "C" fn cm_lrt_test(
    sample: *const CmSample,
    method: CmMethod,
    out_lambda: *mut f64,
    out_p_value: *mut f64,
) -> CmStatus {
    non_null!(sample, out_lambda, out_p_value);
    guard(|| {
        let s = &(*sample).inner;
        let r = lrt_statistic(s)?;
        let law = NullCdf::resolve(&beta_product_model(s.n(), s.q(), s.p())?, method_of(method))?;
        *out_lambda = r.lambda;
        *out_p_value = law.sf_w(r.w)?;
        Ok(())
    })
}

fn method_of(m: CmMethod) -> NullMethod {
    match m {
        CmMethod::Exact => NullMethod::Exact,
        CmMethod::Egig => NullMethod::ExactEgig,
        CmMethod::CfInversion => NullMethod::CfInversion,
        CmMethod::Asymptotic => NullMethod::Asymptotic,
    }
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cm_null_law_new(
    n: usize,
    q: usize,
    p: usize,
    method: CmMethod,
    out: *mut *mut CmNullLaw,
) -> CmStatus {
    non_null!(out);
    guard(|| {
        let inner = NullCdf::resolve(&beta_product_model(n, q, p)?, method_of(method))?;
        *out = Box::into_raw(Box::new(CmNullLaw { inner }));
        Ok(())
    })
}

/// # Safety
/// `law` must come from `cm_null_law_new` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn cm_null_law_free(law: *mut CmNullLaw) {
    if !law.is_null() {
        drop(Box::from_raw(law));
    }
}

/// P(Λ ≤ z).
///
/// # Safety
/// `law` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cm_null_law_cdf(law: *const CmNullLaw, z: f64, out: *mut f64) -> CmStatus {
    non_null!(law, out);
    guard(|| {
        *out = (*law).inner.cdf_lambda(z)?;
        Ok(())
    })
}

/// Λ_α with P(Λ ≤ Λ_α) = α.
///
/// # Safety
/// `law` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cm_null_law_quantile(
    law: *const CmNullLaw,
    alpha: f64,
    out: *mut f64,
) -> CmStatus {
    non_null!(law, out);
    guard(|| {
        *out = circ_manova::nulldist::quantile_lambda_with(&(*law).inner, alpha)?;
        Ok(())
    })
}

/// Competitor statistic and its asymptotic p-value.
///
/// # Safety
/// `sample` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn cm_competitor(
    sample: *const CmSample,
    test: CmCompetitor,
    out_statistic: *mut f64,
    out_p_value: *mut f64,
) -> CmStatus {
    non_null!(sample, out_statistic, out_p_value);
    guard(|| {
        let name = match test {
            CmCompetitor::Fujikoshi => CompetitorName::Fujikoshi,
            CmCompetitor::Schott => CompetitorName::Schott,
            CmCompetitor::ChenQin => CompetitorName::ChenQin,
            CmCompetitor::Zhang => CompetitorName::Zhang,
        };
        let r = name.compute(&(*sample).inner)?;
        *out_statistic = r.statistic;
        *out_p_value = r.p_value;
        Ok(())
    })
}

/// Runs a key=value simulation config and returns the table (CSV unless the
/// config asks otherwise) as a string released with `cm_string_free`.
///
/// # Safety
/// `config` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cm_simulate(
    config: *const c_char,
    seed: u64,
    out: *mut *mut c_char,
) -> CmStatus {
    non_null!(config, out);
    guard(|| {
        let text = CStr::from_ptr(config)
            .to_str()
            .map_err(|_| Error::Config("config is not valid UTF-8".into()))?;
        let sim = parse_simulation_config(text)?;
        let rows = run_simulation(&sim, seed, false)?;
        let format = if sim.format == TableFormat::Text { TableFormat::Text } else { TableFormat::Csv };
        let table = emit_table(&rows, format)?;
        *out = CString::new(table)
            .map_err(|_| Error::Internal("table contains a NUL byte".into()))?
            .into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn cm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
