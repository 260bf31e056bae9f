//! C ABI over the `ctxnet` library.
//!
//! Datasets and analyses are opaque heap handles owned by the caller and
//! released with their `*_free` function. Every fallible call returns a
//! [`CtxnetStatus`]; on failure a message is available from
//! [`ctxnet_last_error_message`] on the same thread.
//!
//! The header `include/ctxnet.h` is generated by the build script.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use ctxnet::commands::{analyze_dataset, AnalyzeOptions, ParticipantAnalysis};
use ctxnet::ingest::parse_participant_reader;
use ctxnet::permtest::{DEFAULT_PERMUTATIONS, DEFAULT_SAMPLE_SIZE};
use ctxnet::{backfill_emas, eligibility, parse_participant, Context, Error, ItemSubset, ParticipantDataset};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CtxnetStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    FileNotFound = 3,
    SchemaViolation = 4,
    InsufficientPool = 5,
    InsufficientData = 6,
    Io = 7,
    Panic = 8,
    Other = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CtxnetSubset {
    All = 0,
    Positive = 1,
    Negative = 2,
}

impl From<CtxnetSubset> for ItemSubset {
    fn from(s: CtxnetSubset) -> Self {
        match s {
            CtxnetSubset::All => ItemSubset::All,
            CtxnetSubset::Positive => ItemSubset::Positive,
            CtxnetSubset::Negative => ItemSubset::Negative,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CtxnetOptions {
    pub subset: CtxnetSubset,
    pub seed: u64,
    pub permutations: usize,
    pub sample_size: usize,
}

/// Baseline and context statistics of one analysis.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CtxnetSummary {
    pub baseline_mean: f64,
    pub baseline_std: f64,
    pub context_mean: f64,
    pub context_std: f64,
    pub t: f64,
    pub df: u64,
    /// Two-sided; exactly 0 when it underflows.
    pub p_value: f64,
    pub n: usize,
}

/// Which distribution [`ctxnet_analysis_differences`] copies out.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CtxnetDistribution {
    Context = 0,
    Baseline = 1,
}

/// A parsed and backfilled participant.
pub struct CtxnetDataset {
    inner: ParticipantDataset,
}

/// Result of [`ctxnet_analyze`].
pub struct CtxnetAnalysis {
    inner: ParticipantAnalysis,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> CtxnetStatus {
    match err {
        Error::FileNotFound(_) => CtxnetStatus::FileNotFound,
        Error::SchemaViolation { .. } | Error::Csv(_) => CtxnetStatus::SchemaViolation,
        Error::InsufficientPool { .. } => CtxnetStatus::InsufficientPool,
        Error::InsufficientData { .. } => CtxnetStatus::InsufficientData,
        Error::InvalidConfig(_) | Error::LengthMismatch { .. } => CtxnetStatus::InvalidArgument,
        Error::Io(_) => CtxnetStatus::Io,
        _ => CtxnetStatus::Other,
    }
}

enum Failure {
    Null(&'static str),
    Invalid(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

/// Runs `f`, mapping errors and panics to a status and recording the message.
fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> CtxnetStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CtxnetStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_last_error(format!("null pointer: {what}"));
            CtxnetStatus::NullPointer
        }
        Ok(Err(Failure::Invalid(msg))) => {
            set_last_error(msg);
            CtxnetStatus::InvalidArgument
        }
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_last_error("internal panic".into());
            CtxnetStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure::Invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ctxnet_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ctxnet_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn ctxnet_options_default() -> CtxnetOptions {
    CtxnetOptions {
        subset: CtxnetSubset::All,
        seed: 0,
        permutations: DEFAULT_PERMUTATIONS,
        sample_size: DEFAULT_SAMPLE_SIZE,
    }
}

/// Loads a participant CSV and backfills it.
#[no_mangle]
pub unsafe extern "C" fn ctxnet_dataset_load(path: *const c_char, out: *mut *mut CtxnetDataset) -> CtxnetStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let path = str_arg(path, "path")?;
        let inner = backfill_emas(&parse_participant(Path::new(path))?);
        *out = Box::into_raw(Box::new(CtxnetDataset { inner }));
        Ok(())
    })
}

/// Parses CSV text held in memory and backfills it.
#[no_mangle]
pub unsafe extern "C" fn ctxnet_dataset_from_csv(
    participant_id: *const c_char,
    csv: *const c_char,
    out: *mut *mut CtxnetDataset,
) -> CtxnetStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let id = str_arg(participant_id, "participant_id")?;
        let csv = str_arg(csv, "csv")?;
        let inner = backfill_emas(&parse_participant_reader(id, csv.as_bytes())?);
        *out = Box::into_raw(Box::new(CtxnetDataset { inner }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ctxnet_dataset_free(ds: *mut CtxnetDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Days carrying a reported or backfilled EMA.
#[no_mangle]
pub unsafe extern "C" fn ctxnet_dataset_usable_days(ds: *const CtxnetDataset, out: *mut usize) -> CtxnetStatus {
    guard(|| {
        *out_arg(out, "out")? = ref_arg(ds, "dataset")?.inner.usable_days();
        Ok(())
    })
}

/// Whether `context` (a flag such as `locations` or `baseline`) has enough
/// days in every pool for samples of `min_days`.
#[no_mangle]
pub unsafe extern "C" fn ctxnet_dataset_eligible(
    ds: *const CtxnetDataset,
    context: *const c_char,
    min_days: usize,
    out: *mut bool,
) -> CtxnetStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let ds = ref_arg(ds, "dataset")?;
        let ctx: Context = str_arg(context, "context")?.parse()?;
        *out = eligibility(&ds.inner, ctx, min_days).eligible();
        Ok(())
    })
}

/// Permutation test of one sensor context against the baseline.
/// `options` may be NULL for defaults.
#[no_mangle]
pub unsafe extern "C" fn ctxnet_analyze(
    ds: *const CtxnetDataset,
    context: *const c_char,
    options: *const CtxnetOptions,
    out: *mut *mut CtxnetAnalysis,
) -> CtxnetStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let ds = ref_arg(ds, "dataset")?;
        let feature = match str_arg(context, "context")?.parse::<Context>()? {
            Context::Feature(f) => f,
            Context::Baseline => return Err(Failure::Invalid("context must be a sensor feature".into())),
        };
        let o = options.as_ref().copied().unwrap_or_else(|| ctxnet_options_default());
        let opts = AnalyzeOptions {
            subset: o.subset.into(),
            seed: o.seed,
            permutations: o.permutations,
            sample_size: o.sample_size,
            ..AnalyzeOptions::default()
        };
        let inner = analyze_dataset(&ds.inner, &[feature], &opts)?;
        *out = Box::into_raw(Box::new(CtxnetAnalysis { inner }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ctxnet_analysis_free(a: *mut CtxnetAnalysis) {
    if !a.is_null() {
        drop(Box::from_raw(a));
    }
}

#[no_mangle]
pub unsafe extern "C" fn ctxnet_analysis_summary(a: *const CtxnetAnalysis, out: *mut CtxnetSummary) -> CtxnetStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let c = &ref_arg(a, "analysis")?.inner.contexts[0].comparison;
        *out = CtxnetSummary {
            baseline_mean: c.baseline.mean,
            baseline_std: c.baseline.std,
            context_mean: c.context_stats.mean,
            context_std: c.context_stats.std,
            t: c.test.t,
            df: c.test.df as u64,
            p_value: c.test.p_value,
            n: c.test.n,
        };
        Ok(())
    })
}

/// Copies up to `capacity` differences into `buf` and stores the total count
/// in `len`. Pass `buf = NULL` to query the count.
#[no_mangle]
pub unsafe extern "C" fn ctxnet_analysis_differences(
    a: *const CtxnetAnalysis,
    which: CtxnetDistribution,
    buf: *mut f64,
    capacity: usize,
    len: *mut usize,
) -> CtxnetStatus {
    guard(|| {
        let len = out_arg(len, "len")?;
        let a = &ref_arg(a, "analysis")?.inner;
        let src = match which {
            CtxnetDistribution::Context => &a.contexts[0].run.differences,
            CtxnetDistribution::Baseline => &a.baseline.differences,
        };
        *len = src.len();
        if !buf.is_null() {
            let n = capacity.min(src.len());
            ptr::copy_nonoverlapping(src.as_ptr(), buf, n);
        }
        Ok(())
    })
}

/// The comparison as JSON. Release the string with [`ctxnet_string_free`].
#[no_mangle]
pub unsafe extern "C" fn ctxnet_analysis_to_json(a: *const CtxnetAnalysis, out: *mut *mut c_char) -> CtxnetStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let a = &ref_arg(a, "analysis")?.inner;
        let value = serde_json::json!({
            "participant_id": a.participant_id,
            "comparison": a.contexts[0].comparison,
        });
        let text = serde_json::to_string(&value).map_err(Error::from)?;
        *out = CString::new(text).expect("JSON has no NUL").into_raw();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ctxnet_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Pearson correlation of two arrays of length `len`.
#[no_mangle]
pub unsafe extern "C" fn ctxnet_pearson_r(x: *const f64, y: *const f64, len: usize, out: *mut f64) -> CtxnetStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        if x.is_null() || y.is_null() {
            return Err(Failure::Null("x or y"));
        }
        let (x, y) = (std::slice::from_raw_parts(x, len), std::slice::from_raw_parts(y, len));
        *out = ctxnet::stats::pearson_r(x, y)?;
        Ok(())
    })
}

/// Two-sided Student-t tail probability.
#[no_mangle]
pub unsafe extern "C" fn ctxnet_t_sf(t: f64, df: u64, out: *mut f64) -> CtxnetStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        if df == 0 || t.is_nan() {
            return Err(Failure::Invalid("t_sf needs df >= 1 and a non-NaN t".into()));
        }
        *out = ctxnet::stats::t_sf(t, df).value();
        Ok(())
    })
}
