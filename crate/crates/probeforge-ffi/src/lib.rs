//! C ABI over the probeforge library.
//!
//! Every function returns a [`PfStatus`]. On failure the message is kept in a
//! thread-local slot readable through [`pf_last_error`]. Matrices are dense,
//! row-major, one sample per row. Panics never cross the boundary; they are
//! reported as [`PfStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use nalgebra::DMatrix;
use probeforge::probe::{self, SolvePath};
use probeforge::runner::{self, DataCatalog, GridSpec, RunOptions};
use probeforge::sampling::{self, SampleRequest, SamplerKind, SamplingData};
use probeforge::{metrics, Error, Probe};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NonFinite = 4,
    Degenerate = 5,
    Io = 6,
    Config = 7,
    Data = 8,
    Panic = 9,
}

/// Opaque fitted linear probe.
pub struct PfProbe(Probe);

/// Counts reported by [`pf_run_grid`].
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PfRunSummary {
    pub total: usize,
    pub executed: usize,
    pub skipped: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(PfStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Read { .. } | Error::Write { .. } => PfStatus::Io,
            Error::DimensionMismatch { .. } => PfStatus::DimensionMismatch,
            Error::NonFinite(_) => PfStatus::NonFinite,
            Error::DegenerateVariance | Error::InsufficientRuns { .. } => PfStatus::Degenerate,
            Error::Config(_) | Error::EmptyAxis(_) => PfStatus::Config,
            Error::InvalidInput(_) => PfStatus::InvalidArgument,
            _ => PfStatus::Data,
        };
        Fail(status, e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(PfStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(PfStatus::InvalidArgument, msg.into())
}

/// Runs `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PfStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            PfStatus::Panic
        }
    }
}

/// # Safety
/// `ptr` must be null or valid for `len` reads.
unsafe fn slice<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(unsafe { std::slice::from_raw_parts(ptr, len) })
}

/// # Safety
/// `ptr` must be null or valid for `len` writes.
unsafe fn slice_mut<'a, T>(ptr: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(unsafe { std::slice::from_raw_parts_mut(ptr, len) })
}

/// # Safety
/// `ptr` must be null or a NUL-terminated string.
unsafe fn string<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if ptr.is_null() {
        return Err(null(what));
    }
    unsafe { CStr::from_ptr(ptr) }
        .to_str()
        .map_err(|_| invalid(format!("{what} is not UTF-8")))
}

fn matrix_len(n: usize, d: usize) -> Result<usize, Fail> {
    n.checked_mul(d).ok_or_else(|| invalid("matrix size overflows"))
}

/// Message of the last failed call on this thread, or null if none failed.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Fits a minimum-norm least-squares probe with intercept to the `n x d`
/// row-major matrix `x` and targets `y`. On success `*out` owns a probe that
/// must be released with [`pf_probe_free`].
///
/// # Safety
/// `x` must hold `n * d` values, `y` must hold `n`, `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_probe_fit(
    x: *const f64,
    n: usize,
    d: usize,
    y: *const f64,
    out: *mut *mut PfProbe,
) -> PfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let xs = unsafe { slice(x, matrix_len(n, d)?, "x") }?;
        let ys = unsafe { slice(y, n, "y") }?;
        let m = DMatrix::from_row_slice(n, d, xs);
        let p = probe::fit(&m, ys)?;
        unsafe { *out = Box::into_raw(Box::new(PfProbe(p))) };
        Ok(())
    })
}

/// Builds a probe from explicit parameters.
///
/// # Safety
/// `weights` must hold `d` values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_probe_from_parts(
    weights: *const f64,
    d: usize,
    intercept: f64,
    out: *mut *mut PfProbe,
) -> PfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let w = unsafe { slice(weights, d, "weights") }?;
        let p = Probe::from_parts(w.to_vec(), intercept)?;
        unsafe { *out = Box::into_raw(Box::new(PfProbe(p))) };
        Ok(())
    })
}

/// Writes `n` predictions for the `n x d` row-major matrix `x` into `out`.
///
/// # Safety
/// `probe` must come from this library; `x` must hold `n * d` values and
/// `out` room for `n`.
#[no_mangle]
pub unsafe extern "C" fn pf_probe_predict(
    probe: *const PfProbe,
    x: *const f64,
    n: usize,
    d: usize,
    out: *mut f64,
) -> PfStatus {
    guard(|| {
        let p = unsafe { probe.as_ref() }.ok_or_else(|| null("probe"))?;
        let xs = unsafe { slice(x, matrix_len(n, d)?, "x") }?;
        let dst = unsafe { slice_mut(out, n, "out") }?;
        let pred = probe::predict(&p.0, &DMatrix::from_row_slice(n, d, xs))?;
        dst.copy_from_slice(&pred);
        Ok(())
    })
}

/// Feature dimension of the probe, or 0 for a null handle.
///
/// # Safety
/// `probe` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn pf_probe_dim(probe: *const PfProbe) -> usize {
    unsafe { probe.as_ref() }.map_or(0, |p| p.0.dim())
}

/// Copies the weights into `out`, which must have room for `len` values;
/// `len` must equal the probe dimension.
///
/// # Safety
/// `probe` must come from this library; `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn pf_probe_weights(probe: *const PfProbe, out: *mut f64, len: usize) -> PfStatus {
    guard(|| {
        let p = unsafe { probe.as_ref() }.ok_or_else(|| null("probe"))?;
        if len != p.0.dim() {
            return Err(Fail(
                PfStatus::DimensionMismatch,
                format!("buffer holds {len} values, probe has {}", p.0.dim()),
            ));
        }
        unsafe { slice_mut(out, len, "out") }?.copy_from_slice(p.0.weights());
        Ok(())
    })
}

/// Writes the intercept to `out`.
///
/// # Safety
/// `probe` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_probe_intercept(probe: *const PfProbe, out: *mut f64) -> PfStatus {
    guard(|| {
        let p = unsafe { probe.as_ref() }.ok_or_else(|| null("probe"))?;
        let dst = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        *dst = p.0.intercept();
        Ok(())
    })
}

/// Rank of the mean-removed design used by the fit; `*svd` is set to 1 when
/// the rank-deficient path was taken.
///
/// # Safety
/// `probe` must come from this library; `rank` and `svd` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_probe_diagnostics(probe: *const PfProbe, rank: *mut usize, svd: *mut i32) -> PfStatus {
    guard(|| {
        let p = unsafe { probe.as_ref() }.ok_or_else(|| null("probe"))?;
        let r = unsafe { rank.as_mut() }.ok_or_else(|| null("rank"))?;
        let s = unsafe { svd.as_mut() }.ok_or_else(|| null("svd"))?;
        let diag = p.0.diagnostics();
        *r = diag.effective_rank;
        *s = i32::from(diag.path == SolvePath::Svd);
        Ok(())
    })
}

/// Releases a probe. Null is accepted and ignored.
///
/// # Safety
/// `probe` must be null or come from this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn pf_probe_free(probe: *mut PfProbe) {
    if !probe.is_null() {
        drop(unsafe { Box::from_raw(probe) });
    }
}

/// Pearson correlation of two length-`n` vectors.
///
/// # Safety
/// `a` and `b` must hold `n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_pearson(a: *const f64, b: *const f64, n: usize, out: *mut f64) -> PfStatus {
    guard(|| {
        let (a, b) = unsafe { (slice(a, n, "a")?, slice(b, n, "b")?) };
        let dst = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        *dst = metrics::pearson(a, b)?;
        Ok(())
    })
}

/// Root mean squared error of two length-`n` vectors.
///
/// # Safety
/// `a` and `b` must hold `n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_rmse(a: *const f64, b: *const f64, n: usize, out: *mut f64) -> PfStatus {
    guard(|| {
        let (a, b) = unsafe { (slice(a, n, "a")?, slice(b, n, "b")?) };
        let dst = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        *dst = metrics::rmse(a, b)?;
        Ok(())
    })
}

/// Uniform draw of `k` of the `n` entries of `candidates` without
/// replacement. Writes the chosen entries, in draw order, to `out`.
///
/// # Safety
/// `candidates` must hold `n` values and `out` room for `k`.
#[no_mangle]
pub unsafe extern "C" fn pf_random_sample(
    candidates: *const usize,
    n: usize,
    k: usize,
    seed: u64,
    out: *mut usize,
) -> PfStatus {
    guard(|| {
        let cands = unsafe { slice(candidates, n, "candidates") }?;
        let dst = unsafe { slice_mut(out, k, "out") }?;
        let picked = sampling::random_sample(&SampleRequest {
            candidates: cands,
            k,
            seed,
            kind: SamplerKind::Random,
            data: &sampling::NoData,
        })?;
        dst.copy_from_slice(&picked);
        Ok(())
    })
}

struct Points<'a> {
    data: &'a [f32],
    d: usize,
}

impl SamplingData for Points<'_> {
    fn embedding(&self, pos: usize) -> &[f32] {
        &self.data[pos * self.d..(pos + 1) * self.d]
    }
}

/// Farthest-point sampling of `k` rows of the `n x d` row-major matrix
/// `points`. Writes the chosen row indices, in pick order, to `out`.
///
/// # Safety
/// `points` must hold `n * d` values and `out` room for `k`.
#[no_mangle]
pub unsafe extern "C" fn pf_fps_sample(
    points: *const f32,
    n: usize,
    d: usize,
    k: usize,
    seed: u64,
    out: *mut usize,
) -> PfStatus {
    guard(|| {
        let data = unsafe { slice(points, matrix_len(n, d)?, "points") }?;
        let dst = unsafe { slice_mut(out, k, "out") }?;
        let candidates: Vec<usize> = (0..n).collect();
        let picked = sampling::fps_sample(&SampleRequest {
            candidates: &candidates,
            k,
            seed,
            kind: SamplerKind::Fps,
            data: &Points { data, d },
        })?;
        dst.copy_from_slice(&picked);
        Ok(())
    })
}

/// Runs the ablation grid described by the JSON text `grid_json` over the
/// data directory `data_dir`, writing results to `out_path`. `threads` of 0
/// picks the default; `resume` non-zero keeps rows already present.
///
/// # Safety
/// The strings must be NUL-terminated; `summary` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn pf_run_grid(
    grid_json: *const c_char,
    data_dir: *const c_char,
    out_path: *const c_char,
    threads: usize,
    resume: i32,
    summary: *mut PfRunSummary,
) -> PfStatus {
    guard(|| {
        let grid = GridSpec::from_json(unsafe { string(grid_json, "grid_json") }?)?;
        let dir = Path::new(unsafe { string(data_dir, "data_dir") }?);
        let out = Path::new(unsafe { string(out_path, "out_path") }?);
        let manifest = probeforge::ingest::DataManifest::load(dir)?;
        let catalog = DataCatalog::new(manifest.load_datasets(dir)?);
        let opts = RunOptions {
            threads: (threads > 0).then_some(threads),
            resume: resume != 0,
            record_timing: false,
        };
        let s = runner::run_grid(&grid, &catalog, out, &opts)?;
        if let Some(dst) = unsafe { summary.as_mut() } {
            *dst = PfRunSummary {
                total: s.total,
                executed: s.executed,
                skipped: s.skipped,
            };
        }
        Ok(())
    })
}
