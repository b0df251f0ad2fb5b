//! C interface to the `ffino` library.
//!
//! Every function returns an [`FfinoStatus`]; outputs go through pointer
//! arguments. On failure the message is available from
//! [`ffino_last_error`] on the same thread until the next call that fails.
//! Datasets and models are opaque handles released with their `_free`
//! function. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use ffino::datagen::physics::{welge_front, ToyConstants};
use ffino::datagen::relperm::mbc_eval;
use ffino::datagen::{read_dataset, Dataset, RelPermCoeffs};
use ffino::eval::{self as metrics, Predictor};
use ffino::layers::Module;
use ffino::model::{load_checkpoint, FfinoModel};
use ffino::Error;

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FfinoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    Numerical = 5,
    Panic = 6,
}

/// Loaded dataset.
pub struct FfinoDataset(Dataset);

/// Loaded single-precision model.
pub struct FfinoModel32(FfinoModel<f32>);

/// Curve coefficients, same meaning as the library's `RelPermCoeffs`.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct FfinoRelPerm {
    pub krw_max: f64,
    pub krg_max: f64,
    pub swi: f64,
    pub sgr: f64,
    pub m: f64,
    pub n: f64,
}

impl From<FfinoRelPerm> for RelPermCoeffs {
    fn from(c: FfinoRelPerm) -> Self {
        RelPermCoeffs {
            krw_max: c.krw_max,
            krg_max: c.krg_max,
            swi: c.swi,
            sgr: c.sgr,
            m: c.m,
            n: c.n,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> FfinoStatus {
    match e {
        Error::Io { .. } => FfinoStatus::Io,
        Error::Format { .. } | Error::Json(_) => FfinoStatus::Format,
        Error::NonFinite(_) | Error::FitNotConverged { .. } | Error::DegenerateReference(_) | Error::Backward(_) => {
            FfinoStatus::Numerical
        }
        _ => FfinoStatus::InvalidArgument,
    }
}

/// Runs `f`, mapping errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), (FfinoStatus, String)>) -> FfinoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FfinoStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            FfinoStatus::Panic
        }
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, (FfinoStatus, String)>;
}

impl<T> OrStatus<T> for ffino::Result<T> {
    fn or_status(self) -> Result<T, (FfinoStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

fn null(what: &str) -> (FfinoStatus, String) {
    (FfinoStatus::NullPointer, format!("{what} is null"))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, (FfinoStatus, String)> {
    if p.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (FfinoStatus::InvalidArgument, "path is not UTF-8".to_string()))?;
    Ok(PathBuf::from(s))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], (FfinoStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (FfinoStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ffino_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ffino_version() -> *const c_char {
    static V: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    V.as_ptr().cast()
}

/// Water and gas relative permeability at water saturation `sw`.
///
/// # Safety
/// `coeffs`, `krw` and `krg` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ffino_mbc_eval(
    coeffs: *const FfinoRelPerm,
    sw: f64,
    krw: *mut f64,
    krg: *mut f64,
) -> FfinoStatus {
    guard(|| {
        let c: RelPermCoeffs = (*coeffs.as_ref().ok_or_else(|| null("coeffs"))?).into();
        let (w, g) = mbc_eval(sw, &c).or_status()?;
        *out(krw, "krw")? = w;
        *out(krg, "krg")? = g;
        Ok(())
    })
}

/// Shock-front gas saturation and front speed with the default viscosities.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ffino_welge_front(
    coeffs: *const FfinoRelPerm,
    s_front: *mut f64,
    slope: *mut f64,
) -> FfinoStatus {
    guard(|| {
        let c: RelPermCoeffs = (*coeffs.as_ref().ok_or_else(|| null("coeffs"))?).into();
        c.validate().or_status()?;
        let k = ToyConstants::default();
        let w = welge_front(&c, k.mu_g, k.mu_w);
        *out(s_front, "s_front")? = w.s_front;
        *out(slope, "slope")? = w.slope;
        Ok(())
    })
}

/// Opens an FDS1 dataset file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `handle` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ffino_dataset_open(path: *const c_char, handle: *mut *mut FfinoDataset) -> FfinoStatus {
    guard(|| {
        let slot = out(handle, "handle")?;
        let ds = read_dataset(path_arg(path)?).or_status()?;
        *slot = Box::into_raw(Box::new(FfinoDataset(ds)));
        Ok(())
    })
}

/// Sample count and grid shape (`nr`, `nz`, report steps).
///
/// # Safety
/// `ds` must come from [`ffino_dataset_open`]; outputs may be null.
#[no_mangle]
pub unsafe extern "C" fn ffino_dataset_info(
    ds: *const FfinoDataset,
    samples: *mut usize,
    nr: *mut usize,
    nz: *mut usize,
    steps: *mut usize,
) -> FfinoStatus {
    guard(|| {
        let ds = &ds.as_ref().ok_or_else(|| null("dataset"))?.0;
        for (p, v) in [(samples, ds.len()), (nr, ds.grid.nr), (nz, ds.grid.nz), (steps, ds.grid.steps())] {
            if let Some(p) = p.as_mut() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// # Safety
/// `ds` must come from [`ffino_dataset_open`] or be null.
#[no_mangle]
pub unsafe extern "C" fn ffino_dataset_free(ds: *mut FfinoDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Loads an FCK1 checkpoint in single precision.
///
/// # Safety
/// `path` must be a NUL-terminated string and `handle` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ffino_model_load(path: *const c_char, handle: *mut *mut FfinoModel32) -> FfinoStatus {
    guard(|| {
        let slot = out(handle, "handle")?;
        let m = load_checkpoint::<f32>(path_arg(path)?).or_status()?;
        *slot = Box::into_raw(Box::new(FfinoModel32(m)));
        Ok(())
    })
}

/// # Safety
/// `model` must come from [`ffino_model_load`]; `count` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ffino_model_param_count(model: *const FfinoModel32, count: *mut usize) -> FfinoStatus {
    guard(|| {
        let m = &model.as_ref().ok_or_else(|| null("model"))?.0;
        *out(count, "count")? = m.param_count();
        Ok(())
    })
}

/// Predicts every report step of dataset sample `index` in physical units
/// into `buf`, laid out `[step][r][z]`. `len` must equal steps·nr·nz.
///
/// # Safety
/// Handles must be live; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ffino_model_predict(
    model: *const FfinoModel32,
    ds: *const FfinoDataset,
    index: usize,
    buf: *mut f64,
    len: usize,
) -> FfinoStatus {
    guard(|| {
        let m = &model.as_ref().ok_or_else(|| null("model"))?.0;
        let ds = &ds.as_ref().ok_or_else(|| null("dataset"))?.0;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let sample = ds.samples.get(index).ok_or_else(|| {
            (FfinoStatus::InvalidArgument, format!("sample {index} out of range (have {})", ds.len()))
        })?;
        let y = m.predict(sample, &ds.grid).or_status()?;
        if y.len() != len {
            return Err((FfinoStatus::InvalidArgument, format!("buffer holds {len} values, need {}", y.len())));
        }
        std::slice::from_raw_parts_mut(buf, len).copy_from_slice(&y);
        Ok(())
    })
}

/// # Safety
/// `model` must come from [`ffino_model_load`] or be null.
#[no_mangle]
pub unsafe extern "C" fn ffino_model_free(model: *mut FfinoModel32) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Field metrics for one `steps × h × w` series.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct FfinoMetrics {
    pub r2: f64,
    pub rmse: f64,
    pub ssim: f64,
    pub mre: f64,
    /// Nonzero when no cell of the reference reaches the AOI threshold.
    pub empty_aoi: i32,
}

/// Scores `y_hat` against `y` (each `steps·h·w` values). `threshold` is the
/// AOI cut-off on `y`.
///
/// # Safety
/// `y` and `y_hat` must hold `steps·h·w` doubles; `result` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ffino_metrics(
    y: *const f64,
    y_hat: *const f64,
    steps: usize,
    h: usize,
    w: usize,
    threshold: f64,
    result: *mut FfinoMetrics,
) -> FfinoStatus {
    guard(|| {
        let len = steps
            .checked_mul(h)
            .and_then(|v| v.checked_mul(w))
            .filter(|&v| v > 0)
            .ok_or_else(|| (FfinoStatus::InvalidArgument, "empty or overflowing shape".to_string()))?;
        let y = slice(y, len, "y")?;
        let y_hat = slice(y_hat, len, "y_hat")?;
        let mre = metrics::mre_aoi(y, y_hat, threshold).or_status()?;
        *out(result, "result")? = FfinoMetrics {
            r2: metrics::r2(y, y_hat).or_status()?,
            rmse: metrics::rmse(y, y_hat).or_status()?,
            ssim: metrics::ssim_series(y, y_hat, steps, h, w).or_status()?,
            mre: mre.value,
            empty_aoi: mre.empty_aoi as i32,
        };
        Ok(())
    })
}
