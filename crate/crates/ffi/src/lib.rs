//! C ABI over the syncforge library.
//!
//! Every fallible call returns an [`SfStatus`]; on failure the message is
//! kept per thread and read back with [`sf_last_error_message`]. Models are
//! opaque [`SfModel`] handles owned by the caller until [`sf_model_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use syncforge::datagen::{load_training_set, Extractor};
use syncforge::elm::{self, ElmModel, InputKind, HIDDEN_FACTOR};
use syncforge::error::Error;
use syncforge::num_complex::Complex64;
use syncforge::rng::{label_tag, stream_rng};
use syncforge::signal::OfdmConfig;
use syncforge::sync_metrics::sc_metric_iterative;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfStatus {
    Ok = 0,
    InvalidArgument = 1,
    Numeric = 2,
    State = 3,
    Format = 4,
    Io = 5,
    CollectionFailure = 6,
    NotFound = 7,
    NullPointer = 8,
    Panic = 9,
}

/// Trained extreme learning machine.
pub struct SfModel {
    inner: ElmModel,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> SfStatus {
    match e {
        Error::InvalidArgument(_) => SfStatus::InvalidArgument,
        Error::Numeric(_) => SfStatus::Numeric,
        Error::State(_) => SfStatus::State,
        Error::Format(_) => SfStatus::Format,
        Error::CollectionFailure(_) => SfStatus::CollectionFailure,
        Error::NotFound(_) => SfStatus::NotFound,
        Error::Io(_) => SfStatus::Io,
    }
}

struct Fail(SfStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(SfStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SfStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("panic: {msg}"));
            SfStatus::Panic
        }
    }
}

unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(SfStatus::InvalidArgument, format!("{what} is not valid UTF-8")))?;
    Ok(PathBuf::from(s))
}

unsafe fn model_ref<'a>(m: *const SfModel) -> Result<&'a SfModel, Fail> {
    m.as_ref().ok_or_else(|| null("model"))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn window_arg(re: *const f64, im: *const f64, len: usize) -> Result<Vec<Complex64>, Fail> {
    let re = slice_arg(re, len, "re")?;
    let im = slice_arg(im, len, "im")?;
    Ok(re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect())
}

fn config(n: usize, cp_len: usize) -> Result<OfdmConfig, Fail> {
    Ok(OfdmConfig::new(n, cp_len)?)
}

/// Message for the last failed call on this thread ("" after a success).
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn sf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn sf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a model file written by `syncforge train` or [`sf_model_save`].
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sf_model_load(path: *const c_char, out: *mut *mut SfModel) -> SfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let path = path_arg(path, "path")?;
        let inner = elm::load_model(&path)?;
        *out = Box::into_raw(Box::new(SfModel { inner }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn sf_model_save(model: *const SfModel, path: *const c_char) -> SfStatus {
    guard(|| {
        let m = model_ref(model)?;
        let path = path_arg(path, "path")?;
        elm::save_model(&m.inner, &path)?;
        Ok(())
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sf_model_free(model: *mut SfModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Output width K, hidden width N_h and expected input length.
///
/// # Safety
/// `model` must come from this library; output pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn sf_model_dims(
    model: *const SfModel,
    k: *mut usize,
    n_h: *mut usize,
    input_dim: *mut usize,
) -> SfStatus {
    guard(|| {
        let m = &model_ref(model)?.inner;
        if let Some(k) = k.as_mut() {
            *k = m.k;
        }
        if let Some(n) = n_h.as_mut() {
            *n = m.n_h;
        }
        if let Some(d) = input_dim.as_mut() {
            *d = m.input_dim;
        }
        Ok(())
    })
}

/// Estimated timing index from a prepared (normalized) feature vector.
///
/// # Safety
/// `features` must point to `len` doubles and `out_sto` be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_model_estimate_sto(
    model: *const SfModel,
    features: *const f64,
    len: usize,
    out_sto: *mut usize,
) -> SfStatus {
    guard(|| {
        let m = &model_ref(model)?.inner;
        let x = slice_arg(features, len, "features")?;
        let out = out_sto.as_mut().ok_or_else(|| null("out_sto"))?;
        *out = elm::estimate_sto(m, x)?;
        Ok(())
    })
}

/// Estimated timing index from a raw receive window of `len` complex
/// samples; features are extracted as during training (S&C metric for
/// metric-input models).
///
/// # Safety
/// `re` and `im` must each point to `len` doubles; `out_sto` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_model_estimate_sto_window(
    model: *const SfModel,
    n: usize,
    cp_len: usize,
    re: *const f64,
    im: *const f64,
    len: usize,
    out_sto: *mut usize,
) -> SfStatus {
    guard(|| {
        let m = &model_ref(model)?.inner;
        let cfg = config(n, cp_len)?;
        if m.k != cfg.metric_len() {
            return Err(Fail(
                SfStatus::InvalidArgument,
                format!("model has K={} but N={n}, L_c={cp_len} give K={}", m.k, cfg.metric_len()),
            ));
        }
        let out = out_sto.as_mut().ok_or_else(|| null("out_sto"))?;
        let window = window_arg(re, im, len)?;
        let extractor = match m.input_kind {
            InputKind::Metric => Extractor::Sc,
            InputKind::Raw => Extractor::RawSamples,
        };
        let feat = extractor.features(&window, &cfg)?;
        *out = elm::estimate_sto(m, &feat.values)?;
        Ok(())
    })
}

/// Schmidl & Cox timing metric at the first `K = N + L_c` lags of a window.
///
/// # Safety
/// `re`/`im` must point to `len` doubles; `out` must hold `out_len >= K`.
#[no_mangle]
pub unsafe extern "C" fn sf_sc_metric(
    n: usize,
    cp_len: usize,
    re: *const f64,
    im: *const f64,
    len: usize,
    out: *mut f64,
    out_len: usize,
) -> SfStatus {
    guard(|| {
        let cfg = config(n, cp_len)?;
        let k = cfg.metric_len();
        if out.is_null() {
            return Err(null("out"));
        }
        if out_len < k {
            return Err(Fail(SfStatus::InvalidArgument, format!("output holds {out_len} values, need K={k}")));
        }
        let window = window_arg(re, im, len)?;
        let m = sc_metric_iterative(&window, &cfg)?;
        std::slice::from_raw_parts_mut(out, k).copy_from_slice(&m.values);
        Ok(())
    })
}

/// Trains a fresh ELM (N_h = 8K, plain pseudoinverse when `ridge` is 0) on a
/// dataset written by `syncforge gen`.
///
/// # Safety
/// `dataset_path` must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sf_train_dataset(
    dataset_path: *const c_char,
    seed: u64,
    ridge: f64,
    out: *mut *mut SfModel,
) -> SfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let path = path_arg(dataset_path, "dataset_path")?;
        let set = load_training_set(&path)?;
        let k = set.label_dim;
        let kind = match set.header.extractor {
            Extractor::RawSamples => InputKind::Raw,
            Extractor::Sc | Extractor::Minn => InputKind::Metric,
        };
        let mut model = elm::init_model(k, HIDDEN_FACTOR * k, kind, &mut stream_rng(seed, &[label_tag("init")]))?;
        elm::train(&mut model, &set.features, &set.labels, set.len(), ridge)?;
        *out = Box::into_raw(Box::new(SfModel { inner: model }));
        Ok(())
    })
}
