//! C ABI over `tcf-core`.
//!
//! Objects cross the boundary as opaque pointers created by `tcf_*_new`,
//! `tcf_*_load` or `tcf_model_train` and released with the matching
//! `tcf_*_free`. Every fallible call returns a [`TcfStatus`]; on failure the
//! message is available from [`tcf_last_error_message`] on the same thread.
//! Strings are NUL-terminated UTF-8.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tcf_core::binarize::{binarize, BinaryMatrix};
use tcf_core::embeddings::LanguageEmbeddingTable;
use tcf_core::eval::{decode_cell, predict_pairs, score};
use tcf_core::kb::{filter_kb, load_long, FilterThresholds, TypologicalKb};
use tcf_core::model::{
    self, load_model, save_model, Mode, ModelParams, PriorCenter, Regularize, TrainConfig,
};
use tcf_core::split::{make_branch_split, SplitResult, SplitSpec};
use tcf_core::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcfStatus {
    Ok = 0,
    Io = 1,
    Parse = 2,
    Integrity = 3,
    Lookup = 4,
    DegenerateSplit = 5,
    Dimension = 6,
    Format = 7,
    UnsupportedVersion = 8,
    NoPrediction = 9,
    InvalidArgument = 10,
    NullPointer = 11,
    Utf8 = 12,
    Panic = 13,
}

impl From<&Error> for TcfStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Io(_) => Self::Io,
            Error::Parse { .. } => Self::Parse,
            Error::Integrity(_) => Self::Integrity,
            Error::Lookup(_) => Self::Lookup,
            Error::DegenerateSplit(_) => Self::DegenerateSplit,
            Error::Dimension(_) => Self::Dimension,
            Error::Format(_) => Self::Format,
            Error::UnsupportedVersion(_) => Self::UnsupportedVersion,
            Error::NoPrediction(_) => Self::NoPrediction,
            Error::InvalidArgument(_) => Self::InvalidArgument,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcfMode {
    Joint = 0,
    FrozenExternal = 1,
    FinetunedExternal = 2,
}

/// Training settings. Start from [`tcf_train_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TcfTrainConfig {
    pub epochs: u32,
    pub batch_size: u32,
    pub dim: u32,
    pub l2_weight: f64,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub init_std: f64,
    pub seed: u64,
    /// A [`TcfMode`] value.
    pub mode: u32,
    /// Nonzero to penalize language embeddings only.
    pub languages_only_penalty: u8,
    /// Nonzero for a per-column bias.
    pub bias: u8,
    /// Nonzero to centre the fine-tuning prior at zero instead of the external vectors.
    pub zero_prior: u8,
}

/// A knowledge base with its binarized matrix.
pub struct TcfKb {
    kb: TypologicalKb,
    matrix: BinaryMatrix,
}

pub struct TcfSplit {
    split: SplitResult,
}

pub struct TcfModel {
    params: ModelParams,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

#[doc(hidden)]
pub struct Failure(TcfStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(TcfStatus::from(&e), e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure(TcfStatus::Io, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TcfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TcfStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            TcfStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(TcfStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(TcfStatus::Utf8, format!("{name} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure(TcfStatus::NullPointer, format!("{name} is null")))
}

fn out_arg<T>(p: *mut T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(Failure(TcfStatus::NullPointer, format!("{name} is null")));
    }
    Ok(())
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tcf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn tcf_train_config_default() -> TcfTrainConfig {
    let d = TrainConfig::default();
    TcfTrainConfig {
        epochs: d.epochs as u32,
        batch_size: d.batch_size as u32,
        dim: d.dim as u32,
        l2_weight: d.l2_weight,
        learning_rate: d.learning_rate,
        adam_beta1: d.adam_beta1,
        adam_beta2: d.adam_beta2,
        adam_epsilon: d.adam_epsilon,
        init_std: d.init_std,
        seed: d.seed,
        mode: TcfMode::Joint as u32,
        languages_only_penalty: 0,
        bias: 0,
        zero_prior: 0,
    }
}

impl TryFrom<&TcfTrainConfig> for TrainConfig {
    type Error = Failure;

    fn try_from(c: &TcfTrainConfig) -> Result<Self, Failure> {
        let mode = match c.mode {
            0 => Mode::Joint,
            1 => Mode::FrozenExternal,
            2 => Mode::FinetunedExternal,
            m => {
                return Err(Failure(
                    TcfStatus::InvalidArgument,
                    format!("unknown mode {m}"),
                ))
            }
        };
        Ok(TrainConfig {
            epochs: c.epochs as usize,
            batch_size: c.batch_size as usize,
            dim: c.dim as usize,
            l2_weight: c.l2_weight,
            learning_rate: c.learning_rate,
            adam_beta1: c.adam_beta1,
            adam_beta2: c.adam_beta2,
            adam_epsilon: c.adam_epsilon,
            init_std: c.init_std,
            seed: c.seed,
            mode,
            regularize: if c.languages_only_penalty != 0 {
                Regularize::LanguagesOnly
            } else {
                Regularize::Both
            },
            bias: c.bias != 0,
            prior_center: if c.zero_prior != 0 {
                PriorCenter::Zero
            } else {
                PriorCenter::External
            },
        })
    }
}

fn kb_handle(kb: TypologicalKb) -> *mut TcfKb {
    let matrix = binarize(&kb);
    Box::into_raw(Box::new(TcfKb { kb, matrix }))
}

/// Loads a long-format KB file.
///
/// # Safety
/// `path` must be a valid C string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn tcf_kb_load(path: *const c_char, out: *mut *mut TcfKb) -> TcfStatus {
    guard(|| {
        out_arg(out, "out")?;
        let path = str_arg(path, "path")?;
        let kb = load_long(BufReader::new(File::open(path)?))?;
        *out = kb_handle(kb);
        Ok(())
    })
}

/// Applies the value, coverage and branch-size filters, producing a new KB.
///
/// # Safety
/// `kb` must come from this library and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tcf_kb_filter(
    kb: *const TcfKb,
    min_value_count: u32,
    min_features_per_language: u32,
    min_branch_size: u32,
    out: *mut *mut TcfKb,
) -> TcfStatus {
    guard(|| {
        out_arg(out, "out")?;
        let kb = ref_arg(kb, "kb")?;
        let t = FilterThresholds {
            min_value_count: min_value_count as usize,
            min_features_per_language: min_features_per_language as usize,
            min_branch_size: min_branch_size as usize,
        };
        *out = kb_handle(filter_kb(&kb.kb, t));
        Ok(())
    })
}

/// Number of languages, or 0 for a null handle.
///
/// # Safety
/// `kb` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn tcf_kb_n_languages(kb: *const TcfKb) -> usize {
    kb.as_ref().map_or(0, |k| k.kb.languages().len())
}

/// # Safety
/// `kb` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn tcf_kb_n_features(kb: *const TcfKb) -> usize {
    kb.as_ref().map_or(0, |k| k.kb.features().len())
}

/// Number of binary columns after binarization.
///
/// # Safety
/// `kb` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn tcf_kb_n_columns(kb: *const TcfKb) -> usize {
    kb.as_ref().map_or(0, |k| k.matrix.n_cols())
}

/// # Safety
/// `kb` must be null or come from this library, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tcf_kb_free(kb: *mut TcfKb) {
    if !kb.is_null() {
        drop(Box::from_raw(kb));
    }
}

/// Holds out the genus `branch`.
///
/// # Safety
/// `kb` must come from this library, `branch` must be a valid C string and
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tcf_split_new(
    kb: *const TcfKb,
    branch: *const c_char,
    in_branch_fraction: f64,
    eval_fraction: f64,
    seed: u64,
    out: *mut *mut TcfSplit,
) -> TcfStatus {
    guard(|| {
        out_arg(out, "out")?;
        let kb = ref_arg(kb, "kb")?;
        let mut spec = SplitSpec::new(str_arg(branch, "branch")?, in_branch_fraction, seed);
        spec.eval_fraction = eval_fraction;
        let split = make_branch_split(&kb.kb, &spec)?;
        *out = Box::into_raw(Box::new(TcfSplit { split }));
        Ok(())
    })
}

/// # Safety
/// `split` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn tcf_split_n_train(split: *const TcfSplit) -> usize {
    split.as_ref().map_or(0, |s| s.split.train.len())
}

/// # Safety
/// `split` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn tcf_split_n_eval(split: *const TcfSplit) -> usize {
    split.as_ref().map_or(0, |s| s.split.eval.len())
}

/// # Safety
/// `split` must be null or come from this library, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tcf_split_free(split: *mut TcfSplit) {
    if !split.is_null() {
        drop(Box::from_raw(split));
    }
}

/// Trains on the split's training cells. `embeddings_path` may be null
/// unless `config.mode` uses external embeddings.
///
/// # Safety
/// Handles must come from this library, `config` must be readable,
/// `embeddings_path` null or a valid C string, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tcf_model_train(
    kb: *const TcfKb,
    split: *const TcfSplit,
    config: *const TcfTrainConfig,
    embeddings_path: *const c_char,
    out: *mut *mut TcfModel,
) -> TcfStatus {
    guard(|| {
        out_arg(out, "out")?;
        let kb = ref_arg(kb, "kb")?;
        let split = ref_arg(split, "split")?;
        let cfg = TrainConfig::try_from(ref_arg(config, "config")?)?;
        let table = if embeddings_path.is_null() {
            None
        } else {
            let path = str_arg(embeddings_path, "embeddings_path")?;
            Some(LanguageEmbeddingTable::import(BufReader::new(File::open(
                path,
            )?))?)
        };
        let trained = model::train(&kb.matrix, &split.split, &cfg, table.as_ref())?;
        *out = Box::into_raw(Box::new(TcfModel {
            params: trained.params,
        }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from this library and `path` be a valid C string.
#[no_mangle]
pub unsafe extern "C" fn tcf_model_save(model: *const TcfModel, path: *const c_char) -> TcfStatus {
    guard(|| {
        let model = ref_arg(model, "model")?;
        let mut w = BufWriter::new(File::create(str_arg(path, "path")?)?);
        save_model(&model.params, &mut w)?;
        w.flush()?;
        Ok(())
    })
}

/// # Safety
/// `path` must be a valid C string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tcf_model_load(path: *const c_char, out: *mut *mut TcfModel) -> TcfStatus {
    guard(|| {
        out_arg(out, "out")?;
        let params = load_model(BufReader::new(File::open(str_arg(path, "path")?)?))?;
        *out = Box::into_raw(Box::new(TcfModel { params }));
        Ok(())
    })
}

/// Decodes the most probable value of one cell into `out_value`.
///
/// # Safety
/// Handles must come from this library, ids must be valid C strings and
/// `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn tcf_model_predict(
    model: *const TcfModel,
    kb: *const TcfKb,
    language_id: *const c_char,
    feature_id: *const c_char,
    out_value: *mut u32,
) -> TcfStatus {
    guard(|| {
        out_arg(out_value, "out_value")?;
        let model = ref_arg(model, "model")?;
        let kb = ref_arg(kb, "kb")?;
        model.params.check_compatible(&kb.matrix)?;
        *out_value = decode_cell(
            &model.params,
            &kb.matrix,
            str_arg(language_id, "language_id")?,
            str_arg(feature_id, "feature_id")?,
        )?;
        Ok(())
    })
}

/// Micro-F1 over the split's evaluation cells.
///
/// # Safety
/// Handles must come from this library and `out_f1` be writable.
#[no_mangle]
pub unsafe extern "C" fn tcf_model_evaluate(
    model: *const TcfModel,
    kb: *const TcfKb,
    split: *const TcfSplit,
    out_f1: *mut f64,
) -> TcfStatus {
    guard(|| {
        out_arg(out_f1, "out_f1")?;
        let model = ref_arg(model, "model")?;
        let kb = ref_arg(kb, "kb")?;
        let split = ref_arg(split, "split")?;
        model.params.check_compatible(&kb.matrix)?;
        let preds = predict_pairs(&model.params, &kb.matrix, &split.split.eval)?;
        *out_f1 = score(&preds, &split.split.eval, &kb.kb)?.micro_f1;
        Ok(())
    })
}

/// # Safety
/// `model` must be null or come from this library, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tcf_model_free(model: *mut TcfModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
