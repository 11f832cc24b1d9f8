//! C ABI over `ambi`: load a checkpoint, classify a recording, read the
//! class probabilities and attention weights.
//!
//! Handles are opaque and owned by the caller once returned; free them with
//! the matching `*_free` function. Every fallible call returns an
//! [`AmbiStatus`]; on failure a description is available from
//! [`ambi_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use ambi::corpus::{load_embedding_table, Featurizer};
use ambi::features::{decompose_hangul, read_wav, AudioSignal, FeatureSequence};
use ambi::models::{load_checkpoint, AttentionSite, Model, ModelCard, Prediction, TextMode, NUM_CLASSES};
use ambi::training::CLASS_NAMES;
use ambi::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AmbiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Data = 4,
    Io = 5,
    Checkpoint = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AmbiAttentionSite {
    AudioSelf = 0,
    TextSelf = 1,
    TextHop = 2,
    AudioHop = 3,
}

impl From<AttentionSite> for AmbiAttentionSite {
    fn from(s: AttentionSite) -> Self {
        match s {
            AttentionSite::AudioSelf => Self::AudioSelf,
            AttentionSite::TextSelf => Self::TextSelf,
            AttentionSite::TextHop => Self::TextHop,
            AttentionSite::AudioHop => Self::AudioHop,
        }
    }
}

/// A loaded classifier with its feature settings.
pub struct AmbiModel {
    model: Model,
    featurizer: Featurizer,
    variant_name: CString,
}

/// One classification result.
pub struct AmbiPrediction {
    prediction: Prediction,
    audio_valid_len: usize,
    text_valid_len: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(e: &Error) -> AmbiStatus {
    match e {
        Error::Config(_) | Error::Modality { .. } => AmbiStatus::Config,
        Error::File { .. } | Error::Io(_) => AmbiStatus::Io,
        Error::Checkpoint(_) => AmbiStatus::Checkpoint,
        _ => AmbiStatus::Data,
    }
}

fn fail(status: AmbiStatus, message: impl Into<String>) -> AmbiStatus {
    set_error(message);
    status
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), AmbiStatus>) -> AmbiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AmbiStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(AmbiStatus::Panic, "internal panic"),
    }
}

fn lift<T>(r: ambi::Result<T>) -> Result<T, AmbiStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, AmbiStatus> {
    if p.is_null() {
        return Err(fail(AmbiStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(AmbiStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn read_opt_str<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, AmbiStatus> {
    if p.is_null() {
        Ok(None)
    } else {
        read_str(p, what).map(Some)
    }
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ambi_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ambi_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads `checkpoint_path` and its JSON sidecar. `embeddings_path` may be
/// null; it overrides the table recorded for dense-text checkpoints.
///
/// # Safety
/// String arguments must be null or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ambi_model_load(
    checkpoint_path: *const c_char,
    embeddings_path: *const c_char,
    out: *mut *mut AmbiModel,
) -> AmbiStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(AmbiStatus::NullPointer, "out is null"));
        }
        *out = ptr::null_mut();
        let path = PathBuf::from(read_str(checkpoint_path, "checkpoint_path")?);
        let emb = read_opt_str(embeddings_path, "embeddings_path")?.map(PathBuf::from);
        let (model, card) = lift(load_checkpoint(&path))?;
        let featurizer = lift(featurizer_for(&card, emb))?;
        let variant_name = CString::new(model.variant().tag().name()).expect("names have no NUL");
        *out = Box::into_raw(Box::new(AmbiModel {
            model,
            featurizer,
            variant_name,
        }));
        Ok(())
    })
}

fn featurizer_for(card: &ModelCard, emb: Option<PathBuf>) -> ambi::Result<Featurizer> {
    let mode = card.variant.text_mode();
    let table = match (mode, emb.or_else(|| card.embeddings.clone())) {
        (TextMode::Dense, Some(p)) => Some(load_embedding_table(&p)?),
        (TextMode::Dense, None) => return Err(Error::Config("dense checkpoint needs an embedding table".into())),
        _ => None,
    };
    Featurizer::new(card.features.clone(), mode, table)
}

/// # Safety
/// `model` must be null or a handle from [`ambi_model_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ambi_model_free(model: *mut AmbiModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Snake-case variant name, owned by the model; null for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ambi_model_variant(model: *const AmbiModel) -> *const c_char {
    model.as_ref().map_or(ptr::null(), |m| m.variant_name.as_ptr())
}

/// Whether predictions need a transcript.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ambi_model_uses_text(model: *const AmbiModel) -> bool {
    model.as_ref().is_some_and(|m| m.model.variant().tag().uses_text())
}

/// Number of trainable scalars; 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ambi_model_num_parameters(model: *const AmbiModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.num_parameters())
}

fn run_prediction(
    m: &AmbiModel,
    audio: FeatureSequence,
    transcript: Option<&str>,
) -> Result<AmbiPrediction, AmbiStatus> {
    let text = match (m.featurizer.text_mode(), transcript) {
        (TextMode::None, _) => None,
        (_, Some(t)) => lift(m.featurizer.text(t))?,
        (_, None) => return Err(fail(AmbiStatus::InvalidArgument, "this model needs a transcript")),
    };
    let prediction = lift(m.model.predict(&audio, text.as_ref()))?;
    Ok(AmbiPrediction {
        prediction,
        audio_valid_len: audio.valid_len(),
        text_valid_len: text.map_or(0, |t| t.valid_len()),
    })
}

unsafe fn emit(out: *mut *mut AmbiPrediction, p: AmbiPrediction) {
    *out = Box::into_raw(Box::new(p));
}

/// Classifies a WAV file. `transcript` may be null for audio-only models.
///
/// # Safety
/// `model` must be a live handle, strings NUL-terminated or null, `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ambi_model_predict_wav(
    model: *const AmbiModel,
    wav_path: *const c_char,
    transcript: *const c_char,
    out: *mut *mut AmbiPrediction,
) -> AmbiStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(AmbiStatus::NullPointer, "out is null"));
        }
        *out = ptr::null_mut();
        let m = model
            .as_ref()
            .ok_or_else(|| fail(AmbiStatus::NullPointer, "model is null"))?;
        let path = PathBuf::from(read_str(wav_path, "wav_path")?);
        let transcript = read_opt_str(transcript, "transcript")?;
        let signal = lift(read_wav(&path))?;
        let audio = lift(m.featurizer.audio(&signal))?;
        emit(out, run_prediction(m, audio, transcript)?);
        Ok(())
    })
}

/// Classifies `len` mono samples in [-1, 1] at `sample_rate` Hz.
///
/// # Safety
/// `samples` must point to `len` readable doubles; other pointers as for
/// [`ambi_model_predict_wav`].
#[no_mangle]
pub unsafe extern "C" fn ambi_model_predict_samples(
    model: *const AmbiModel,
    samples: *const f64,
    len: usize,
    sample_rate: u32,
    transcript: *const c_char,
    out: *mut *mut AmbiPrediction,
) -> AmbiStatus {
    guard(|| {
        if out.is_null() || samples.is_null() {
            return Err(fail(AmbiStatus::NullPointer, "out or samples is null"));
        }
        *out = ptr::null_mut();
        let m = model
            .as_ref()
            .ok_or_else(|| fail(AmbiStatus::NullPointer, "model is null"))?;
        let transcript = read_opt_str(transcript, "transcript")?;
        let data = std::slice::from_raw_parts(samples, len).to_vec();
        let signal =
            AudioSignal::new(data, sample_rate).map_err(|e| fail(AmbiStatus::InvalidArgument, e.to_string()))?;
        let audio = lift(m.featurizer.audio(&signal))?;
        emit(out, run_prediction(m, audio, transcript)?);
        Ok(())
    })
}

/// # Safety
/// `prediction` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ambi_prediction_free(prediction: *mut AmbiPrediction) {
    if !prediction.is_null() {
        drop(Box::from_raw(prediction));
    }
}

/// Predicted class index in 0..7, or -1 for a null handle.
///
/// # Safety
/// `prediction` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ambi_prediction_label(prediction: *const AmbiPrediction) -> i32 {
    prediction.as_ref().map_or(-1, |p| p.prediction.label as i32)
}

/// Copies the seven class probabilities into `out`, which must hold
/// `capacity >= 7` doubles.
///
/// # Safety
/// `out` must point to `capacity` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ambi_prediction_probabilities(
    prediction: *const AmbiPrediction,
    out: *mut f64,
    capacity: usize,
) -> AmbiStatus {
    guard(|| {
        let p = prediction
            .as_ref()
            .ok_or_else(|| fail(AmbiStatus::NullPointer, "prediction is null"))?;
        if out.is_null() {
            return Err(fail(AmbiStatus::NullPointer, "out is null"));
        }
        if capacity < NUM_CLASSES {
            return Err(fail(
                AmbiStatus::InvalidArgument,
                format!("capacity must be at least {NUM_CLASSES}"),
            ));
        }
        ptr::copy_nonoverlapping(p.prediction.probs.as_ptr(), out, NUM_CLASSES);
        Ok(())
    })
}

/// Valid (unpadded) steps of the audio and text inputs; text is 0 for
/// audio-only models.
///
/// # Safety
/// `prediction` must be a live handle; the outputs must be writable or null.
#[no_mangle]
pub unsafe extern "C" fn ambi_prediction_valid_lengths(
    prediction: *const AmbiPrediction,
    audio: *mut usize,
    text: *mut usize,
) -> AmbiStatus {
    guard(|| {
        let p = prediction
            .as_ref()
            .ok_or_else(|| fail(AmbiStatus::NullPointer, "prediction is null"))?;
        if let Some(a) = audio.as_mut() {
            *a = p.audio_valid_len;
        }
        if let Some(t) = text.as_mut() {
            *t = p.text_valid_len;
        }
        Ok(())
    })
}

/// Number of attention distributions; 0 for a null handle.
///
/// # Safety
/// `prediction` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ambi_prediction_attention_count(prediction: *const AmbiPrediction) -> usize {
    prediction.as_ref().map_or(0, |p| p.prediction.attention.len())
}

/// Borrows attention distribution `index`: its site and weights over the
/// valid steps. The weights stay valid until the prediction is freed.
///
/// # Safety
/// `prediction` must be a live handle and all outputs writable.
#[no_mangle]
pub unsafe extern "C" fn ambi_prediction_attention(
    prediction: *const AmbiPrediction,
    index: usize,
    site: *mut AmbiAttentionSite,
    weights: *mut *const f64,
    len: *mut usize,
) -> AmbiStatus {
    guard(|| {
        let p = prediction
            .as_ref()
            .ok_or_else(|| fail(AmbiStatus::NullPointer, "prediction is null"))?;
        if site.is_null() || weights.is_null() || len.is_null() {
            return Err(fail(AmbiStatus::NullPointer, "output pointer is null"));
        }
        let dump = p.prediction.attention.get(index).ok_or_else(|| {
            fail(
                AmbiStatus::InvalidArgument,
                format!("attention index {index} out of range"),
            )
        })?;
        *site = dump.site.into();
        *weights = dump.weights.as_ptr();
        *len = dump.weights.len();
        Ok(())
    })
}

/// Short name of class `index` ("S", "YN", ...), or null out of range.
#[no_mangle]
pub extern "C" fn ambi_label_name(index: usize) -> *const c_char {
    const NAMES: [&str; NUM_CLASSES] = ["S\0", "YN\0", "WH\0", "RQ\0", "C\0", "R\0", "RC\0"];
    debug_assert!(NAMES
        .iter()
        .zip(CLASS_NAMES)
        .all(|(n, c)| n.trim_end_matches('\0') == c));
    NAMES.get(index).map_or(ptr::null(), |n| n.as_ptr().cast())
}

/// Splits a precomposed Hangul syllable into onset, nucleus and coda
/// indices. The coda is -1 for open syllables; otherwise 0..27.
///
/// # Safety
/// The outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ambi_decompose_hangul(
    codepoint: u32,
    onset: *mut i32,
    nucleus: *mut i32,
    coda: *mut i32,
) -> AmbiStatus {
    guard(|| {
        if onset.is_null() || nucleus.is_null() || coda.is_null() {
            return Err(fail(AmbiStatus::NullPointer, "output pointer is null"));
        }
        let ch = char::from_u32(codepoint).ok_or_else(|| {
            fail(
                AmbiStatus::InvalidArgument,
                format!("{codepoint:#x} is not a scalar value"),
            )
        })?;
        let d = decompose_hangul(ch);
        match (d.onset, d.nucleus) {
            (Some(o), Some(n)) => {
                *onset = i32::from(o);
                *nucleus = i32::from(n);
                *coda = d.coda.map_or(-1, i32::from);
                Ok(())
            }
            _ => Err(fail(
                AmbiStatus::InvalidArgument,
                format!("{ch:?} is not a Hangul syllable"),
            )),
        }
    })
}
