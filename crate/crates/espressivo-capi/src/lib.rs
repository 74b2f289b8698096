//! C ABI for the expressive-performance rendering pipeline.
//!
//! Handles are opaque pointers created and destroyed by these functions;
//! every fallible call returns an [`EsprStatus`] and leaves a
//! human-readable message retrievable through [`espr_last_error`] on
//! failure. Strings and byte buffers returned by the library must be
//! released with [`espr_string_free`] / [`espr_bytes_free`]; handles with
//! their matching `*_free` function. All functions may be called from any
//! thread; the error message is thread-local.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::ptr;

use espressivo::expression::{classify, fit_expression_model, normalize_recording};
use espressivo::features::{extract_piece_features, load_features, save_features};
use espressivo::manifest::load_corpus;
use espressivo::score::Score;
use espressivo::synth::DenormTable;
use espressivo::{AudioBuffer, Error, ExpressionModel};

/// Status code returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EsprStatus {
    /// Success.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Input bytes or text failed to parse.
    Parse = 3,
    /// A file could not be read.
    Io = 4,
    /// The requested expressive term is not in the model.
    UnknownTerm = 5,
    /// Inputs were structurally valid but unusable (bad lengths, ranges).
    InvalidArgument = 6,
}

/// Opaque parsed score.
pub struct EsprScore(Score);

/// Opaque fitted expression model.
pub struct EsprModel(ExpressionModel);

/// Opaque mono 16 kHz audio buffer.
pub struct EsprAudio(AudioBuffer);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let message = CString::new(message).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
}

fn fail(err: &Error) -> EsprStatus {
    set_error(err.to_string());
    match err {
        Error::Midi(_) | Error::MusicXml(_) | Error::Wav(_) | Error::Score(_) => EsprStatus::Parse,
        Error::Manifest(_) => EsprStatus::Io,
        Error::UnknownEmt { .. } => EsprStatus::UnknownTerm,
        Error::Model(_) | Error::Feature(_) | Error::Synth(_) | Error::Timing(_) => {
            EsprStatus::InvalidArgument
        }
    }
}

fn null_argument(name: &str) -> EsprStatus {
    set_error(format!("argument `{name}` is null"));
    EsprStatus::NullArgument
}

/// Borrow a UTF-8 C string argument.
unsafe fn utf8_arg<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, EsprStatus> {
    if ptr.is_null() {
        return Err(null_argument(name));
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error(format!("argument `{name}` is not valid UTF-8"));
        EsprStatus::InvalidUtf8
    })
}

unsafe fn byte_arg<'a>(ptr: *const u8, len: usize, name: &str) -> Result<&'a [u8], EsprStatus> {
    if ptr.is_null() {
        return Err(null_argument(name));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

fn string_out(text: String) -> *mut c_char {
    match CString::new(text) {
        Ok(s) => s.into_raw(),
        Err(_) => {
            set_error("output contained an interior NUL byte".into());
            ptr::null_mut()
        }
    }
}

unsafe fn bytes_out(bytes: Vec<u8>, out_ptr: *mut *mut u8, out_len: *mut usize) -> EsprStatus {
    if out_ptr.is_null() || out_len.is_null() {
        return null_argument("out");
    }
    let boxed = bytes.into_boxed_slice();
    *out_len = boxed.len();
    *out_ptr = Box::into_raw(boxed) as *mut u8;
    EsprStatus::Ok
}

/// Library version as a static string; never freed by the caller.
#[no_mangle]
pub extern "C" fn espr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message describing the most recent failure on this thread, or null if
/// none. The pointer stays valid until the next failing call on the same
/// thread; do not free it.
#[no_mangle]
pub extern "C" fn espr_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map(|s| s.as_ptr())
            .unwrap_or(ptr::null())
    })
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must be a pointer previously returned by one of the `*_json`,
/// `*_name` or similar string-returning functions here, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn espr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Release a byte buffer returned by this library.
///
/// # Safety
/// `(ptr, len)` must be exactly the pair produced by a byte-returning
/// function here, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn espr_bytes_free(ptr: *mut u8, len: usize) {
    if !ptr.is_null() {
        drop(Box::from_raw(std::ptr::slice_from_raw_parts_mut(ptr, len)));
    }
}

/// Parse a Standard MIDI File into a score handle.
///
/// # Safety
/// `bytes` must point to `len` readable bytes; `out_score` must be a valid
/// destination pointer.
#[no_mangle]
pub unsafe extern "C" fn espr_score_parse_midi(
    bytes: *const u8,
    len: usize,
    out_score: *mut *mut EsprScore,
) -> EsprStatus {
    if out_score.is_null() {
        return null_argument("out_score");
    }
    let data = match byte_arg(bytes, len, "bytes") {
        Ok(d) => d,
        Err(status) => return status,
    };
    match espressivo::parse_midi(data) {
        Ok(score) => {
            *out_score = Box::into_raw(Box::new(EsprScore(score)));
            EsprStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Parse a MusicXML document into a score handle.
///
/// # Safety
/// `text` must be a valid NUL-terminated string; `out_score` must be a
/// valid destination pointer.
#[no_mangle]
pub unsafe extern "C" fn espr_score_parse_musicxml(
    text: *const c_char,
    out_score: *mut *mut EsprScore,
) -> EsprStatus {
    if out_score.is_null() {
        return null_argument("out_score");
    }
    let text = match utf8_arg(text, "text") {
        Ok(t) => t,
        Err(status) => return status,
    };
    match espressivo::parse_musicxml(text) {
        Ok(score) => {
            *out_score = Box::into_raw(Box::new(EsprScore(score)));
            EsprStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Parse the canonical JSON score document into a score handle.
///
/// # Safety
/// `text` must be a valid NUL-terminated string; `out_score` must be a
/// valid destination pointer.
#[no_mangle]
pub unsafe extern "C" fn espr_score_from_json(
    text: *const c_char,
    out_score: *mut *mut EsprScore,
) -> EsprStatus {
    if out_score.is_null() {
        return null_argument("out_score");
    }
    let text = match utf8_arg(text, "text") {
        Ok(t) => t,
        Err(status) => return status,
    };
    match Score::from_canonical_json(text) {
        Ok(score) => {
            *out_score = Box::into_raw(Box::new(EsprScore(score)));
            EsprStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Serialize a score as its canonical JSON document. Returns null on
/// error; free the result with `espr_string_free`.
///
/// # Safety
/// `score` must be a live score handle.
#[no_mangle]
pub unsafe extern "C" fn espr_score_to_json(score: *const EsprScore) -> *mut c_char {
    if score.is_null() {
        null_argument("score");
        return ptr::null_mut();
    }
    string_out((*score).0.to_canonical_json())
}

/// Serialize a score as a format-0 Standard MIDI File.
///
/// # Safety
/// `score` must be a live score handle; `out_bytes`/`out_len` must be
/// valid destination pointers. Free the buffer with `espr_bytes_free`.
#[no_mangle]
pub unsafe extern "C" fn espr_score_to_midi(
    score: *const EsprScore,
    out_bytes: *mut *mut u8,
    out_len: *mut usize,
) -> EsprStatus {
    if score.is_null() {
        return null_argument("score");
    }
    bytes_out(espressivo::write_midi(&(*score).0), out_bytes, out_len)
}

/// Number of notes in a score; 0 for a null handle.
///
/// # Safety
/// `score` must be null or a live score handle.
#[no_mangle]
pub unsafe extern "C" fn espr_score_note_count(score: *const EsprScore) -> usize {
    if score.is_null() {
        0
    } else {
        (*score).0.len()
    }
}

/// Release a score handle.
///
/// # Safety
/// `score` must be null or a live score handle, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn espr_score_free(score: *mut EsprScore) {
    if !score.is_null() {
        drop(Box::from_raw(score));
    }
}

/// Load an expression model from its JSON document bytes.
///
/// # Safety
/// `bytes` must point to `len` readable bytes; `out_model` must be a valid
/// destination pointer.
#[no_mangle]
pub unsafe extern "C" fn espr_model_load(
    bytes: *const u8,
    len: usize,
    out_model: *mut *mut EsprModel,
) -> EsprStatus {
    if out_model.is_null() {
        return null_argument("out_model");
    }
    let data = match byte_arg(bytes, len, "bytes") {
        Ok(d) => d,
        Err(status) => return status,
    };
    match espressivo::load_model(data) {
        Ok(model) => {
            *out_model = Box::into_raw(Box::new(EsprModel(model)));
            EsprStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Serialize a model as its JSON document.
///
/// # Safety
/// `model` must be a live model handle; `out_bytes`/`out_len` must be
/// valid destination pointers. Free the buffer with `espr_bytes_free`.
#[no_mangle]
pub unsafe extern "C" fn espr_model_save(
    model: *const EsprModel,
    out_bytes: *mut *mut u8,
    out_len: *mut usize,
) -> EsprStatus {
    if model.is_null() {
        return null_argument("model");
    }
    bytes_out(espressivo::save_model(&(*model).0), out_bytes, out_len)
}

/// Fit a model from a corpus manifest on disk (entry paths resolve
/// against the manifest's directory).
///
/// # Safety
/// `manifest_path` must be a valid NUL-terminated path string;
/// `out_model` must be a valid destination pointer.
#[no_mangle]
pub unsafe extern "C" fn espr_model_fit_manifest(
    manifest_path: *const c_char,
    out_model: *mut *mut EsprModel,
) -> EsprStatus {
    if out_model.is_null() {
        return null_argument("out_model");
    }
    let path = match utf8_arg(manifest_path, "manifest_path") {
        Ok(p) => p,
        Err(status) => return status,
    };
    let fitted = load_corpus(Path::new(path))
        .and_then(|corpus| fit_expression_model(&corpus, DenormTable::default()));
    match fitted {
        Ok(model) => {
            *out_model = Box::into_raw(Box::new(EsprModel(model)));
            EsprStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Number of expressive terms in a model; 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live model handle.
#[no_mangle]
pub unsafe extern "C" fn espr_model_emt_count(model: *const EsprModel) -> usize {
    if model.is_null() {
        0
    } else {
        (*model).0.emts.len()
    }
}

/// Name of the expressive term at `index` (lexical order), or null when
/// out of range. Free with `espr_string_free`.
///
/// # Safety
/// `model` must be a live model handle.
#[no_mangle]
pub unsafe extern "C" fn espr_model_emt_name(model: *const EsprModel, index: usize) -> *mut c_char {
    if model.is_null() {
        null_argument("model");
        return ptr::null_mut();
    }
    match (*model).0.emts.keys().nth(index) {
        Some(name) => string_out(name.clone()),
        None => {
            set_error(format!("term index {index} out of range"));
            ptr::null_mut()
        }
    }
}

/// Release a model handle.
///
/// # Safety
/// `model` must be null or a live model handle, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn espr_model_free(model: *mut EsprModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Render a score under an expressive term. The seed fully determines the
/// output. `out_modified_score` and `out_params_json` may be null when the
/// rewritten score or the sampled controls are not wanted; the params JSON
/// carries the timing plan and the per-note controls.
///
/// # Safety
/// `score` and `model` must be live handles, `emt` a valid NUL-terminated
/// string, `out_audio` a valid destination pointer, and the two optional
/// outputs null or valid destination pointers.
#[no_mangle]
pub unsafe extern "C" fn espr_render(
    score: *const EsprScore,
    model: *const EsprModel,
    emt: *const c_char,
    seed: u64,
    out_audio: *mut *mut EsprAudio,
    out_modified_score: *mut *mut EsprScore,
    out_params_json: *mut *mut c_char,
) -> EsprStatus {
    if score.is_null() {
        return null_argument("score");
    }
    if model.is_null() {
        return null_argument("model");
    }
    if out_audio.is_null() {
        return null_argument("out_audio");
    }
    let emt = match utf8_arg(emt, "emt") {
        Ok(e) => e,
        Err(status) => return status,
    };

    match espressivo::render_performance(&(*score).0, &(*model).0, emt, seed) {
        Ok(rendered) => {
            if !out_params_json.is_null() {
                let doc = serde_json::json!({
                    "version": 1,
                    "emt": emt,
                    "seed": seed,
                    "timing": rendered.plan,
                    "params": rendered.params,
                });
                *out_params_json = string_out(doc.to_string());
            }
            if !out_modified_score.is_null() {
                *out_modified_score = Box::into_raw(Box::new(EsprScore(rendered.score)));
            }
            *out_audio = Box::into_raw(Box::new(EsprAudio(rendered.audio)));
            EsprStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Number of samples in a buffer; 0 for a null handle.
///
/// # Safety
/// `audio` must be null or a live audio handle.
#[no_mangle]
pub unsafe extern "C" fn espr_audio_len(audio: *const EsprAudio) -> usize {
    if audio.is_null() {
        0
    } else {
        (*audio).0.samples().len()
    }
}

/// Sample rate in Hz; 0 for a null handle.
///
/// # Safety
/// `audio` must be null or a live audio handle.
#[no_mangle]
pub unsafe extern "C" fn espr_audio_sample_rate(audio: *const EsprAudio) -> u32 {
    if audio.is_null() {
        0
    } else {
        (*audio).0.sample_rate()
    }
}

/// Borrowed view of the samples in [-1, 1]; valid while the handle lives.
///
/// # Safety
/// `audio` must be a live audio handle; the pointer must not outlive it.
#[no_mangle]
pub unsafe extern "C" fn espr_audio_samples(audio: *const EsprAudio) -> *const f64 {
    if audio.is_null() {
        null_argument("audio");
        return ptr::null();
    }
    (*audio).0.samples().as_ptr()
}

/// Encode a buffer as a 16-bit mono RIFF/WAVE file.
///
/// # Safety
/// `audio` must be a live audio handle; `out_bytes`/`out_len` must be
/// valid destination pointers. Free the buffer with `espr_bytes_free`.
#[no_mangle]
pub unsafe extern "C" fn espr_audio_to_wav(
    audio: *const EsprAudio,
    out_bytes: *mut *mut u8,
    out_len: *mut usize,
) -> EsprStatus {
    if audio.is_null() {
        return null_argument("audio");
    }
    bytes_out(espressivo::write_wav(&(*audio).0), out_bytes, out_len)
}

/// Decode a RIFF/WAVE file (PCM 16-bit mono; other rates are resampled).
///
/// # Safety
/// `bytes` must point to `len` readable bytes; `out_audio` must be a
/// valid destination pointer.
#[no_mangle]
pub unsafe extern "C" fn espr_audio_from_wav(
    bytes: *const u8,
    len: usize,
    out_audio: *mut *mut EsprAudio,
) -> EsprStatus {
    if out_audio.is_null() {
        return null_argument("out_audio");
    }
    let data = match byte_arg(bytes, len, "bytes") {
        Ok(d) => d,
        Err(status) => return status,
    };
    match espressivo::read_wav(data) {
        Ok(audio) => {
            *out_audio = Box::into_raw(Box::new(EsprAudio(audio)));
            EsprStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Release an audio handle.
///
/// # Safety
/// `audio` must be null or a live audio handle, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn espr_audio_free(audio: *mut EsprAudio) {
    if !audio.is_null() {
        drop(Box::from_raw(audio));
    }
}

/// Extract the feature document (versioned JSON) for a score-aligned
/// buffer. Returns null on error; free with `espr_string_free`.
///
/// # Safety
/// `score` and `audio` must be live handles.
#[no_mangle]
pub unsafe extern "C" fn espr_extract_features_json(
    score: *const EsprScore,
    audio: *const EsprAudio,
) -> *mut c_char {
    if score.is_null() {
        null_argument("score");
        return ptr::null_mut();
    }
    if audio.is_null() {
        null_argument("audio");
        return ptr::null_mut();
    }
    match extract_piece_features(&(*score).0, &(*audio).0) {
        Ok(features) => string_out(save_features(&features)),
        Err(e) => {
            fail(&e);
            ptr::null_mut()
        }
    }
}

/// Rank the model's expressive terms for a feature document. The
/// recording is min-max normalized before scoring. Returns a JSON array
/// of `{"emt", "log_likelihood"}` objects, best first, or null on error;
/// free with `espr_string_free`.
///
/// # Safety
/// `features_json` must be a valid NUL-terminated string and `model` a
/// live model handle.
#[no_mangle]
pub unsafe extern "C" fn espr_classify_json(
    features_json: *const c_char,
    model: *const EsprModel,
) -> *mut c_char {
    if model.is_null() {
        null_argument("model");
        return ptr::null_mut();
    }
    let text = match utf8_arg(features_json, "features_json") {
        Ok(t) => t,
        Err(_) => return ptr::null_mut(),
    };
    let features = match load_features(text) {
        Ok(f) => f,
        Err(e) => {
            fail(&e);
            return ptr::null_mut();
        }
    };
    let ranked = classify(&normalize_recording(&features), &(*model).0);
    let rows: Vec<serde_json::Value> = ranked
        .into_iter()
        .map(|(emt, ll)| serde_json::json!({"emt": emt, "log_likelihood": ll}))
        .collect();
    string_out(serde_json::Value::Array(rows).to_string())
}
