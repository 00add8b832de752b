//! C ABI for loading checkpoints and generating text.
//!
//! Every fallible call returns an [`LtStatus`]; on failure a message is
//! available from [`lt_last_error`] on the same thread. Strings returned
//! through out-pointers are owned by the caller and released with
//! [`lt_string_free`]. No function unwinds across the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use lexitutor::corpus::{clean_and_tokenize, Level};
use lexitutor::generation::{generate, GenerationRequest, Strategy, DEFAULT_NUM_WORDS};
use lexitutor::model::{load_checkpoint, LanguageModel};
use lexitutor::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LtStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    NotFound = 3,
    InvalidLevel = 4,
    InvalidConfig = 5,
    EmptySeed = 6,
    FormatError = 7,
    CorruptCheckpoint = 8,
    IoError = 9,
    ShapeError = 10,
    BufferTooSmall = 11,
    Internal = 12,
}

impl From<&Error> for LtStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::NotFound(_) => LtStatus::NotFound,
            Error::InvalidLevel(_) => LtStatus::InvalidLevel,
            Error::InvalidConfig(_) => LtStatus::InvalidConfig,
            Error::EmptySeed => LtStatus::EmptySeed,
            Error::Format(_) => LtStatus::FormatError,
            Error::CorruptCheckpoint(_) => LtStatus::CorruptCheckpoint,
            Error::Io(_) => LtStatus::IoError,
            Error::Index { .. } | Error::Shape(_) => LtStatus::ShapeError,
            _ => LtStatus::Internal,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LtStrategy {
    Greedy = 0,
    Sample = 1,
}

/// Options for [`lt_generate`]. Start from [`lt_generate_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LtGenerateOptions {
    pub num_words: u32,
    /// One of the `LtStrategy` values.
    pub strategy: u32,
    /// Sampling temperature, > 0.
    pub temperature: f64,
    /// When false, sampling seeds from OS entropy.
    pub has_rng_seed: bool,
    pub rng_seed: u64,
}

/// A loaded, immutable model. Safe to share between threads for reading.
pub struct LtModel {
    model: LanguageModel,
    model_id: String,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(CString::new(msg).expect("nul bytes removed")));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(LtStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(LtStatus::from(&e), format!("{}: {e}", e.code()))
    }
}

fn null(what: &str) -> Failure {
    Failure(LtStatus::NullArgument, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LtStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LtStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            LtStatus::Internal
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(LtStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(LtStatus::Internal, "string contains a nul byte".into()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn lt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Loads a checkpoint. On success `*out` owns a model to be released with
/// [`lt_model_free`].
///
/// # Safety
/// `path` must be NULL or a NUL-terminated string; `out` must be NULL or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn lt_model_load(path: *const c_char, out: *mut *mut LtModel) -> LtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let path = Path::new(read_str(path, "path")?);
        let model = load_checkpoint(path)?;
        let model_id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        *out = Box::into_raw(Box::new(LtModel { model, model_id }));
        Ok(())
    })
}

/// Releases a model. NULL is ignored.
///
/// # Safety
/// `model` must come from [`lt_model_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lt_model_free(model: *mut LtModel) {
    if !model.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(model))));
    }
}

/// Trainable parameter count, or 0 for NULL.
///
/// # Safety
/// `model` must be NULL or a live model.
#[no_mangle]
pub unsafe extern "C" fn lt_model_parameter_count(model: *const LtModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.parameter_count())
}

/// Vocabulary size including the reserved entries, or 0 for NULL.
///
/// # Safety
/// `model` must be NULL or a live model.
#[no_mangle]
pub unsafe extern "C" fn lt_model_vocab_size(model: *const LtModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.config().vocab_size)
}

/// Context window length, or 0 for NULL.
///
/// # Safety
/// `model` must be NULL or a live model.
#[no_mangle]
pub unsafe extern "C" fn lt_model_window(model: *const LtModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.window())
}

/// Level name recorded in the checkpoint as a static string, or NULL.
///
/// # Safety
/// `model` must be NULL or a live model.
#[no_mangle]
pub unsafe extern "C" fn lt_model_level(model: *const LtModel) -> *const c_char {
    let level = model.as_ref().and_then(|m| m.model.level());
    match level {
        Some(Level::Elemental) => c"elemental".as_ptr(),
        Some(Level::PreIntermediate) => c"pre_intermediate".as_ptr(),
        Some(Level::UpperIntermediate) => c"upper_intermediate".as_ptr(),
        None => ptr::null(),
    }
}

/// Five greedy words, temperature 1, no fixed seed.
#[no_mangle]
pub extern "C" fn lt_generate_options_default() -> LtGenerateOptions {
    LtGenerateOptions {
        num_words: DEFAULT_NUM_WORDS as u32,
        strategy: LtStrategy::Greedy as u32,
        temperature: 1.0,
        has_rng_seed: false,
        rng_seed: 0,
    }
}

/// Continues `seed_text`. `*out_words` receives the generated words joined by
/// single spaces; `out_full_text`, if not NULL, receives the cleaned seed
/// followed by the words. `options` may be NULL for the defaults.
///
/// # Safety
/// Pointers must be NULL or valid; `model` must be live.
#[no_mangle]
pub unsafe extern "C" fn lt_generate(
    model: *const LtModel,
    seed_text: *const c_char,
    options: *const LtGenerateOptions,
    out_words: *mut *mut c_char,
    out_full_text: *mut *mut c_char,
) -> LtStatus {
    guard(|| {
        if out_words.is_null() {
            return Err(null("out_words"));
        }
        *out_words = ptr::null_mut();
        if !out_full_text.is_null() {
            *out_full_text = ptr::null_mut();
        }
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let seed = read_str(seed_text, "seed_text")?;
        let opts = options.as_ref().copied().unwrap_or_else(|| lt_generate_options_default());
        let request = GenerationRequest {
            seed_text: seed.to_owned(),
            level: m.model.level().unwrap_or(Level::Elemental),
            num_words: opts.num_words as usize,
            strategy: match opts.strategy {
                0 => Strategy::Greedy,
                1 => Strategy::Sample,
                other => {
                    return Err(Failure(LtStatus::InvalidConfig, format!("unknown strategy {other}")));
                }
            },
            temperature: opts.temperature,
            rng_seed: opts.has_rng_seed.then_some(opts.rng_seed),
        };
        let r = generate(&m.model, &m.model_id, &request)?;
        let words = into_c_string(r.generated_words.join(" "))?;
        if !out_full_text.is_null() {
            match into_c_string(r.full_text) {
                Ok(full) => *out_full_text = full,
                Err(e) => {
                    drop(CString::from_raw(words));
                    return Err(e);
                }
            }
        }
        *out_words = words;
        Ok(())
    })
}

/// Writes the next-word distribution for `context` (exactly `window` ids)
/// into `out_probs`, which must hold at least `vocab_size` floats.
///
/// # Safety
/// `context` must point to `context_len` ids and `out_probs` to `out_len`
/// writable floats.
#[no_mangle]
pub unsafe extern "C" fn lt_predict_next(
    model: *const LtModel,
    context: *const usize,
    context_len: usize,
    out_probs: *mut f32,
    out_len: usize,
) -> LtStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        if context.is_null() && context_len > 0 {
            return Err(null("context"));
        }
        if out_probs.is_null() {
            return Err(null("out_probs"));
        }
        let v = m.model.config().vocab_size;
        if out_len < v {
            return Err(Failure(
                LtStatus::BufferTooSmall,
                format!("out_probs holds {out_len} floats, vocabulary has {v}"),
            ));
        }
        let ids: &[usize] = if context_len == 0 { &[] } else { std::slice::from_raw_parts(context, context_len) };
        let probs = m.model.predict_next_distribution(ids)?;
        std::slice::from_raw_parts_mut(out_probs, v).copy_from_slice(probs.data());
        Ok(())
    })
}

/// Id of `word` in the model vocabulary, or the oov id (1).
///
/// # Safety
/// `model` and `word` must be NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn lt_model_word_id(model: *const LtModel, word: *const c_char, out_id: *mut usize) -> LtStatus {
    guard(|| {
        if out_id.is_null() {
            return Err(null("out_id"));
        }
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let w = read_str(word, "word")?;
        *out_id = m.model.vocab().id(w).unwrap_or(lexitutor::corpus::OOV_ID);
        Ok(())
    })
}

/// Lowercases, strips punctuation and normalizes whitespace, as applied to
/// corpus lines and seed texts.
///
/// # Safety
/// `text` must be NULL or NUL-terminated; `out` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn lt_clean_text(text: *const c_char, out: *mut *mut c_char) -> LtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let t = read_str(text, "text")?;
        *out = into_c_string(clean_and_tokenize(t).join(" "))?;
        Ok(())
    })
}

/// Frees a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn lt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
