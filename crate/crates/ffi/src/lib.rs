//! C ABI over absynth: manifest handles, scoring and generation.
//!
//! Every function returns an [`AbsStatus`]; on failure a message is available
//! from [`absynth_last_error`] on the same thread. Strings handed out by the
//! library must be released with [`absynth_string_free`], manifests with
//! [`absynth_manifest_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use absynth::eval::{self, LandmarkMatch, NumericScore, Prediction};
use absynth::gate::{feasibility_gate, Feasibility, GateConfig};
use absynth::instruct::sample_spec;
use absynth::keywords::KeywordLibrary;
use absynth::map::WalkParams;
use absynth::pipeline::{self, candidate_seed, PipelineError, RunConfig};
use absynth::record::{Manifest, ManifestError, Scenario};
use absynth::scene::render_svg;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbsStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    MissingFile = 4,
    Parse = 5,
    SchemaMismatch = 6,
    Rejected = 7,
    Io = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbsNumericScore {
    Correct = 0,
    Incorrect = 1,
    Unparsable = 2,
}

/// Opaque handle to a loaded or generated manifest.
pub struct AbsManifest {
    inner: Manifest,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(AbsStatus, String);

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let status = match &e {
            PipelineError::MissingFile(_) => AbsStatus::MissingFile,
            PipelineError::SchemaMismatch { .. } => AbsStatus::SchemaMismatch,
            PipelineError::Parse { .. } => AbsStatus::Parse,
            PipelineError::Io { .. } => AbsStatus::Io,
            PipelineError::Config(_) | PipelineError::Backend(_) => AbsStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).expect("interior nuls removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> AbsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AbsStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(&message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            AbsStatus::Panic
        }
    }
}

unsafe fn text<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(Failure(AbsStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| Failure(AbsStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn text_list<'a>(ptr: *const *const c_char, len: usize, what: &str) -> Result<Vec<&'a str>, Failure> {
    if ptr.is_null() && len > 0 {
        return Err(Failure(AbsStatus::NullArgument, format!("{what} is null")));
    }
    (0..len).map(|i| text(*ptr.add(i), what)).collect()
}

fn scenario(name: &str) -> Result<Scenario, Failure> {
    name.parse().map_err(|e: String| Failure(AbsStatus::InvalidArgument, e))
}

fn out_ptr<T>(ptr: *mut T) -> Result<*mut T, Failure> {
    if ptr.is_null() {
        Err(Failure(AbsStatus::NullArgument, "output pointer is null".into()))
    } else {
        Ok(ptr)
    }
}

fn owned(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("interior nuls removed").into_raw()
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn absynth_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be null or a string returned by this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn absynth_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a manifest file written by `absynth gen`.
///
/// # Safety
/// `path` must be a valid C string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn absynth_manifest_load(path: *const c_char, out: *mut *mut AbsManifest) -> AbsStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let inner = pipeline::load_manifest(Path::new(text(path, "path")?))?;
        *out = Box::into_raw(Box::new(AbsManifest { inner }));
        Ok(())
    })
}

/// Parses manifest JSON lines held in memory.
///
/// # Safety
/// `jsonl` must be a valid C string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn absynth_manifest_parse(jsonl: *const c_char, out: *mut *mut AbsManifest) -> AbsStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let inner = Manifest::from_jsonl(text(jsonl, "jsonl")?).map_err(|e| match e {
            ManifestError::SchemaMismatch { .. } => Failure(AbsStatus::SchemaMismatch, e.to_string()),
            other => Failure(AbsStatus::Parse, other.to_string()),
        })?;
        *out = Box::into_raw(Box::new(AbsManifest { inner }));
        Ok(())
    })
}

/// # Safety
/// `manifest` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn absynth_manifest_free(manifest: *mut AbsManifest) {
    if !manifest.is_null() {
        drop(Box::from_raw(manifest));
    }
}

/// Number of records; 0 for a null handle.
///
/// # Safety
/// `manifest` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn absynth_manifest_len(manifest: *const AbsManifest) -> usize {
    manifest.as_ref().map_or(0, |m| m.inner.records.len())
}

/// JSON for record `index`; free the result with [`absynth_string_free`].
///
/// # Safety
/// `manifest` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn absynth_manifest_record_json(manifest: *const AbsManifest, index: usize, out: *mut *mut c_char) -> AbsStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let m = manifest.as_ref().ok_or_else(|| Failure(AbsStatus::NullArgument, "manifest is null".into()))?;
        let r = m.inner.records.get(index).ok_or_else(|| Failure(AbsStatus::InvalidArgument, format!("index {index} out of range")))?;
        *out = owned(serde_json::to_string(r).expect("record serializes"));
        Ok(())
    })
}

/// Whole manifest as JSON lines; free the result with [`absynth_string_free`].
///
/// # Safety
/// `manifest` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn absynth_manifest_to_jsonl(manifest: *const AbsManifest, out: *mut *mut c_char) -> AbsStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let m = manifest.as_ref().ok_or_else(|| Failure(AbsStatus::NullArgument, "manifest is null".into()))?;
        *out = owned(m.inner.to_jsonl());
        Ok(())
    })
}

/// Generates `count` gated images of one scenario in memory.
///
/// # Safety
/// `scenario` must be a valid C string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn absynth_generate(scenario_name: *const c_char, count: usize, seed: u64, out: *mut *mut AbsManifest) -> AbsStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let sc = scenario(text(scenario_name, "scenario")?)?;
        let cfg = RunConfig { seed, jobs: 1, counts: [(sc, count)].into(), ..RunConfig::default() };
        let generated = pipeline::generate(&cfg)?;
        *out = Box::into_raw(Box::new(AbsManifest { inner: generated.manifest }));
        Ok(())
    })
}

/// SVG for candidate image `index` of a scenario, as `absynth gen` would
/// draw it for the same seed.
///
/// # Safety
/// `scenario` must be a valid C string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn absynth_render_svg(scenario_name: *const c_char, seed: u64, index: usize, out: *mut *mut c_char) -> AbsStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let sc = scenario(text(scenario_name, "scenario")?)?;
        let spec = sample_spec(sc, candidate_seed(seed, sc, index), &KeywordLibrary::builtin(), &WalkParams::default())
            .map_err(|e| Failure(AbsStatus::Rejected, e.to_string()))?;
        let scene = match feasibility_gate(&spec, &GateConfig::default()) {
            Feasibility::Accepted(f) => f.scene,
            Feasibility::Rejected { rejection, .. } => return Err(Failure(AbsStatus::Rejected, rejection.reason)),
        };
        let svg = render_svg(&scene).map_err(|e| Failure(AbsStatus::Rejected, e.to_string()))?;
        *out = owned(String::from_utf8(svg).expect("svg is UTF-8"));
        Ok(())
    })
}

/// Scores a free-text numeric answer against gold values, with the 5%
/// tolerance when `tolerant` is true.
///
/// # Safety
/// `pred` and each of the `gold_len` strings in `gold` must be valid C strings.
#[no_mangle]
pub unsafe extern "C" fn absynth_score_numeric(
    pred: *const c_char,
    gold: *const *const c_char,
    gold_len: usize,
    tolerant: bool,
    out: *mut AbsNumericScore,
) -> AbsStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let gold = text_list(gold, gold_len, "gold")?;
        *out = match eval::score_numeric(text(pred, "pred")?, &gold, tolerant) {
            NumericScore::Correct => AbsNumericScore::Correct,
            NumericScore::Incorrect => AbsNumericScore::Incorrect,
            NumericScore::Unparsable => AbsNumericScore::Unparsable,
        };
        Ok(())
    })
}

/// # Safety
/// As [`absynth_score_numeric`].
#[no_mangle]
pub unsafe extern "C" fn absynth_score_phrase(
    pred: *const c_char,
    gold: *const *const c_char,
    gold_len: usize,
    out: *mut bool,
) -> AbsStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let gold = text_list(gold, gold_len, "gold")?;
        *out = eval::score_phrase(text(pred, "pred")?, &gold);
        Ok(())
    })
}

/// Rouge-L F1 between two sentences.
///
/// # Safety
/// `pred` and `gold` must be valid C strings; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn absynth_score_sentence(pred: *const c_char, gold: *const c_char, out: *mut f64) -> AbsStatus {
    guard(|| {
        let out = out_ptr(out)?;
        *out = eval::score_sentence(text(pred, "pred")?, text(gold, "gold")?);
        Ok(())
    })
}

/// Landmark coverage rate of a free-text route against the gold sequence.
///
/// # Safety
/// As [`absynth_score_numeric`].
#[no_mangle]
pub unsafe extern "C" fn absynth_score_landmarks(
    pred: *const c_char,
    gold: *const *const c_char,
    gold_len: usize,
    greedy: bool,
    out: *mut f64,
) -> AbsStatus {
    guard(|| {
        let out = out_ptr(out)?;
        if gold_len == 0 {
            return Err(Failure(AbsStatus::InvalidArgument, "gold sequence is empty".into()));
        }
        let gold: Vec<String> = text_list(gold, gold_len, "gold")?.into_iter().map(String::from).collect();
        let mode = if greedy { LandmarkMatch::Greedy } else { LandmarkMatch::Lcs };
        *out = eval::score_landmarks(text(pred, "pred")?, &gold, mode);
        Ok(())
    })
}

/// Scores prediction JSON lines (`{"id", "raw_response"}`) against a
/// manifest and returns the report as JSON.
///
/// # Safety
/// `manifest` must be a live handle, `predictions_jsonl` a valid C string and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn absynth_evaluate(
    manifest: *const AbsManifest,
    predictions_jsonl: *const c_char,
    out: *mut *mut c_char,
) -> AbsStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let m = manifest.as_ref().ok_or_else(|| Failure(AbsStatus::NullArgument, "manifest is null".into()))?;
        let preds: Vec<Prediction> = text(predictions_jsonl, "predictions")?
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<_, _>>()
            .map_err(|e| Failure(AbsStatus::Parse, e.to_string()))?;
        let report = eval::aggregate(&m.inner, &preds, LandmarkMatch::Lcs);
        *out = owned(serde_json::to_string(&report).expect("report serializes"));
        Ok(())
    })
}
