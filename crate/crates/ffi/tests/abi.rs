use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use absynth_ffi::*;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = absynth_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn take(p: *mut c_char) -> String {
    let s = CStr::from_ptr(p).to_string_lossy().into_owned();
    absynth_string_free(p);
    s
}

#[test]
fn numeric_boundary_through_the_abi() {
    let gold = cstr("100");
    let golds = [gold.as_ptr()];
    for (pred, expected) in
        [("105", AbsNumericScore::Correct), ("105.01", AbsNumericScore::Incorrect), ("none", AbsNumericScore::Unparsable)]
    {
        let p = cstr(pred);
        let mut out = AbsNumericScore::Incorrect;
        let status = unsafe { absynth_score_numeric(p.as_ptr(), golds.as_ptr(), 1, true, &mut out) };
        assert_eq!(status, AbsStatus::Ok);
        assert_eq!(out, expected, "{pred}");
    }
}

#[test]
fn sentence_and_landmarks() {
    let (a, b) = (cstr("the cat sat"), cstr("the cat ran"));
    let mut f = 0.0;
    assert_eq!(unsafe { absynth_score_sentence(b.as_ptr(), a.as_ptr(), &mut f) }, AbsStatus::Ok);
    assert!((f - 2.0 / 3.0).abs() < 1e-12);

    let names: Vec<CString> = ["Oak Street", "Pine Road", "Elm Way", "Birch Lane"].map(cstr).into();
    let ptrs: Vec<*const c_char> = names.iter().map(|n| n.as_ptr()).collect();
    let pred = cstr("Start at Oak Street, turn at Elm Way and stop at Birch Lane.");
    let mut lcr = 0.0;
    assert_eq!(unsafe { absynth_score_landmarks(pred.as_ptr(), ptrs.as_ptr(), 4, false, &mut lcr) }, AbsStatus::Ok);
    assert_eq!(lcr, 0.75);
    assert_eq!(unsafe { absynth_score_landmarks(pred.as_ptr(), ptr::null(), 0, false, &mut lcr) }, AbsStatus::InvalidArgument);
}

#[test]
fn error_codes_and_messages() {
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { absynth_manifest_load(ptr::null(), &mut out) }, AbsStatus::NullArgument);
    let missing = cstr("/definitely/not/here.jsonl");
    assert_eq!(unsafe { absynth_manifest_load(missing.as_ptr(), &mut out) }, AbsStatus::MissingFile);
    assert!(last_error().contains("not/here"));
    let old = cstr("{\"schema_version\":7,\"landmark_convention\":\"x\",\"stats\":{}}\n");
    assert_eq!(unsafe { absynth_manifest_parse(old.as_ptr(), &mut out) }, AbsStatus::SchemaMismatch);
    let bad = cstr("kitchen");
    assert_eq!(unsafe { absynth_generate(bad.as_ptr(), 1, 0, &mut out) }, AbsStatus::InvalidArgument);
    assert!(out.is_null());
    let bytes = [0xffu8, 0];
    let mut f = 0.0;
    assert_eq!(unsafe { absynth_score_sentence(bytes.as_ptr().cast(), bytes.as_ptr().cast(), &mut f) }, AbsStatus::InvalidUtf8);
    assert_eq!(unsafe { absynth_manifest_len(ptr::null()) }, 0);
}

#[test]
fn generate_round_trip_and_evaluate() {
    let sc = cstr("dashboard");
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { absynth_generate(sc.as_ptr(), 3, 11, &mut m) }, AbsStatus::Ok);
    let n = unsafe { absynth_manifest_len(m) };
    assert!(n >= 3);

    let mut jsonl = ptr::null_mut();
    assert_eq!(unsafe { absynth_manifest_to_jsonl(m, &mut jsonl) }, AbsStatus::Ok);
    let text = cstr(&unsafe { take(jsonl) });
    let mut again = ptr::null_mut();
    assert_eq!(unsafe { absynth_manifest_parse(text.as_ptr(), &mut again) }, AbsStatus::Ok);
    assert_eq!(unsafe { absynth_manifest_len(again) }, n);

    let mut preds = String::new();
    for i in 0..n {
        let mut rec = ptr::null_mut();
        assert_eq!(unsafe { absynth_manifest_record_json(m, i, &mut rec) }, AbsStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(&unsafe { take(rec) }).unwrap();
        preds.push_str(&serde_json::json!({"id": v["id"], "raw_response": v["answer"]}).to_string());
        preds.push('\n');
    }
    let mut rec = ptr::null_mut();
    assert_eq!(unsafe { absynth_manifest_record_json(m, n, &mut rec) }, AbsStatus::InvalidArgument);

    let preds = cstr(&preds);
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { absynth_evaluate(m, preds.as_ptr(), &mut report) }, AbsStatus::Ok);
    let report: serde_json::Value = serde_json::from_str(&unsafe { take(report) }).unwrap();
    assert_eq!(report["missing"], 0);
    assert_eq!(report["per_scenario"]["dashboard"]["accuracy"], 100.0);
    unsafe {
        absynth_manifest_free(m);
        absynth_manifest_free(again);
    }
}

#[test]
fn render_is_deterministic_svg() {
    let sc = cstr("planar_layout");
    let mut a = ptr::null_mut();
    let mut b = ptr::null_mut();
    assert_eq!(unsafe { absynth_render_svg(sc.as_ptr(), 5, 2, &mut a) }, AbsStatus::Ok);
    assert_eq!(unsafe { absynth_render_svg(sc.as_ptr(), 5, 2, &mut b) }, AbsStatus::Ok);
    let (a, b) = unsafe { (take(a), take(b)) };
    assert_eq!(a, b);
    assert!(a.starts_with("<svg") || a.starts_with("<?xml"));
}

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/absynth.h")
}

#[test]
fn header_declares_every_export() {
    let h = std::fs::read_to_string(header()).unwrap();
    for name in [
        "absynth_last_error",
        "absynth_string_free",
        "absynth_manifest_load",
        "absynth_manifest_parse",
        "absynth_manifest_free",
        "absynth_manifest_len",
        "absynth_manifest_record_json",
        "absynth_manifest_to_jsonl",
        "absynth_generate",
        "absynth_render_svg",
        "absynth_score_numeric",
        "absynth_score_phrase",
        "absynth_score_sentence",
        "absynth_score_landmarks",
        "absynth_evaluate",
        "typedef struct AbsManifest AbsManifest",
        "ABS_STATUS_SCHEMA_MISMATCH = 6",
    ] {
        assert!(h.contains(name), "{name} missing from header");
    }
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "absynth.h"

int main(void) {
    const char *gold[] = {"100"};
    AbsNumericScore s;
    if (absynth_score_numeric("about 105", gold, 1, true, &s) != ABS_STATUS_OK || s != ABS_NUMERIC_SCORE_CORRECT) return 1;
    AbsManifest *m = NULL;
    if (absynth_manifest_load("/no/such/file", &m) != ABS_STATUS_MISSING_FILE) return 2;
    if (strstr(absynth_last_error(), "no/such") == NULL) return 3;
    if (absynth_generate("flowchart", 2, 4, &m) != ABS_STATUS_OK) return 4;
    size_t n = absynth_manifest_len(m);
    absynth_manifest_free(m);
    printf("%zu\n", n);
    return n >= 2 ? 0 : 5;
}
"#;

/// Builds a C client against the header and static library when a C compiler
/// is available.
#[test]
fn c_client_links_against_staticlib() {
    let exe = std::env::current_exe().unwrap();
    let target_dir = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    let lib = target_dir.join("libabsynth_ffi.a");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if !lib.exists() || Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or {} not built", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("client.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let bin = dir.path().join("client");
    let status = Command::new(&cc)
        .arg(&src)
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C client failed to build");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "C client exited with {:?}", out.status);
}
