mod common;

use common::*;

#[test]
fn dry_run_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = absynth(&["--dry-run", "gen", "--scenario", "map", "--count", "3", "--out", out.to_str().unwrap()]);
    ok(&o).unwrap();
    assert!(String::from_utf8_lossy(&o.stdout).contains("road_map: 3 images"));
    assert!(!out.exists());
}

#[test]
fn gen_counts_and_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    ok(&absynth(&["gen", "--scenario", "map", "--scenario", "puzzle", "--count", "4", "--seed", "7", "--out", d])).unwrap();
    let manifest = absynth::pipeline::load_manifest(&dir.path().join("manifest.jsonl")).unwrap();
    manifest.check().unwrap();
    let images: std::collections::BTreeSet<_> = manifest.records.iter().map(|r| r.image_ref.clone()).collect();
    assert_eq!(images.len(), 8);
    assert!(images.iter().all(|i| dir.path().join(i).is_file()));

    let m = dir.path().join("manifest.jsonl");
    ok(&absynth(&["gallery", "--manifest", m.to_str().unwrap()])).unwrap();
    let html = std::fs::read_to_string(dir.path().join("index.html")).unwrap();
    for i in &images {
        assert!(html.contains(&format!("src=\"{i}\"")), "{i} not linked relatively");
    }
    ok(&absynth(&["verify", "--dir", d])).unwrap();
    ok(&absynth(&["review", "--manifest", m.to_str().unwrap(), "--fraction", "0.5"])).unwrap();
    let sampled = std::fs::read_to_string(dir.path().join("review.jsonl")).unwrap().lines().count();
    assert!(sampled * 2 >= manifest.records.len());
}

#[test]
fn verify_flags_tampered_answers() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    ok(&absynth(&["gen", "--scenario", "chart", "--count", "2", "--out", d])).unwrap();
    let path = dir.path().join("manifest.jsonl");
    let mut m = absynth::pipeline::load_manifest(&path).unwrap();
    let r = m.records.iter_mut().find(|r| r.answer_kind == absynth::record::AnswerKind::Numeric).unwrap();
    r.answer = "123456".into();
    r.alternates.clear();
    std::fs::write(&path, m.to_jsonl()).unwrap();
    let o = absynth(&["verify", "--dir", d]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn eval_missing_threshold_and_errors() {
    let gold = fixture("eval_gold.jsonl");
    let pred = fixture("eval_pred.jsonl");
    let dir = tempfile::tempdir().unwrap();
    let base = ["eval", "--gold", gold.to_str().unwrap(), "--pred", pred.to_str().unwrap(), "--out", dir.path().to_str().unwrap()];
    ok(&absynth(&[&base[..], &["--max-missing", "1"]].concat())).unwrap();
    assert_eq!(absynth(&[&base[..], &["--max-missing", "0"]].concat()).status.code(), Some(2));

    let o = absynth(&["eval", "--gold", "/no/such/gold.jsonl", "--pred", pred.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing file"));

    let old = dir.path().join("old.jsonl");
    std::fs::write(&old, "{\"schema_version\":2,\"landmark_convention\":\"x\",\"stats\":{}}\n").unwrap();
    let o = absynth(&["stats", "--manifest", old.to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("schema version 2"));
}

#[test]
fn gallery_of_empty_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("manifest.jsonl");
    std::fs::write(&m, absynth::record::Manifest::new(vec![]).to_jsonl()).unwrap();
    ok(&absynth(&["gallery", "--manifest", m.to_str().unwrap()])).unwrap();
    let html = std::fs::read_to_string(dir.path().join("index.html")).unwrap();
    assert!(html.starts_with("<!DOCTYPE html>") && html.trim_end().ends_with("</html>"));
    assert!(!html.contains("<section"));
}

#[test]
fn rejects_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "test_ratio = 3.0\n[counts]\nchart = 1\n").unwrap();
    let o = absynth(&["gen", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("test_ratio"));
    assert!(!absynth(&["gen", "--out", dir.path().to_str().unwrap()]).status.success());
}
