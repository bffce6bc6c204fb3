#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use absynth::eval::{Accuracy, MeanScore, ScoreReport};
use absynth::record::Scenario;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn absynth(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_absynth")).args(args).output().expect("binary runs")
}

pub fn ok(out: &Output) -> Result<(), String> {
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)))
    }
}

/// LCS length by trying every subsequence of the shorter input, longest first.
pub fn lcs_brute<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    assert!(short.len() <= 16, "brute force is exponential");
    let is_subseq = |mask: u32| {
        let mut it = long.iter();
        (0..short.len()).filter(|i| mask & (1 << i) != 0).all(|i| it.any(|x| *x == short[i]))
    };
    (0..1u32 << short.len()).filter(|&m| is_subseq(m)).map(|m| m.count_ones() as usize).max().unwrap_or(0)
}

fn acc(correct: usize, total: usize) -> Accuracy {
    Accuracy { correct, total, accuracy: 100.0 * correct as f64 / total as f64 }
}

/// The report for `eval_gold.jsonl` + `eval_pred.jsonl`, worked out by hand:
///
/// | id | routed as | outcome |
/// |----|-----------|---------|
/// | c1 | tolerant numeric, 104 vs 100 | correct (4%) |
/// | c2 | tolerant numeric, 106 vs 100 | wrong (6%) |
/// | c3 | phrase containment | correct |
/// | t1 | tolerant numeric, no number | unparsable |
/// | m1 | route, found Oak, Elm, Birch of 4 | 0.75 |
/// | m2 | strict numeric, 3.1 vs 3 | wrong |
/// | m3 | route, reversed | 0.25 |
/// | d1 | phrase, alternate 16:10 | correct |
/// | f1 | Rouge-L, "the cat ran" vs "the cat sat" | 2/3 |
/// | f2 | no prediction | missing, 0 |
/// | p1 | choice letter B | correct |
/// | r1 | strict numeric, 2 | correct |
///
/// plus one prediction for an id not in the gold file.
pub fn expected_fixture_report() -> ScoreReport {
    let per_scenario: BTreeMap<Scenario, Accuracy> = [
        (Scenario::Chart, acc(2, 3)),
        (Scenario::Table, acc(0, 1)),
        (Scenario::RoadMap, acc(0, 1)),
        (Scenario::RelationGraph, acc(1, 1)),
        (Scenario::VisualPuzzle, acc(1, 1)),
        (Scenario::Dashboard, acc(1, 1)),
    ]
    .into();
    let per_question_type: BTreeMap<String, Accuracy> = [
        ("value", acc(1, 2)),
        ("title", acc(1, 1)),
        ("sum", acc(0, 1)),
        ("counting", acc(1, 2)),
        ("offset_arithmetic", acc(1, 1)),
        ("induction", acc(1, 1)),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    ScoreReport {
        per_scenario,
        per_question_type,
        sentence_rouge_l: MeanScore { count: 2, mean: (2.0 / 3.0) / 2.0 },
        map_lcr: MeanScore { count: 2, mean: 50.0 },
        gold: 12,
        scored: 10,
        missing: 1,
        unparsable: 1,
        unknown: 1,
    }
}

/// Field-by-field comparison with floats allowed to differ by 1e-9.
pub fn reports_match(got: &ScoreReport, want: &ScoreReport) -> Result<(), String> {
    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9
    }
    fn same_acc<K: PartialEq>(a: &BTreeMap<K, Accuracy>, b: &BTreeMap<K, Accuracy>) -> bool {
        a.len() == b.len()
            && a.iter()
                .zip(b)
                .all(|((ka, va), (kb, vb))| ka == kb && va.correct == vb.correct && va.total == vb.total && close(va.accuracy, vb.accuracy))
    }
    let counts = (got.gold, got.scored, got.missing, got.unparsable, got.unknown);
    let want_counts = (want.gold, want.scored, want.missing, want.unparsable, want.unknown);
    if !same_acc(&got.per_scenario, &want.per_scenario)
        || !same_acc(&got.per_question_type, &want.per_question_type)
        || got.sentence_rouge_l.count != want.sentence_rouge_l.count
        || !close(got.sentence_rouge_l.mean, want.sentence_rouge_l.mean)
        || got.map_lcr.count != want.map_lcr.count
        || !close(got.map_lcr.mean, want.map_lcr.mean)
        || counts != want_counts
    {
        return Err(format!("report differs:\n got {got:?}\nwant {want:?}"));
    }
    Ok(())
}

/// Every file under `dir` with its bytes, keyed by relative path.
pub fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).expect("readable dir") {
            let path = entry.expect("dir entry").path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}
