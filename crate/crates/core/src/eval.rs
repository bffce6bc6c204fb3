//! Scoring of free-text predictions against a gold manifest.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::sync::LazyLock;

use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::instruct::{canonicalize, numbers_in};
use crate::record::{split_sequence, AnswerKind, InstructionRecord, Manifest, Scenario, Split};

/// Relative error accepted by tolerant numeric scoring, boundary included.
pub const NUMERIC_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub raw_response: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NumericScore {
    Correct,
    Incorrect,
    Unparsable,
}

/// Scores the last number in `pred` against every parsable gold value.
pub fn score_numeric(pred: &str, gold: &[&str], tolerant: bool) -> NumericScore {
    let Some(&p) = numbers_in(pred).last() else { return NumericScore::Unparsable };
    let hit = gold.iter().filter_map(|g| canonicalize(g, AnswerKind::Numeric).parse::<f64>().ok()).any(|g| {
        if tolerant {
            (p - g).abs() <= NUMERIC_TOLERANCE * g.abs() * (1.0 + 1e-12)
        } else {
            canonicalize(&p.to_string(), AnswerKind::Numeric) == canonicalize(&g.to_string(), AnswerKind::Numeric)
        }
    });
    if hit {
        NumericScore::Correct
    } else {
        NumericScore::Incorrect
    }
}

/// True when `needle` occurs in `hay` with non-alphanumeric characters (or
/// the string ends) on both sides.
fn contains_token(hay: &str, needle: &str) -> bool {
    if needle.is_empty() {
        return false;
    }
    hay.match_indices(needle).any(|(i, m)| {
        let before = hay[..i].chars().next_back();
        let after = hay[i + m.len()..].chars().next();
        before.is_none_or(|c| !c.is_alphanumeric()) && after.is_none_or(|c| !c.is_alphanumeric())
    })
}

pub fn score_phrase(pred: &str, gold: &[&str]) -> bool {
    let p = canonicalize(pred, AnswerKind::Phrase);
    gold.iter().any(|g| {
        let g = canonicalize(g, AnswerKind::Phrase);
        p == g || contains_token(&p, &g)
    })
}

static CHOICE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b([A-Z])\b").expect("valid regex"));

/// The last standalone capital letter in `pred` is the chosen option.
pub fn score_choice(pred: &str, gold: &[&str]) -> bool {
    match CHOICE.captures_iter(pred).last() {
        Some(c) => gold.iter().any(|g| g.trim().eq_ignore_ascii_case(&c[1])),
        None => score_phrase(pred, gold),
    }
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase().split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(String::from).collect()
}

/// Length of the longest common subsequence, two-row dynamic programme.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Rouge-L F1 over lowercase alphanumeric tokens.
pub fn score_sentence(pred: &str, gold: &str) -> f64 {
    let (p, g) = (tokenize(pred), tokenize(gold));
    if p.is_empty() && g.is_empty() {
        return 1.0;
    }
    let l = lcs_len(&p, &g) as f64;
    if l == 0.0 {
        return 0.0;
    }
    let (precision, recall) = (l / p.len() as f64, l / g.len() as f64);
    2.0 * precision * recall / (precision + recall)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LandmarkMatch {
    /// Longest common subsequence with the gold route.
    #[default]
    Lcs,
    /// Walk the prediction once, advancing through the gold route whenever
    /// a name appears further along it.
    Greedy,
}

/// Gold names in the order they first appear in `pred`. Where two names
/// overlap in the text the longer one wins.
pub fn extract_landmarks(pred: &str, vocabulary: &[String]) -> Vec<String> {
    let hay = pred.to_lowercase();
    let mut hits: Vec<(usize, usize, usize)> = Vec::new();
    for (k, name) in vocabulary.iter().enumerate() {
        let needle = name.to_lowercase();
        if needle.is_empty() {
            continue;
        }
        for (i, m) in hay.match_indices(&needle) {
            let before = hay[..i].chars().next_back();
            let after = hay[i + m.len()..].chars().next();
            if before.is_none_or(|c| !c.is_alphanumeric()) && after.is_none_or(|c| !c.is_alphanumeric()) {
                hits.push((i, i + m.len(), k));
            }
        }
    }
    hits.sort_by_key(|&(start, end, _)| (start, std::cmp::Reverse(end)));
    let mut out: Vec<String> = Vec::new();
    let mut covered = 0;
    for (start, end, k) in hits {
        if start < covered {
            continue;
        }
        covered = end;
        if !out.contains(&vocabulary[k]) {
            out.push(vocabulary[k].clone());
        }
    }
    out
}

/// Landmark coverage rate in [0, 1].
pub fn score_landmarks(pred_raw: &str, gold: &[String], mode: LandmarkMatch) -> f64 {
    if gold.is_empty() {
        return 0.0;
    }
    let found = extract_landmarks(pred_raw, gold);
    let matched = match mode {
        LandmarkMatch::Lcs => lcs_len(&found, gold),
        LandmarkMatch::Greedy => {
            let mut next = 0;
            let mut n = 0;
            for name in &found {
                if let Some(k) = gold[next..].iter().position(|g| g == name) {
                    next += k + 1;
                    n += 1;
                }
            }
            n
        }
    };
    matched as f64 / gold.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "metric", content = "value", rename_all = "snake_case")]
pub enum RecordScore {
    Correct(bool),
    Unparsable,
    RougeL(f64),
    Lcr(f64),
    Missing,
}

pub fn score_record(record: &InstructionRecord, pred: Option<&str>, mode: LandmarkMatch) -> RecordScore {
    let Some(pred) = pred else { return RecordScore::Missing };
    let gold = record.accepted_answers();
    match record.answer_kind {
        AnswerKind::Numeric => match score_numeric(pred, &gold, record.scenario.tolerant_numeric()) {
            NumericScore::Correct => RecordScore::Correct(true),
            NumericScore::Incorrect => RecordScore::Correct(false),
            NumericScore::Unparsable => RecordScore::Unparsable,
        },
        AnswerKind::Phrase => RecordScore::Correct(score_phrase(pred, &gold)),
        AnswerKind::Choice => RecordScore::Correct(score_choice(pred, &gold)),
        AnswerKind::Sentence => RecordScore::RougeL(gold.iter().map(|g| score_sentence(pred, g)).fold(0.0, f64::max)),
        AnswerKind::LandmarkSequence => RecordScore::Lcr(score_landmarks(pred, &split_sequence(&record.answer), mode)),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub correct: usize,
    pub total: usize,
    /// Percentage in [0, 100].
    pub accuracy: f64,
}

impl Accuracy {
    fn add(&mut self, ok: bool) {
        self.total += 1;
        self.correct += usize::from(ok);
        self.accuracy = 100.0 * self.correct as f64 / self.total as f64;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanScore {
    pub count: usize,
    pub mean: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    /// Numeric, phrase and choice records; missing and unparsable ones count as wrong.
    pub per_scenario: BTreeMap<Scenario, Accuracy>,
    pub per_question_type: BTreeMap<String, Accuracy>,
    /// Mean Rouge-L over sentence records, in [0, 1].
    pub sentence_rouge_l: MeanScore,
    /// Mean landmark coverage over route records, as a percentage.
    pub map_lcr: MeanScore,
    pub gold: usize,
    pub scored: usize,
    pub missing: usize,
    pub unparsable: usize,
    /// Predictions whose id is not in the gold manifest.
    pub unknown: usize,
}

/// Scores every gold record. When an id is predicted twice the first
/// prediction counts.
pub fn aggregate(gold: &Manifest, predictions: &[Prediction], mode: LandmarkMatch) -> ScoreReport {
    let mut by_id: HashMap<&str, &str> = HashMap::new();
    for p in predictions {
        by_id.entry(p.id.as_str()).or_insert(p.raw_response.as_str());
    }
    let known: std::collections::HashSet<&str> = gold.records.iter().map(|r| r.id.as_str()).collect();
    let scores: Vec<RecordScore> = gold.records.par_iter().map(|r| score_record(r, by_id.get(r.id.as_str()).copied(), mode)).collect();

    let mut report =
        ScoreReport { gold: gold.records.len(), unknown: by_id.keys().filter(|k| !known.contains(*k)).count(), ..Default::default() };
    let (mut rouge, mut lcr) = (0.0, 0.0);
    for (r, s) in gold.records.iter().zip(&scores) {
        match s {
            RecordScore::Missing => report.missing += 1,
            RecordScore::Unparsable => report.unparsable += 1,
            _ => report.scored += 1,
        }
        let discrete = match (r.answer_kind, s) {
            (AnswerKind::Sentence, _) => {
                rouge += if let RecordScore::RougeL(v) = s { *v } else { 0.0 };
                report.sentence_rouge_l.count += 1;
                None
            }
            (AnswerKind::LandmarkSequence, _) => {
                lcr += if let RecordScore::Lcr(v) = s { *v } else { 0.0 };
                report.map_lcr.count += 1;
                None
            }
            (_, RecordScore::Correct(ok)) => Some(*ok),
            _ => Some(false),
        };
        if let Some(ok) = discrete {
            report.per_scenario.entry(r.scenario).or_default().add(ok);
            report.per_question_type.entry(r.question_type.clone()).or_default().add(ok);
        }
    }
    if report.sentence_rouge_l.count > 0 {
        report.sentence_rouge_l.mean = rouge / report.sentence_rouge_l.count as f64;
    }
    if report.map_lcr.count > 0 {
        report.map_lcr.mean = 100.0 * lcr / report.map_lcr.count as f64;
    }
    report
}

impl ScoreReport {
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<20} {:>8} {:>8} {:>8}", "scenario", "correct", "total", "acc(%)");
        for (sc, a) in &self.per_scenario {
            let _ = writeln!(out, "{:<20} {:>8} {:>8} {:>8.2}", sc.tag(), a.correct, a.total, a.accuracy);
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<20} {:>8} {:>8} {:>8}", "question type", "correct", "total", "acc(%)");
        for (t, a) in &self.per_question_type {
            let _ = writeln!(out, "{:<20} {:>8} {:>8} {:>8.2}", t, a.correct, a.total, a.accuracy);
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "sentence Rouge-L: {:.4} over {}", self.sentence_rouge_l.mean, self.sentence_rouge_l.count);
        let _ = writeln!(out, "map LCR(%): {:.2} over {}", self.map_lcr.mean, self.map_lcr.count);
        let _ = writeln!(
            out,
            "gold {} | scored {} | missing {} | unparsable {} | unknown ids {}",
            self.gold, self.scored, self.missing, self.unparsable, self.unknown
        );
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub images: usize,
    pub instructions: usize,
    pub train: usize,
    pub test: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub per_scenario: BTreeMap<Scenario, SplitCounts>,
    pub per_question_type: BTreeMap<String, usize>,
    /// Images per scenario sub-family, e.g. chart kinds.
    pub per_subtype: BTreeMap<String, usize>,
    /// Route images per difficulty level.
    pub per_difficulty: BTreeMap<u8, usize>,
    pub total_images: usize,
    pub total_instructions: usize,
}

pub fn dataset_stats(manifest: &Manifest) -> DatasetStats {
    let mut stats = DatasetStats::default();
    let mut seen = std::collections::BTreeSet::new();
    for r in &manifest.records {
        let e = stats.per_scenario.entry(r.scenario).or_default();
        e.instructions += 1;
        match r.split {
            Split::Train => e.train += 1,
            Split::Test => e.test += 1,
        }
        *stats.per_question_type.entry(r.question_type.clone()).or_default() += 1;
        if seen.insert(r.image_ref.as_str()) {
            e.images += 1;
            if let Some(sub) = &r.subtype {
                *stats.per_subtype.entry(format!("{}/{sub}", r.scenario.tag())).or_default() += 1;
            }
            if let Some(d) = r.difficulty {
                *stats.per_difficulty.entry(d).or_default() += 1;
            }
        }
    }
    stats.total_images = seen.len();
    stats.total_instructions = manifest.records.len();
    stats
}

impl DatasetStats {
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<20} {:>8} {:>8} {:>8} {:>8}", "scenario", "images", "instr", "train", "test");
        for (sc, c) in &self.per_scenario {
            let _ = writeln!(out, "{:<20} {:>8} {:>8} {:>8} {:>8}", sc.tag(), c.images, c.instructions, c.train, c.test);
        }
        let _ = writeln!(out, "{:<20} {:>8} {:>8}", "total", self.total_images, self.total_instructions);
        if !self.per_difficulty.is_empty() {
            let _ = writeln!(out);
            for (d, n) in &self.per_difficulty {
                let _ = writeln!(out, "difficulty {d}: {n}");
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn numeric_examples() {
        assert_eq!(score_numeric("about 104", &["100"], true), NumericScore::Correct);
        assert_eq!(score_numeric("106", &["100"], true), NumericScore::Incorrect);
        assert_eq!(score_numeric("105", &["100"], true), NumericScore::Correct);
        assert_eq!(score_numeric("105.01", &["100"], true), NumericScore::Incorrect);
        assert_eq!(score_numeric("95", &["100"], true), NumericScore::Correct);
        assert_eq!(score_numeric("0", &["0"], true), NumericScore::Correct);
        assert_eq!(score_numeric("0.001", &["0"], true), NumericScore::Incorrect);
        assert_eq!(score_numeric("no idea", &["3"], false), NumericScore::Unparsable);
        assert_eq!(score_numeric("first 2, then 3", &["3"], false), NumericScore::Correct);
        assert_eq!(score_numeric("3.0 km", &["3"], false), NumericScore::Correct);
        assert_eq!(score_numeric("3.1", &["3"], false), NumericScore::Incorrect);
        assert_eq!(score_numeric("1,250", &["1250"], false), NumericScore::Correct);
    }

    #[test]
    fn phrase_examples() {
        assert!(score_phrase("It is an organization chart.", &["organization chart"]));
        assert!(!score_phrase("No", &["Yes"]));
        assert!(score_phrase("16:10", &["4:10", "16:10"]));
        assert!(score_phrase("4:10 PM", &["4:10", "16:10"]));
        assert!(!score_phrase("16:10", &["6:10"]));
        assert!(!score_phrase("Yesterday", &["Yes"]));
    }

    #[test]
    fn choice_takes_last_letter() {
        assert!(score_choice("The answer is C.", &["C"]));
        assert!(!score_choice("Not A, it must be B", &["A"]));
        assert!(score_choice("option c", &["C"]));
    }

    #[test]
    fn sentence_examples() {
        assert_eq!(score_sentence("The cat sat", "the cat sat"), 1.0);
        assert_eq!(score_sentence("dogs bark", "the cat sat"), 0.0);
        assert!((score_sentence("the cat ran", "the cat sat") - 2.0 / 3.0).abs() < 1e-12);
    }

    fn names(s: &str) -> Vec<String> {
        s.split(',').map(|x| x.trim().to_string()).collect()
    }

    #[test]
    fn landmark_examples() {
        let gold = names("Oak Street, Pine Road, Elm Avenue, Cedar Lane");
        assert_eq!(score_landmarks("Oak Street, Pine Road, Elm Avenue, Cedar Lane", &gold, LandmarkMatch::Lcs), 1.0);
        assert_eq!(score_landmarks("Go from Oak Street to Elm Avenue then Cedar Lane", &gold, LandmarkMatch::Lcs), 0.75);
        assert_eq!(score_landmarks("Cedar Lane, Elm Avenue, Pine Road, Oak Street", &gold, LandmarkMatch::Lcs), 0.25);
        assert_eq!(score_landmarks("nothing useful", &gold, LandmarkMatch::Lcs), 0.0);
        assert_eq!(score_landmarks("Cedar Lane, Oak Street, Pine Road, Elm Avenue", &gold, LandmarkMatch::Lcs), 0.75);
        assert_eq!(score_landmarks("Cedar Lane, Oak Street, Pine Road, Elm Avenue", &gold, LandmarkMatch::Greedy), 0.25);
    }

    #[test]
    fn longer_overlapping_name_wins() {
        let vocab = names("Park, Park Lane");
        assert_eq!(extract_landmarks("walk down Park Lane to the Park", &vocab), names("Park Lane, Park"));
    }

    fn brute_lcs(a: &[u8], b: &[u8]) -> usize {
        if a.is_empty() || b.is_empty() {
            return 0;
        }
        if a[0] == b[0] {
            1 + brute_lcs(&a[1..], &b[1..])
        } else {
            brute_lcs(&a[1..], b).max(brute_lcs(a, &b[1..]))
        }
    }

    proptest! {
        #[test]
        fn lcs_matches_recursive_definition(a in prop::collection::vec(0u8..4, 0..9), b in prop::collection::vec(0u8..4, 0..9)) {
            prop_assert_eq!(lcs_len(&a, &b), brute_lcs(&a, &b));
        }

        #[test]
        fn tolerant_scoring_is_symmetric_and_monotone(g in -1000i32..1000, d1 in 0u32..100, d2 in 0u32..100) {
            let g = f64::from(g);
            let (near, far) = (f64::from(d1.min(d2)) / 10.0, f64::from(d1.max(d2)) / 10.0);
            let gold = format!("{g}");
            let up = score_numeric(&format!("{}", g + far), &[&gold], true);
            let down = score_numeric(&format!("{}", g - far), &[&gold], true);
            prop_assert_eq!(up, down);
            if up == NumericScore::Correct {
                prop_assert_eq!(score_numeric(&format!("{}", g + near), &[&gold], true), NumericScore::Correct);
            }
        }
    }
}
