//! Batch generation and the file-level commands behind the CLI: gen, verify,
//! eval, stats, review and gallery.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{aggregate, dataset_stats, DatasetStats, LandmarkMatch, Prediction, ScoreReport};
use crate::gate::{
    accuracy_gate, aesthetics_gate, feasibility_gate, support_gate, Feasibility, GateConfig, GateReport, Outcome, Rejection, Stage,
};
use crate::instruct::{assign_split, canonicalize, sample_for_review, sample_spec, ScenarioSpec};
use crate::keywords::KeywordLibrary;
use crate::llm::{BackendConfig, Bridge, LlmError};
use crate::map::WalkParams;
use crate::record::{InstructionRecord, Manifest, ManifestError, Provenance, Scenario};
use crate::scene::render_svg;
use crate::synth;
use crate::verify::{verify_record, Verdict};

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const SPECS_FILE: &str = "specs.jsonl";
pub const GATE_REPORT_FILE: &str = "gate_report.json";
pub const GALLERY_FILE: &str = "index.html";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("missing file: {0}")]
    MissingFile(PathBuf),
    #[error("schema version {found} is not supported (expected {expected})")]
    SchemaMismatch { found: u32, expected: u32 },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Backend(#[from] LlmError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_path_buf(), source }
}

fn read(path: &Path) -> Result<String, PipelineError> {
    if !path.exists() {
        return Err(PipelineError::MissingFile(path.to_path_buf()));
    }
    std::fs::read_to_string(path).map_err(io_err(path))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    std::fs::write(path, bytes).map_err(io_err(path))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    /// Worker threads; 0 lets rayon decide.
    pub jobs: usize,
    /// Accepted images wanted per scenario.
    pub counts: BTreeMap<Scenario, usize>,
    /// Fraction of images assigned to the test split.
    pub test_ratio: f64,
    pub max_questions_per_image: usize,
    /// Candidates tried per wanted image before giving up on a scenario.
    pub candidate_factor: usize,
    /// Completions drawn per question when a backend is configured.
    pub votes: usize,
    pub gate: GateConfig,
    pub walk: WalkParams,
    pub backend: Option<BackendConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            out: PathBuf::from("out"),
            jobs: 0,
            counts: BTreeMap::new(),
            test_ratio: 0.1,
            max_questions_per_image: 5,
            candidate_factor: 4,
            votes: 3,
            gate: GateConfig::default(),
            walk: WalkParams::default(),
            backend: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<RunConfig, PipelineError> {
        RunConfig::from_toml(&read(path)?)
    }

    pub fn check(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if !(0.0..=1.0).contains(&self.test_ratio) {
            return bad(format!("test_ratio {} outside [0, 1]", self.test_ratio));
        }
        if self.max_questions_per_image == 0 {
            return bad("max_questions_per_image must be at least 1".into());
        }
        if self.candidate_factor == 0 {
            return bad("candidate_factor must be at least 1".into());
        }
        if self.votes < 3 && self.backend.is_some() {
            return bad("votes must be at least 3".into());
        }
        self.gate.check().map_err(|e| PipelineError::Config(e.to_string()))?;
        self.walk.check().map_err(|e| PipelineError::Config(e.to_string()))?;
        if let Some(b) = &self.backend {
            b.check()?;
        }
        if self.out.is_file() {
            return bad(format!("output path {} is a file", self.out.display()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecEntry {
    pub image_id: String,
    pub scenario: Scenario,
    pub seed: u64,
    #[serde(flatten)]
    pub spec: ScenarioSpec,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub accepted: usize,
    pub rejected: usize,
    pub records: usize,
    /// Rejections keyed by stage.
    pub rejected_by_stage: BTreeMap<Stage, usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenOutput {
    pub manifest: Manifest,
    pub specs: Vec<SpecEntry>,
    /// Paths relative to the output directory.
    pub images: Vec<(String, Vec<u8>)>,
    pub report: GateReport,
    pub summary: BTreeMap<Scenario, ScenarioSummary>,
}

struct Accepted {
    entry: SpecEntry,
    records: Vec<InstructionRecord>,
    image_ref: String,
    svg: Vec<u8>,
}

pub fn image_id(scenario: Scenario, index: usize) -> String {
    format!("{}-{index:05}", scenario.tag())
}

pub fn candidate_seed(seed: u64, scenario: Scenario, index: usize) -> u64 {
    synth::mix(synth::mix(seed, synth::fnv(scenario.tag())), index as u64)
}

/// Runs one candidate image through sampling, the three gates and rendering.
fn run_candidate(
    scenario: Scenario,
    index: usize,
    config: &RunConfig,
    library: &KeywordLibrary,
    bridge: Option<&Bridge>,
) -> Result<Accepted, Rejection> {
    let id = image_id(scenario, index);
    let seed = candidate_seed(config.seed, scenario, index);
    let feasibility = |reason: String| Rejection { stage: Stage::Feasibility, reason };
    let spec = sample_spec(scenario, seed, library, &config.walk).map_err(|e| feasibility(e.to_string()))?;
    let scene = match feasibility_gate(&spec, &config.gate) {
        Feasibility::Accepted(f) => f.scene,
        Feasibility::Rejected { rejection, .. } => return Err(rejection),
    };
    let violations = aesthetics_gate(&scene, &config.gate);
    if !violations.is_empty() {
        let reason = violations.iter().map(|v| format!("{}: {}", v.kind.tag(), v.detail)).collect::<Vec<_>>().join("; ");
        return Err(Rejection { stage: Stage::Aesthetics, reason });
    }
    let image_ref = format!("images/{}/{id}.svg", scenario.tag());
    let split = assign_split(&id, config.seed, config.test_ratio);
    let subtype = spec.subtype();
    let records: Vec<InstructionRecord> = spec
        .questions()
        .into_iter()
        .take(config.max_questions_per_image)
        .enumerate()
        .map(|(j, d)| InstructionRecord {
            id: format!("{id}-q{j}"),
            scenario,
            image_ref: image_ref.clone(),
            question: d.question,
            answer: d.answer,
            alternates: d.alternates,
            answer_kind: d.answer_kind,
            rationale: d.rationale,
            question_type: d.question_type,
            subtype: subtype.clone(),
            difficulty: d.difficulty,
            split,
            provenance: Provenance { generator: spec.generator().to_string(), seed, image_id: id.clone(), query: d.query },
        })
        .collect();
    for r in &records {
        r.check().map_err(|reason| Rejection { stage: Stage::Accuracy, reason })?;
    }
    accuracy_gate(&records, &spec)?;
    if let Some(bridge) = bridge {
        vote_gate(bridge, &records, &spec, config)?;
    }
    let svg = render_svg(&scene).map_err(|e| feasibility(e.to_string()))?;
    Ok(Accepted { entry: SpecEntry { image_id: id, scenario, seed, spec }, records, image_ref, svg })
}

/// Asks the backend each question several times; the voted answer must have
/// enough support and agree with the stored gold answer.
fn vote_gate(bridge: &Bridge, records: &[InstructionRecord], spec: &ScenarioSpec, config: &RunConfig) -> Result<(), Rejection> {
    let description = serde_json::to_string(spec).expect("spec serializes");
    for r in records {
        let context: BTreeMap<String, String> =
            [("description".to_string(), description.clone()), ("reference".to_string(), r.answer.clone())].into();
        let (answer, support) = bridge
            .self_consistent_answer(&r.question, &context, config.votes)
            .map_err(|e| Rejection { stage: Stage::Accuracy, reason: format!("{}: {e}", r.id) })?;
        support_gate(support, &config.gate)?;
        let got = canonicalize(&answer, r.answer_kind);
        if !r.accepted_answers().iter().any(|a| canonicalize(a, r.answer_kind) == got) {
            return Err(Rejection {
                stage: Stage::Accuracy,
                reason: format!("{}: voted answer {answer} disagrees with {}", r.id, r.answer),
            });
        }
    }
    Ok(())
}

/// Generates every scenario in `config.counts`. Candidates are evaluated in
/// parallel and collected in index order, so the output depends only on the
/// config.
pub fn generate(config: &RunConfig) -> Result<GenOutput, PipelineError> {
    config.check()?;
    let library = KeywordLibrary::builtin();
    let bridge = config.backend.clone().map(Bridge::from_config).transpose()?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(config.jobs).build().map_err(|e| PipelineError::Config(e.to_string()))?;

    let mut records = Vec::new();
    let mut specs = Vec::new();
    let mut images = Vec::new();
    let mut report = GateReport::default();
    let mut summary = BTreeMap::new();
    for (&scenario, &wanted) in &config.counts {
        let budget = wanted * config.candidate_factor;
        let mut sum = ScenarioSummary::default();
        let mut next = 0;
        while sum.accepted < wanted && next < budget {
            let batch: Vec<usize> = (next..budget.min(next + wanted - sum.accepted)).collect();
            next += batch.len();
            let results: Vec<(usize, Result<Accepted, Rejection>)> =
                pool.install(|| batch.par_iter().map(|&k| (k, run_candidate(scenario, k, config, &library, bridge.as_ref()))).collect());
            for (k, result) in results {
                let id = image_id(scenario, k);
                let outcome = match result {
                    Ok(acc) => {
                        sum.accepted += 1;
                        sum.records += acc.records.len();
                        records.extend(acc.records);
                        images.push((acc.image_ref, acc.svg));
                        specs.push(acc.entry);
                        Outcome::Accepted
                    }
                    Err(rejection) => {
                        sum.rejected += 1;
                        *sum.rejected_by_stage.entry(rejection.stage).or_default() += 1;
                        Outcome::Rejected(rejection)
                    }
                };
                report.insert(id, outcome).expect("candidate ids are unique");
            }
        }
        summary.insert(scenario, sum);
    }
    Ok(GenOutput { manifest: Manifest::new(records), specs, images, report, summary })
}

impl GenOutput {
    pub fn write(&self, dir: &Path) -> Result<(), PipelineError> {
        write(&dir.join(MANIFEST_FILE), self.manifest.to_jsonl())?;
        let mut specs = String::new();
        for s in &self.specs {
            specs.push_str(&serde_json::to_string(s).expect("spec serializes"));
            specs.push('\n');
        }
        write(&dir.join(SPECS_FILE), specs)?;
        for (rel, bytes) in &self.images {
            write(&dir.join(rel), bytes)?;
        }
        write(&dir.join(GATE_REPORT_FILE), self.report.to_json())
    }

    pub fn summary_table(&self) -> String {
        let mut out = format!("{:<16} {:>8} {:>8} {:>8}\n", "scenario", "accepted", "rejected", "records");
        for (sc, s) in &self.summary {
            let _ = writeln!(out, "{:<16} {:>8} {:>8} {:>8}", sc.tag(), s.accepted, s.rejected, s.records);
            for (stage, n) in &s.rejected_by_stage {
                let _ = writeln!(out, "  rejected at {stage:?}: {n}");
            }
        }
        out
    }
}

pub fn load_manifest(path: &Path) -> Result<Manifest, PipelineError> {
    let text = read(path)?;
    Manifest::from_jsonl(&text).map_err(|e| match e {
        ManifestError::SchemaMismatch { found, expected } => PipelineError::SchemaMismatch { found, expected },
        other => PipelineError::Parse { path: path.to_path_buf(), message: other.to_string() },
    })
}

fn load_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, PipelineError> {
    read(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            serde_json::from_str(l).map_err(|e| PipelineError::Parse { path: path.to_path_buf(), message: format!("line {}: {e}", n + 1) })
        })
        .collect()
}

pub fn load_specs(path: &Path) -> Result<Vec<SpecEntry>, PipelineError> {
    load_jsonl(path)
}

pub fn load_predictions(path: &Path) -> Result<Vec<Prediction>, PipelineError> {
    load_jsonl(path)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checked: usize,
    pub ok: usize,
    /// Record id and reason for every failure.
    pub failures: Vec<(String, String)>,
}

/// Re-derives every record's answer from the spec it was generated from.
pub fn verify_manifest(manifest: &Manifest, specs: &[SpecEntry]) -> VerifyReport {
    let by_image: BTreeMap<&str, &ScenarioSpec> = specs.iter().map(|s| (s.image_id.as_str(), &s.spec)).collect();
    let results: Vec<(String, Result<(), String>)> = manifest
        .records
        .par_iter()
        .map(|r| {
            let res = match by_image.get(r.provenance.image_id.as_str()) {
                None => Err(format!("no spec for image {}", r.provenance.image_id)),
                Some(spec) => match verify_record(r, spec) {
                    Ok(Verdict::Ok) => Ok(()),
                    Ok(Verdict::Mismatch { expected, got }) => Err(format!("expected {expected}, got {got}")),
                    Err(e) => Err(e.to_string()),
                },
            };
            (r.id.clone(), res)
        })
        .collect();
    let mut report = VerifyReport { checked: results.len(), ..VerifyReport::default() };
    for (id, res) in results {
        match res {
            Ok(()) => report.ok += 1,
            Err(reason) => report.failures.push((id, reason)),
        }
    }
    report
}

pub fn eval_files(gold: &Path, predictions: &Path, mode: LandmarkMatch) -> Result<ScoreReport, PipelineError> {
    let manifest = load_manifest(gold)?;
    let preds = load_predictions(predictions)?;
    Ok(aggregate(&manifest, &preds, mode))
}

pub fn stats_file(manifest: &Path) -> Result<DatasetStats, PipelineError> {
    Ok(dataset_stats(&load_manifest(manifest)?))
}

pub fn review_sample(manifest: &Manifest, fraction: f64, seed: u64) -> Result<Vec<InstructionRecord>, PipelineError> {
    let ids = sample_for_review(manifest, fraction, seed).map_err(|e| PipelineError::Config(e.to_string()))?;
    let by_id: BTreeMap<&str, &InstructionRecord> = manifest.records.iter().map(|r| (r.id.as_str(), r)).collect();
    Ok(ids.iter().map(|id| by_id[id.as_str()].clone()).collect())
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

/// Static HTML page listing each image with its questions. Image links are
/// relative to the manifest directory.
pub fn gallery_html(manifest: &Manifest) -> String {
    let mut by_image: BTreeMap<&str, Vec<&InstructionRecord>> = BTreeMap::new();
    for r in &manifest.records {
        by_image.entry(r.image_ref.as_str()).or_default().push(r);
    }
    let mut out = String::from(
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>Dataset gallery</title>\n\
<style>body{font-family:sans-serif;margin:2em}section{border-top:1px solid #ccc;padding:1em 0}img{max-width:640px}dt{font-weight:bold}</style>\n\
</head>\n<body>\n",
    );
    let _ = writeln!(out, "<h1>Dataset gallery</h1>\n<p>{} images, {} questions</p>", by_image.len(), manifest.records.len());
    for (image, records) in &by_image {
        let first = records[0];
        let _ = writeln!(out, "<section id=\"{}\">", escape(&first.provenance.image_id));
        let _ = writeln!(out, "<h2>{} ({})</h2>", escape(&first.provenance.image_id), first.scenario.tag());
        let _ = writeln!(out, "<img src=\"{}\" alt=\"{}\">", escape(image), escape(&first.provenance.image_id));
        out.push_str("<dl>\n");
        for r in records {
            let _ = writeln!(out, "<dt>{}</dt>\n<dd>{}</dd>", escape(&r.question), escape(&r.answer));
            if let Some(why) = &r.rationale {
                let _ = writeln!(out, "<dd><small>{}</small></dd>", escape(why));
            }
        }
        out.push_str("</dl>\n</section>\n");
    }
    out.push_str("</body>\n</html>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(counts: &[(Scenario, usize)]) -> RunConfig {
        RunConfig { seed: 3, counts: counts.iter().copied().collect(), ..RunConfig::default() }
    }

    #[test]
    fn toml_round_trip() {
        let cfg = RunConfig::from_toml(
            "seed = 9\ntest_ratio = 0.2\n[counts]\nchart = 149\ntable = 58\nroad_map = 300\n[gate]\nmax_retries = 2\n[walk]\nmax_steps = 20\n",
        )
        .unwrap();
        assert_eq!(cfg.counts[&Scenario::Table], 58);
        assert_eq!(cfg.gate.max_retries, 2);
        assert_eq!(cfg.gate.min_font_px, 8.0);
        assert_eq!(cfg.walk.max_steps, 20);
        cfg.check().unwrap();
        assert!(RunConfig::from_toml("colour = 1").is_err());
        assert!(RunConfig { test_ratio: 1.5, ..RunConfig::default() }.check().is_err());
    }

    #[test]
    fn small_run_meets_counts_and_verifies() {
        let out = generate(&config(&[(Scenario::Chart, 4), (Scenario::Dashboard, 3)])).unwrap();
        assert_eq!(out.summary[&Scenario::Chart].accepted, 4);
        assert_eq!(out.summary[&Scenario::Dashboard].accepted, 3);
        assert_eq!(out.specs.len(), 7);
        assert_eq!(out.images.len(), 7);
        out.manifest.check().unwrap();
        let v = verify_manifest(&out.manifest, &out.specs);
        assert_eq!(v.ok, v.checked, "{:?}", v.failures);
        assert!(out.manifest.records.iter().all(|r| r.id.starts_with(&r.provenance.image_id)));
    }

    #[test]
    fn parallelism_does_not_change_output() {
        let mut a = config(&[(Scenario::RoadMap, 5), (Scenario::VisualPuzzle, 4)]);
        a.jobs = 1;
        let mut b = a.clone();
        b.jobs = 4;
        assert_eq!(generate(&a).unwrap(), generate(&b).unwrap());
    }

    #[test]
    fn offline_backend_votes_agree() {
        let mut cfg = config(&[(Scenario::Flowchart, 2)]);
        cfg.backend = Some(BackendConfig { backoff_ms: 0, ..BackendConfig::default() });
        let out = generate(&cfg).unwrap();
        assert_eq!(out.summary[&Scenario::Flowchart].accepted, 2);
    }

    #[test]
    fn gallery_escapes_and_handles_empty() {
        let empty = gallery_html(&Manifest::new(vec![]));
        assert!(empty.contains("0 images, 0 questions"));
        let xml = empty.replace("<!DOCTYPE html>", "").replace("<meta charset=\"utf-8\">", "<meta charset=\"utf-8\"/>");
        assert!(roxmltree::Document::parse(&xml).is_ok());
        assert_eq!(escape("a<b & \"c\""), "a&lt;b &amp; &quot;c&quot;");
    }

    #[test]
    fn missing_and_mismatched_files() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope.jsonl");
        assert!(matches!(load_manifest(&missing), Err(PipelineError::MissingFile(p)) if p == missing));
        let old = dir.path().join("old.jsonl");
        std::fs::write(&old, "{\"schema_version\":0,\"landmark_convention\":\"x\",\"stats\":{}}\n").unwrap();
        assert!(matches!(load_manifest(&old), Err(PipelineError::SchemaMismatch { found: 0, expected: 1 })));
    }
}
