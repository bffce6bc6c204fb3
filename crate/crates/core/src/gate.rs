//! Quality gate: render feasibility with bounded retries, geometric
//! aesthetics screening and answer accuracy.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instruct::ScenarioSpec;
use crate::record::InstructionRecord;
use crate::scene::{PrimitiveKind, SceneGraph};
use crate::synth::{GenError, LayoutParams, DEFAULT_FONT_SIZE};
use crate::verify::{verify_record, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GateConfig {
    pub max_retries: u32,
    /// Summed pairwise overlap of text and legend boxes, as a fraction of canvas area.
    pub max_overlap_fraction: f64,
    pub min_font_px: f64,
    pub min_vote_support: usize,
    pub review_fraction: f64,
}

impl Default for GateConfig {
    fn default() -> Self {
        GateConfig { max_retries: 3, max_overlap_fraction: 0.02, min_font_px: 8.0, min_vote_support: 2, review_fraction: 0.10 }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GateConfigError {
    #[error("max_retries must be at least 1")]
    NoAttempts,
    #[error("{name} must lie in (0, 1], got {value}")]
    Fraction { name: &'static str, value: f64 },
    #[error("min_font_px must be positive and at most {DEFAULT_FONT_SIZE}")]
    Font,
}

impl GateConfig {
    pub fn check(&self) -> Result<(), GateConfigError> {
        if self.max_retries < 1 {
            return Err(GateConfigError::NoAttempts);
        }
        for (name, value) in [("max_overlap_fraction", self.max_overlap_fraction), ("review_fraction", self.review_fraction)] {
            if !(value > 0.0 && value <= 1.0) {
                return Err(GateConfigError::Fraction { name, value });
            }
        }
        if !(self.min_font_px > 0.0 && self.min_font_px <= DEFAULT_FONT_SIZE) {
            return Err(GateConfigError::Font);
        }
        Ok(())
    }

    /// Font size for each attempt, stepping evenly from the default down to
    /// `min_font_px`: 14, 11, 8 with the defaults.
    pub fn font_schedule(&self) -> Vec<f64> {
        let n = self.max_retries.max(1);
        if n == 1 {
            return vec![DEFAULT_FONT_SIZE];
        }
        let step = (DEFAULT_FONT_SIZE - self.min_font_px) / f64::from(n - 1);
        (0..n).map(|k| DEFAULT_FONT_SIZE - step * f64::from(k)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Feasibility,
    Aesthetics,
    Accuracy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub stage: Stage,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Feasible {
    pub scene: SceneGraph,
    pub layout: LayoutParams,
    pub attempts: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Feasibility {
    Accepted(Feasible),
    Rejected { rejection: Rejection, attempts: u32 },
}

/// Builds the scene, shrinking the font after each failed attempt.
pub fn feasibility_gate(spec: &ScenarioSpec, config: &GateConfig) -> Feasibility {
    feasibility_gate_with(spec, config, |s, layout| s.build_scene(layout))
}

/// As [`feasibility_gate`] with a caller-supplied scene builder, so tests and
/// external regenerators can observe every attempt.
pub fn feasibility_gate_with<F>(spec: &ScenarioSpec, config: &GateConfig, mut build: F) -> Feasibility
where
    F: FnMut(&ScenarioSpec, &LayoutParams) -> Result<SceneGraph, GenError>,
{
    let mut last: Option<GenError> = None;
    let mut attempts = 0;
    for font_size in config.font_schedule() {
        attempts += 1;
        let layout = LayoutParams { font_size };
        match build(spec, &layout) {
            Ok(scene) => return Feasibility::Accepted(Feasible { scene, layout, attempts }),
            Err(e) => last = Some(e),
        }
    }
    let reason = last.map_or_else(|| "no attempts".to_string(), |e| e.to_string());
    Feasibility::Rejected { rejection: Rejection { stage: Stage::Feasibility, reason }, attempts }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Interference,
    Illegible,
    OutOfBounds,
}

impl ViolationKind {
    pub fn tag(self) -> &'static str {
        match self {
            ViolationKind::Interference => "interference",
            ViolationKind::Illegible => "illegible",
            ViolationKind::OutOfBounds => "out_of_bounds",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub detail: String,
}

/// Pluggable second opinion on a rendered scene, e.g. a multimodal judge.
pub trait AestheticsJudge {
    fn judge(&self, scene: &SceneGraph) -> Vec<Violation>;
}

/// Geometric screening. An empty list means the scene passes.
pub fn aesthetics_gate(scene: &SceneGraph, config: &GateConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    let canvas = scene.canvas.bounds();

    let mut labelled: Vec<usize> = (0..scene.primitives.len()).filter(|&i| scene.primitives[i].kind() == PrimitiveKind::Text).collect();
    if let Some(legend) = scene.labels.get("legend") {
        labelled.extend(legend);
    }
    labelled.sort_unstable();
    labelled.dedup();
    let boxes: Vec<_> = labelled.iter().map(|&i| scene.primitives[i].bounding_box()).collect();
    let mut overlap = 0.0;
    for a in 0..boxes.len() {
        for b in a + 1..boxes.len() {
            if let Some(x) = boxes[a].intersection(&boxes[b]) {
                overlap += x.area();
            }
        }
    }
    let fraction = overlap / scene.canvas.area();
    if fraction > config.max_overlap_fraction {
        out.push(Violation {
            kind: ViolationKind::Interference,
            detail: format!("text overlap covers {:.4} of the canvas, limit {}", fraction, config.max_overlap_fraction),
        });
    }

    for (i, p) in scene.primitives.iter().enumerate() {
        if let Some(size) = p.font_size() {
            if size < config.min_font_px {
                out.push(Violation { kind: ViolationKind::Illegible, detail: format!("primitive {i} uses {size:.1}px text") });
            }
        }
        let b = p.bounding_box();
        if b.x_min < canvas.x_min - 1e-6 || b.y_min < canvas.y_min - 1e-6 || b.x_max > canvas.x_max + 1e-6 || b.y_max > canvas.y_max + 1e-6
        {
            out.push(Violation {
                kind: ViolationKind::OutOfBounds,
                detail: format!("primitive {i} spans ({:.1}, {:.1})-({:.1}, {:.1})", b.x_min, b.y_min, b.x_max, b.y_max),
            });
        }
    }
    out
}

pub fn aesthetics_gate_with(scene: &SceneGraph, config: &GateConfig, judges: &[&dyn AestheticsJudge]) -> Vec<Violation> {
    let mut out = aesthetics_gate(scene, config);
    for j in judges {
        out.extend(j.judge(scene));
    }
    out
}

/// Every record must agree with its oracle.
pub fn accuracy_gate(records: &[InstructionRecord], spec: &ScenarioSpec) -> Result<(), Rejection> {
    for r in records {
        let reason = match verify_record(r, spec) {
            Ok(Verdict::Ok) => continue,
            Ok(Verdict::Mismatch { expected, got }) => format!("{}: expected {expected}, got {got}", r.id),
            Err(e) => format!("{}: {e}", r.id),
        };
        return Err(Rejection { stage: Stage::Accuracy, reason });
    }
    Ok(())
}

/// Voted answers need at least `min_vote_support` agreeing candidates.
pub fn support_gate(support: usize, config: &GateConfig) -> Result<(), Rejection> {
    if support >= config.min_vote_support {
        Ok(())
    } else {
        Err(Rejection { stage: Stage::Accuracy, reason: format!("vote support {support} below {}", config.min_vote_support) })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Outcome {
    Accepted,
    Rejected(Rejection),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageCounts {
    pub entered: usize,
    pub passed: usize,
    pub pass_rate: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    pub outcomes: BTreeMap<String, Outcome>,
    pub stages: BTreeMap<Stage, StageCounts>,
}

#[derive(Debug, Error, PartialEq)]
#[error("candidate `{0}` was already gated")]
pub struct DuplicateCandidate(pub String);

impl GateReport {
    pub fn insert(&mut self, id: impl Into<String>, outcome: Outcome) -> Result<(), DuplicateCandidate> {
        let id = id.into();
        if self.outcomes.contains_key(&id) {
            return Err(DuplicateCandidate(id));
        }
        self.outcomes.insert(id, outcome);
        self.stages = self.recount();
        Ok(())
    }

    /// Stage tallies derived from the outcomes. Candidates enter a stage only
    /// after passing every earlier one.
    pub fn recount(&self) -> BTreeMap<Stage, StageCounts> {
        let mut out = BTreeMap::new();
        let mut entered = self.outcomes.len();
        for stage in [Stage::Feasibility, Stage::Aesthetics, Stage::Accuracy] {
            let failed = self.outcomes.values().filter(|o| matches!(o, Outcome::Rejected(r) if r.stage == stage)).count();
            let passed = entered - failed;
            let pass_rate = if entered == 0 { 0.0 } else { passed as f64 / entered as f64 };
            out.insert(stage, StageCounts { entered, passed, pass_rate });
            entered = passed;
        }
        out
    }

    pub fn accepted(&self) -> usize {
        self.outcomes.values().filter(|o| matches!(o, Outcome::Accepted)).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{Canvas, Primitive, Rgb, SceneBuilder, StyleSpec, TextAnchor};

    #[test]
    fn default_schedule() {
        assert_eq!(GateConfig::default().font_schedule(), vec![14.0, 11.0, 8.0]);
        assert_eq!(GateConfig { max_retries: 1, ..GateConfig::default() }.font_schedule(), vec![14.0]);
        assert!(GateConfig { max_retries: 0, ..GateConfig::default() }.check().is_err());
        assert!(GateConfig { review_fraction: 0.0, ..GateConfig::default() }.check().is_err());
    }

    fn scene_with(prims: Vec<Primitive>) -> SceneGraph {
        let mut sb = SceneBuilder::new(Canvas::default());
        for p in prims {
            sb.push_role("title", p);
        }
        sb.finish().unwrap()
    }

    #[test]
    fn coincident_titles_interfere() {
        let t = || Primitive::text(320.0, 100.0, "Quarterly revenue", TextAnchor::Middle, StyleSpec::text(Rgb::BLACK, 40.0));
        let v = aesthetics_gate(&scene_with(vec![t(), t()]), &GateConfig::default());
        assert_eq!(v.iter().map(|x| x.kind).collect::<Vec<_>>(), vec![ViolationKind::Interference]);
        assert!(aesthetics_gate(&scene_with(vec![t()]), &GateConfig::default()).is_empty());
    }

    #[test]
    fn edge_label_is_out_of_bounds_and_small_text_illegible() {
        let edge = Primitive::text(630.0, 10.0, "Revenue", TextAnchor::Start, StyleSpec::text(Rgb::BLACK, 14.0));
        let tiny = Primitive::text(100.0, 100.0, "note", TextAnchor::Start, StyleSpec::text(Rgb::BLACK, 6.0));
        let kinds: Vec<ViolationKind> =
            aesthetics_gate(&scene_with(vec![edge, tiny]), &GateConfig::default()).iter().map(|v| v.kind).collect();
        assert_eq!(kinds, vec![ViolationKind::OutOfBounds, ViolationKind::Illegible]);
    }

    #[test]
    fn report_recounts() {
        let mut r = GateReport::default();
        r.insert("a", Outcome::Accepted).unwrap();
        r.insert("b", Outcome::Rejected(Rejection { stage: Stage::Feasibility, reason: "overflow".into() })).unwrap();
        r.insert("c", Outcome::Rejected(Rejection { stage: Stage::Aesthetics, reason: "interference".into() })).unwrap();
        assert!(r.insert("a", Outcome::Accepted).is_err());
        assert_eq!(r.stages[&Stage::Feasibility], StageCounts { entered: 3, passed: 2, pass_rate: 2.0 / 3.0 });
        assert_eq!(r.stages[&Stage::Aesthetics].passed, 1);
        assert_eq!(r.stages[&Stage::Accuracy], StageCounts { entered: 1, passed: 1, pass_rate: 1.0 });
        assert_eq!(r.accepted(), 1);
        let back: GateReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn support_threshold() {
        assert!(support_gate(2, &GateConfig::default()).is_ok());
        assert_eq!(support_gate(1, &GateConfig::default()).unwrap_err().stage, Stage::Accuracy);
    }
}
