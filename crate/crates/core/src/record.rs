//! Instruction records and the dataset manifest.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::chart::ChartQuery;
use crate::diagram::{FlowQuery, TreeQuery};
use crate::gauge::DialQuery;
use crate::layout::LayoutQuery;
use crate::map::MapQuery;
use crate::puzzle::PuzzleQuery;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Chart,
    Table,
    RoadMap,
    RelationGraph,
    Flowchart,
    VisualPuzzle,
    Dashboard,
    PlanarLayout,
}

impl Scenario {
    pub const ALL: [Scenario; 8] = [
        Scenario::Chart,
        Scenario::Table,
        Scenario::RoadMap,
        Scenario::RelationGraph,
        Scenario::Flowchart,
        Scenario::VisualPuzzle,
        Scenario::Dashboard,
        Scenario::PlanarLayout,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Scenario::Chart => "chart",
            Scenario::Table => "table",
            Scenario::RoadMap => "road_map",
            Scenario::RelationGraph => "relation_graph",
            Scenario::Flowchart => "flowchart",
            Scenario::VisualPuzzle => "visual_puzzle",
            Scenario::Dashboard => "dashboard",
            Scenario::PlanarLayout => "planar_layout",
        }
    }

    /// Numeric answers in these scenarios are scored with the 5% tolerance.
    pub fn tolerant_numeric(self) -> bool {
        matches!(self, Scenario::Chart | Scenario::Table | Scenario::Dashboard)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase().replace('-', "_");
        let found = Scenario::ALL.into_iter().find(|sc| sc.tag() == s);
        found
            .or(match s.as_str() {
                "map" => Some(Scenario::RoadMap),
                "graph" | "relation" => Some(Scenario::RelationGraph),
                "flow" => Some(Scenario::Flowchart),
                "puzzle" => Some(Scenario::VisualPuzzle),
                "gauge" | "dial" => Some(Scenario::Dashboard),
                "layout" | "floorplan" => Some(Scenario::PlanarLayout),
                _ => None,
            })
            .ok_or_else(|| format!("unknown scenario `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerKind {
    Numeric,
    Phrase,
    Sentence,
    LandmarkSequence,
    Choice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

/// Structured description of what a question asks, so its answer can be
/// re-derived from the scenario spec without parsing question text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "q", rename_all = "snake_case")]
pub enum Query {
    Chart(ChartQuery),
    Map(MapQuery),
    Dial(DialQuery),
    Tree(TreeQuery),
    Flow(FlowQuery),
    Puzzle(PuzzleQuery),
    Layout(LayoutQuery),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub generator: String,
    pub seed: u64,
    pub image_id: String,
    pub query: Query,
}

/// A generated question before it is bound to an image and split.
#[derive(Debug, Clone, PartialEq)]
pub struct Draft {
    pub question: String,
    pub answer: String,
    pub alternates: Vec<String>,
    pub answer_kind: AnswerKind,
    pub rationale: Option<String>,
    pub question_type: String,
    pub difficulty: Option<u8>,
    pub query: Query,
}

impl Draft {
    pub fn new(question: impl Into<String>, answer: impl Into<String>, kind: AnswerKind, qtype: &str, query: Query) -> Draft {
        Draft {
            question: question.into(),
            answer: answer.into(),
            alternates: Vec::new(),
            answer_kind: kind,
            rationale: None,
            question_type: qtype.to_string(),
            difficulty: None,
            query,
        }
    }

    pub fn with_rationale(mut self, rationale: impl Into<String>) -> Draft {
        self.rationale = Some(rationale.into());
        self
    }

    pub fn with_alternates<I, S>(mut self, alternates: I) -> Draft
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.alternates = alternates.into_iter().map(Into::into).collect();
        self
    }
}

/// Question types whose records must carry a rationale.
pub const REASONING_TYPES: &[&str] = &[
    "math_reasoning",
    "offset_arithmetic",
    "inverse_reasoning",
    "scale_arithmetic",
    "reasoning",
    "navigation",
    "induction",
    "size_comparison",
];

pub fn requires_rationale(question_type: &str) -> bool {
    REASONING_TYPES.contains(&question_type)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstructionRecord {
    pub id: String,
    pub scenario: Scenario,
    pub image_ref: String,
    pub question: String,
    pub answer: String,
    #[serde(default)]
    pub alternates: Vec<String>,
    pub answer_kind: AnswerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
    pub question_type: String,
    /// Scenario sub-family, e.g. the chart kind or dial family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subtype: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub difficulty: Option<u8>,
    pub split: Split,
    pub provenance: Provenance,
}

impl InstructionRecord {
    /// Record-level invariants.
    pub fn check(&self) -> Result<(), String> {
        if self.id.is_empty() {
            return Err("empty id".into());
        }
        match self.answer_kind {
            AnswerKind::Numeric => {
                let v: f64 =
                    self.answer.trim().parse().map_err(|_| format!("{}: numeric answer `{}` does not parse", self.id, self.answer))?;
                if !v.is_finite() {
                    return Err(format!("{}: numeric answer is not finite", self.id));
                }
            }
            AnswerKind::LandmarkSequence => {
                let names = split_sequence(&self.answer);
                let mut seen = std::collections::HashSet::new();
                if names.is_empty() || !names.iter().all(|n| seen.insert(n.to_lowercase())) {
                    return Err(format!("{}: landmark sequence must be non-empty and unique", self.id));
                }
            }
            _ => {}
        }
        if requires_rationale(&self.question_type) && self.rationale.as_deref().is_none_or(str::is_empty) {
            return Err(format!("{}: {} question without rationale", self.id, self.question_type));
        }
        if matches!(self.difficulty, Some(d) if !(1..=5).contains(&d)) {
            return Err(format!("{}: difficulty out of 1..=5", self.id));
        }
        Ok(())
    }

    /// The canonical answer followed by its alternates, without duplicates.
    pub fn accepted_answers(&self) -> Vec<&str> {
        let mut out: Vec<&str> = vec![self.answer.as_str()];
        for a in &self.alternates {
            if !out.contains(&a.as_str()) {
                out.push(a);
            }
        }
        out
    }
}

pub fn split_sequence(answer: &str) -> Vec<String> {
    answer.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioCounts {
    pub images: usize,
    pub instructions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub schema_version: u32,
    pub landmark_convention: String,
    pub stats: BTreeMap<Scenario, ScenarioCounts>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub schema_version: u32,
    pub records: Vec<InstructionRecord>,
    pub stats: BTreeMap<Scenario, ScenarioCounts>,
}

/// Route answers list the start and end points as well as every intersection passed.
pub const LANDMARK_CONVENTION: &str = "start_and_end_included";

impl Manifest {
    pub fn new(records: Vec<InstructionRecord>) -> Manifest {
        let stats = recount(&records);
        Manifest { schema_version: SCHEMA_VERSION, records, stats }
    }

    pub fn check(&self) -> Result<(), String> {
        let mut ids = std::collections::HashSet::new();
        for r in &self.records {
            if !ids.insert(r.id.as_str()) {
                return Err(format!("duplicate record id {}", r.id));
            }
            r.check()?;
        }
        if self.stats != recount(&self.records) {
            return Err("manifest stats disagree with a recount of its records".into());
        }
        Ok(())
    }

    /// Line-delimited JSON: one header object, then one record per line.
    pub fn to_jsonl(&self) -> String {
        let header = ManifestHeader {
            schema_version: self.schema_version,
            landmark_convention: LANDMARK_CONVENTION.to_string(),
            stats: self.stats.clone(),
        };
        let mut out = serde_json::to_string(&header).expect("header serializes");
        out.push('\n');
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Manifest, ManifestError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines.next().ok_or(ManifestError::Empty)?;
        let header: ManifestHeader = serde_json::from_str(first).map_err(|e| ManifestError::Parse { line: 1, message: e.to_string() })?;
        if header.schema_version != SCHEMA_VERSION {
            return Err(ManifestError::SchemaMismatch { found: header.schema_version, expected: SCHEMA_VERSION });
        }
        let mut records = Vec::new();
        for (n, line) in lines {
            let r: InstructionRecord =
                serde_json::from_str(line).map_err(|e| ManifestError::Parse { line: n + 1, message: e.to_string() })?;
            records.push(r);
        }
        Ok(Manifest { schema_version: header.schema_version, records, stats: header.stats })
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ManifestError {
    #[error("manifest is empty")]
    Empty,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("schema version {found} does not match supported version {expected}")]
    SchemaMismatch { found: u32, expected: u32 },
}

pub fn recount(records: &[InstructionRecord]) -> BTreeMap<Scenario, ScenarioCounts> {
    let mut stats: BTreeMap<Scenario, ScenarioCounts> = BTreeMap::new();
    let mut images: BTreeMap<Scenario, std::collections::BTreeSet<&str>> = BTreeMap::new();
    for r in records {
        stats.entry(r.scenario).or_default().instructions += 1;
        images.entry(r.scenario).or_default().insert(r.image_ref.as_str());
    }
    for (sc, set) in images {
        stats.entry(sc).or_default().images = set.len();
    }
    stats
}
